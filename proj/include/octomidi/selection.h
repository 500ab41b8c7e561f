#ifndef OCTOMIDI_SELECTION_H_
#define OCTOMIDI_SELECTION_H_

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "octomidi/octuple.h"
#include "octomidi/rng.h"

namespace octomidi {

// Time span of one selected object.
enum class Level { kOctuple, kBar, kNBar };
// Whether an object is one field of a token or the whole token.
enum class Granularity { kElement, kToken };

struct SelectionMethod {
  Level level = Level::kOctuple;
  Granularity granularity = Granularity::kToken;

  bool operator==(const SelectionMethod&) const = default;
};

inline constexpr SelectionMethod kOctupleElement{Level::kOctuple, Granularity::kElement};
inline constexpr SelectionMethod kOctupleToken{Level::kOctuple, Granularity::kToken};
inline constexpr SelectionMethod kBarElement{Level::kBar, Granularity::kElement};
inline constexpr SelectionMethod kBarToken{Level::kBar, Granularity::kToken};
inline constexpr SelectionMethod kNBarElement{Level::kNBar, Granularity::kElement};
inline constexpr SelectionMethod kNBarToken{Level::kNBar, Granularity::kToken};

inline constexpr std::array<SelectionMethod, 6> kAllMethods = {
    kOctupleElement, kOctupleToken, kBarElement, kBarToken, kNBarElement, kNBarToken};

// "Octuple-Element", "Bar-Token", "NBar-Token", ...
std::string method_name(SelectionMethod method);
// Throws Error(kFormatError) for unknown names.
SelectionMethod parse_method(std::string_view name);

// A run of consecutive tokens. field < 0 means whole tokens; otherwise the
// span covers one field column.
struct Span {
  size_t start = 0;
  size_t length = 0;
  int field = -1;

  bool operator==(const Span&) const = default;
};

// L x 8 boolean grid of corruption targets, plus the spans that produced it
// in draw order.
class SelectionMask {
 public:
  SelectionMask() = default;
  SelectionMask(size_t length, SelectionMethod method, size_t musical_tokens);

  size_t length() const { return rows_.size(); }
  SelectionMethod method() const { return method_; }

  bool get(size_t row, Field field) const {
    return (rows_[row] >> static_cast<int>(field)) & 1;
  }
  void set(size_t row, Field field);
  void set_row(size_t row);
  uint8_t row_bits(size_t row) const { return rows_[row]; }
  bool row_full(size_t row) const { return rows_[row] == 0xFF; }
  bool row_any(size_t row) const { return rows_[row] != 0; }

  size_t selected_cells() const { return selected_; }
  size_t full_rows() const;
  // Selected cells over the cells of musical tokens.
  double coverage() const;

  const std::vector<Span>& spans() const { return spans_; }
  void add_span(Span span) { spans_.push_back(span); }

  // One line of eight '0'/'1' characters per token, field order as in Field.
  std::string to_text() const;

 private:
  std::vector<uint8_t> rows_;
  SelectionMethod method_;
  size_t musical_cells_ = 0;
  size_t selected_ = 0;
  std::vector<Span> spans_;
};

inline constexpr int kMinSpanUnits = 1;
inline constexpr int kMaxSpanUnits = 128;

// One n-Bar draw: start token p, threshold m in 64ths, resulting count n.
struct SpanDraw {
  size_t p = 0;
  int m = 0;
  size_t n = 0;
};

// Smallest n >= 1 such that the durations of tokens p .. p+n-1 sum to at
// least m 64ths (m/64 of a whole note). The run stops early at the end of
// the sequence or at the first non-musical token.
//
// Throws Error(kBadIndex) when p is out of range or not musical, and
// Error(kBadM) when m is outside [1, 128].
SpanDraw nbar_span(const TokenSequence& seq, size_t p, int m);

// Draws objects for `method` until the selected fraction of musical cells
// first reaches `ratio` (the last object may overshoot).
//
//   Octuple-Element  single cells, without replacement
//   Octuple-Token    single tokens, without replacement
//   Bar-Element      (bar, field) pairs: one field column of a whole bar
//   Bar-Token        whole bars
//   NBar-Element     a uniformly drawn field over an n-Bar span
//   NBar-Token       whole tokens over an n-Bar span
//
// n-Bar spans start at a uniformly drawn unselected position, use m uniform
// in [1, 128], and are cut short where they run into an already selected
// object, so spans never overlap. Special tokens are never selected.
//
// Throws Error(kEmptySequence) without musical tokens and Error(kOutOfRange)
// unless 0 < ratio < 1.
SelectionMask select(const TokenSequence& seq, SelectionMethod method, double ratio, Rng& rng);

// n-Bar selection from explicit draws, applied in order with the same
// truncation rules as select(). `field` is ignored for token granularity.
struct ForcedDraw {
  size_t p = 0;
  int m = 1;
  Field field = Field::kPitch;
};
SelectionMask select_nbar_forced(const TokenSequence& seq, Granularity granularity,
                                 std::span<const ForcedDraw> draws);

// Octuple-Token spans with Poisson(mean_length) lengths clamped to
// [1, free run from the start], drawn until `ratio` of the musical tokens is
// covered. Used by text infilling.
SelectionMask select_poisson_spans(const TokenSequence& seq, double ratio, double mean_length,
                                   Rng& rng);

// Maximal runs of consecutive musical tokens sharing a bar id.
std::vector<Span> bar_runs(const TokenSequence& seq);

}  // namespace octomidi

#endif  // OCTOMIDI_SELECTION_H_
