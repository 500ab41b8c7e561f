#ifndef OCTOMIDI_CORRUPTION_H_
#define OCTOMIDI_CORRUPTION_H_

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "octomidi/octuple.h"
#include "octomidi/rng.h"
#include "octomidi/selection.h"

namespace octomidi {

enum class CorruptionKind {
  kTokenMasking = 0,
  kTokenDeletion,
  kTextInfilling,
  kSentencePermutation,
  kDocumentRotation,
};

inline constexpr int kNumKinds = 5;
inline constexpr std::array<CorruptionKind, kNumKinds> kAllKinds = {
    CorruptionKind::kTokenMasking, CorruptionKind::kTokenDeletion, CorruptionKind::kTextInfilling,
    CorruptionKind::kSentencePermutation, CorruptionKind::kDocumentRotation};

std::string_view kind_name(CorruptionKind kind);
CorruptionKind parse_kind(std::string_view name);

// Selection methods each transformation accepts.
std::span<const SelectionMethod> allowed_methods(CorruptionKind kind);
bool is_allowed(CorruptionKind kind, SelectionMethod method);

struct CorruptionPair {
  TokenSequence source;  // corrupted
  TokenSequence target;  // pristine input
  CorruptionKind kind = CorruptionKind::kTokenMasking;
  SelectionMethod method = kOctupleToken;
  uint64_t seed = 0;
  // Masking, deletion and infilling: the selection. Permutation: the
  // segments in their new order. Rotation: unset.
  std::optional<SelectionMask> mask;
  std::vector<Span> segments;
  size_t rotation = 0;
};

struct CorruptionOptions {
  // Recompute bar ids after permutation/rotation so they run 0, 1, ... in
  // the new order (saturating at 255). Off reproduces the raw shuffle.
  bool renumber_bars = true;
  double infill_mean_span = 3.0;
  // Segment count for Octuple-Token permutation; 0 means the bar count.
  size_t permutation_segments = 0;
};

// Replaces every selected cell with MASK.
CorruptionPair mask_tokens(const TokenSequence& seq, SelectionMethod method, double ratio, Rng& rng);
CorruptionPair apply_masking(const TokenSequence& seq, SelectionMask mask);

// Removes every selected token. Only token-granularity methods.
CorruptionPair delete_tokens(const TokenSequence& seq, SelectionMethod method, double prob, Rng& rng);
CorruptionPair apply_deletion(const TokenSequence& seq, SelectionMask mask);

// Replaces each selected span with one all-MASK token.
CorruptionPair infill_spans(const TokenSequence& seq, SelectionMethod method, double ratio, Rng& rng,
                            const CorruptionOptions& options = {});
CorruptionPair apply_infilling(const TokenSequence& seq, SelectionMask mask);

// Shuffles bars (Bar-Token) or randomly split segments (Octuple-Token).
// Special tokens keep their positions.
CorruptionPair permute_sentences(const TokenSequence& seq, SelectionMethod method, Rng& rng,
                                 const CorruptionOptions& options = {});

// Rotates the musical tokens so that a uniformly drawn token comes first.
CorruptionPair rotate_document(const TokenSequence& seq, Rng& rng,
                               const CorruptionOptions& options = {});
CorruptionPair rotate_by(const TokenSequence& seq, size_t k, const CorruptionOptions& options = {});

// Rewrites bar ids to be non-decreasing from 0, starting a new bar whenever
// the original bar id changes between neighbours.
void renumber_bars(std::vector<OctupleToken>& tokens);

struct CorruptionConfig {
  std::array<double, kNumKinds> kind_weights = {1, 1, 1, 1, 1};
  // Empty entry means every allowed method, drawn uniformly.
  std::array<std::vector<SelectionMethod>, kNumKinds> methods;
  double masking_ratio = 0.15;
  double deletion_ratio = 0.15;
  double infilling_ratio = 0.15;
  CorruptionOptions options;

  // Enables exactly the listed kinds.
  void enable_only(std::span<const CorruptionKind> kinds);
  // Throws Error(kInvalidConfig) or Error(kMethodNotAllowed).
  void validate() const;
};

// Draws a kind by weight, then a method uniformly among the configured ones,
// and dispatches. All randomness comes from `seed`.
CorruptionPair corrupt(const TokenSequence& seq, uint64_t seed, const CorruptionConfig& config);

// Pair wire format:
//
//   @pair kind=<K> method=<M> seed=<S> src_len=<a> tgt_len=<b>
//   <a source token lines>
//   <b target token lines>
//   <blank line>
struct PairRecord {
  CorruptionKind kind = CorruptionKind::kTokenMasking;
  SelectionMethod method = kOctupleToken;
  uint64_t seed = 0;
  std::vector<OctupleToken> source;
  std::vector<OctupleToken> target;

  bool operator==(const PairRecord&) const = default;
};

PairRecord to_record(const CorruptionPair& pair);
void write_pair(std::ostream& out, const CorruptionPair& pair);
void write_record(std::ostream& out, const PairRecord& record);
// Throws Error(kFormatError) on any deviation from the format.
std::vector<PairRecord> read_pairs(std::istream& in);

}  // namespace octomidi

#endif  // OCTOMIDI_CORRUPTION_H_
