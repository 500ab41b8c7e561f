#ifndef OCTOMIDI_OCTUPLE_H_
#define OCTOMIDI_OCTUPLE_H_

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "octomidi/midi_io.h"

namespace octomidi {

enum class Field : int {
  kTimeSig = 0,
  kTempo,
  kBar,
  kPosition,
  kInstrument,
  kPitch,
  kDuration,
  kVelocity,
};

inline constexpr int kNumFields = 8;

inline constexpr std::array<Field, kNumFields> kAllFields = {
    Field::kTimeSig, Field::kTempo,      Field::kBar,      Field::kPosition,
    Field::kInstrument, Field::kPitch, Field::kDuration, Field::kVelocity};

std::string_view field_name(Field field);

// Special ids shared by every field. Value ids start at kFirstValueId.
inline constexpr int32_t kPadId = 0;
inline constexpr int32_t kBosId = 1;
inline constexpr int32_t kEosId = 2;
inline constexpr int32_t kMaskId = 3;
inline constexpr int32_t kFirstValueId = 4;

// Quantization grid: one unit is a 64th note, 16 units per quarter.
inline constexpr int kUnitsPerQuarter = 16;
inline constexpr int kMaxBar = 255;
inline constexpr int kMaxPosition = 127;
inline constexpr int kMaxDuration = 128;
inline constexpr int kTempoBins = 32;
inline constexpr int kVelocityBins = 32;
inline constexpr double kMinTempo = 16.0;
inline constexpr double kMaxTempo = 256.0;

struct OctupleToken {
  std::array<int32_t, kNumFields> ids{};

  int32_t& operator[](Field f) { return ids[static_cast<size_t>(f)]; }
  int32_t operator[](Field f) const { return ids[static_cast<size_t>(f)]; }

  static OctupleToken filled(int32_t id) {
    OctupleToken t;
    t.ids.fill(id);
    return t;
  }

  // All eight ids are value ids.
  bool is_musical() const;
  // All eight ids equal PAD, or all BOS, or all EOS.
  bool is_special() const;
  bool has_mask() const;

  auto operator<=>(const OctupleToken&) const = default;
};

struct Provenance {
  std::string source;
  int64_t segment = 0;
  int64_t pad = 0;  // PAD tokens the model adds to reach the window length

  bool operator==(const Provenance&) const = default;
};

struct TokenSequence {
  std::vector<OctupleToken> tokens;
  Provenance provenance;

  size_t size() const { return tokens.size(); }
  bool empty() const { return tokens.empty(); }
  bool operator==(const TokenSequence&) const = default;
};

struct TimeSignature {
  int numerator = 4;
  int denominator = 4;

  bool operator==(const TimeSignature&) const = default;
};

// Vocabulary of one field: ids 0..3 are special, ids 4.. map one-to-one onto
// the integer values [min_value, min_value + cardinality).
//
//   field        values                          cardinality
//   TimeSig      (numerator-1)*4 + log2(den)-1   64  (num 1..16, den 2..16)
//   Tempo        tempo bin                       32
//   Bar          bar index                       256
//   Position     64ths from bar start            128
//   Instrument   0 (piano)                       1
//   Pitch        MIDI pitch                      128
//   Duration     64ths, 1..128                   128
//   Velocity     velocity / 4                    32
class FieldVocab {
 public:
  static const FieldVocab& of(Field field);

  Field field() const { return field_; }
  int32_t size() const { return kFirstValueId + cardinality_; }
  int32_t cardinality() const { return cardinality_; }
  int32_t min_value() const { return min_value_; }
  int32_t max_value() const { return min_value_ + cardinality_ - 1; }

  // Throws Error(kOutOfVocabulary) for special or unknown ids.
  int32_t value(int32_t id) const;
  // Throws Error(kOutOfVocabulary) for values outside the field's value set.
  int32_t id(int32_t value) const;

 private:
  FieldVocab(Field field, int32_t min_value, int32_t cardinality)
      : field_(field), min_value_(min_value), cardinality_(cardinality) {}

  Field field_;
  int32_t min_value_;
  int32_t cardinality_;
};

// Throws Error(kUnsupportedTimeSig) outside numerator 1..16, denominator
// {2,4,8,16}.
int timesig_index(TimeSignature ts);
TimeSignature timesig_from_index(int index);
// Bar length in 64th notes.
int bar_units(TimeSignature ts);

int tempo_bin(double bpm);
double tempo_bin_center(int bin);
int velocity_bin(int velocity);
int velocity_bin_center(int bin);

struct EncodeStats {
  int64_t notes = 0;
  int64_t durations_clamped = 0;     // longer than two whole notes
  int64_t durations_rounded_up = 0;  // shorter than half a 64th
  int64_t tempos_clamped = 0;        // outside [16, 256] BPM

  EncodeStats& operator+=(const EncodeStats& other);
};

struct EncodedScore {
  // Bar ids are not range checked: bar values past 255 produce ids past the
  // vocabulary, so callers either split (see the pipeline) or validate.
  std::vector<OctupleToken> tokens;
  // note_index[i] is the index in Score::notes of the note behind tokens[i].
  std::vector<size_t> note_index;
  EncodeStats stats;
};

// Encoding without the bar limit, for callers that segment long pieces.
EncodedScore encode_notes(const Score& score);

// One token per note, ordered by (bar, position, pitch). Throws
// Error(kUnsupportedTimeSig) or Error(kBarOverflow).
TokenSequence encode_score(const Score& score, EncodeStats* stats = nullptr);

// Inverse on the quantized grid. Tempo and velocity land on bin centers;
// notes get channel 0, program 0. Special tokens are skipped. Throws
// Error(kMaskedTokenPresent). ticks_per_quarter must be a multiple of 16.
Score decode_tokens(const TokenSequence& seq, int ticks_per_quarter = 480);

// Throws Error(kOutOfVocabulary) if any id is out of its field's range, or
// the token mixes special and value ids other than MASK.
void validate_token(const OctupleToken& token);

// Duration of a musical token in 64ths.
int token_duration(const OctupleToken& token);

}  // namespace octomidi

#endif  // OCTOMIDI_OCTUPLE_H_
