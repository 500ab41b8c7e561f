#include "octomidi/octuple.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <tuple>

#include "octomidi/error.h"

namespace octomidi {
namespace {

// round(units) for ticks * 16 / tpq, halves rounded up.
int64_t ticks_to_units(int64_t ticks, int tpq) {
  return (ticks * kUnitsPerQuarter * 2 + tpq) / (2 * int64_t{tpq});
}

struct TimeSigSegment {
  int64_t start_unit;
  int64_t first_bar;
  TimeSignature ts;
  int bar_len;  // 0 when the signature is not representable
};

// Splits the timeline at each time-signature change. A change that falls
// inside a bar closes that bar early and opens a new one.
std::vector<TimeSigSegment> build_segments(const Score& score) {
  std::vector<TimeSigEvent> sigs = score.timesigs;
  if (sigs.empty() || sigs.front().at_ticks > 0) sigs.insert(sigs.begin(), TimeSigEvent{});
  std::vector<TimeSigSegment> segments;
  for (const auto& e : sigs) {
    const int64_t start = ticks_to_units(e.at_ticks, score.ticks_per_quarter);
    TimeSignature ts{e.numerator, e.denominator};
    int len = 0;
    try {
      timesig_index(ts);
      len = bar_units(ts);
    } catch (const Error&) {
      len = 0;
    }
    if (!segments.empty() && segments.back().start_unit == start) {
      segments.back().ts = ts;
      segments.back().bar_len = len;
      continue;
    }
    int64_t first_bar = 0;
    if (!segments.empty()) {
      const auto& prev = segments.back();
      const int64_t span = start - prev.start_unit;
      const int64_t prev_len = prev.bar_len > 0 ? prev.bar_len : 64;
      first_bar = prev.first_bar + (span + prev_len - 1) / prev_len;
    }
    segments.push_back({start, first_bar, ts, len});
  }
  return segments;
}

}  // namespace

std::string_view field_name(Field field) {
  switch (field) {
    case Field::kTimeSig: return "TimeSig";
    case Field::kTempo: return "Tempo";
    case Field::kBar: return "Bar";
    case Field::kPosition: return "Position";
    case Field::kInstrument: return "Instrument";
    case Field::kPitch: return "Pitch";
    case Field::kDuration: return "Duration";
    case Field::kVelocity: return "Velocity";
  }
  return "?";
}

bool OctupleToken::is_musical() const {
  for (size_t f = 0; f < ids.size(); ++f) {
    if (ids[f] < kFirstValueId) return false;
  }
  return true;
}

bool OctupleToken::is_special() const {
  const int32_t first = ids[0];
  if (first != kPadId && first != kBosId && first != kEosId) return false;
  return std::all_of(ids.begin(), ids.end(), [first](int32_t id) { return id == first; });
}

bool OctupleToken::has_mask() const {
  return std::find(ids.begin(), ids.end(), kMaskId) != ids.end();
}

const FieldVocab& FieldVocab::of(Field field) {
  static const std::array<FieldVocab, kNumFields> vocabs = {
      FieldVocab(Field::kTimeSig, 0, 64),
      FieldVocab(Field::kTempo, 0, kTempoBins),
      FieldVocab(Field::kBar, 0, kMaxBar + 1),
      FieldVocab(Field::kPosition, 0, kMaxPosition + 1),
      FieldVocab(Field::kInstrument, 0, 1),
      FieldVocab(Field::kPitch, 0, 128),
      FieldVocab(Field::kDuration, 1, kMaxDuration),
      FieldVocab(Field::kVelocity, 0, kVelocityBins),
  };
  return vocabs[static_cast<size_t>(field)];
}

int32_t FieldVocab::value(int32_t id) const {
  if (id < kFirstValueId || id >= size()) {
    throw Error(ErrorCode::kOutOfVocabulary,
                std::string(field_name(field_)) + " id " + std::to_string(id));
  }
  return min_value_ + (id - kFirstValueId);
}

int32_t FieldVocab::id(int32_t value) const {
  if (value < min_value_ || value > max_value()) {
    throw Error(ErrorCode::kOutOfVocabulary,
                std::string(field_name(field_)) + " value " + std::to_string(value));
  }
  return kFirstValueId + (value - min_value_);
}

int timesig_index(TimeSignature ts) {
  int den_index = -1;
  switch (ts.denominator) {
    case 2: den_index = 0; break;
    case 4: den_index = 1; break;
    case 8: den_index = 2; break;
    case 16: den_index = 3; break;
  }
  if (den_index < 0 || ts.numerator < 1 || ts.numerator > 16) {
    throw Error(ErrorCode::kUnsupportedTimeSig,
                std::to_string(ts.numerator) + "/" + std::to_string(ts.denominator));
  }
  return (ts.numerator - 1) * 4 + den_index;
}

TimeSignature timesig_from_index(int index) {
  if (index < 0 || index >= 64) {
    throw Error(ErrorCode::kOutOfVocabulary, "time signature index " + std::to_string(index));
  }
  return {index / 4 + 1, 2 << (index % 4)};
}

int bar_units(TimeSignature ts) { return 64 * ts.numerator / ts.denominator; }

int tempo_bin(double bpm) {
  const double clamped = std::clamp(bpm, kMinTempo, kMaxTempo);
  const double x = (kTempoBins - 1) * (std::log2(clamped) - 4.0) / 4.0;
  return std::clamp(static_cast<int>(std::lround(x)), 0, kTempoBins - 1);
}

double tempo_bin_center(int bin) {
  return std::exp2(4.0 + 4.0 * bin / (kTempoBins - 1));
}

int velocity_bin(int velocity) { return std::clamp(velocity, 0, 127) / 4; }

int velocity_bin_center(int bin) { return std::clamp(bin, 0, kVelocityBins - 1) * 4 + 2; }

EncodeStats& EncodeStats::operator+=(const EncodeStats& other) {
  notes += other.notes;
  durations_clamped += other.durations_clamped;
  durations_rounded_up += other.durations_rounded_up;
  tempos_clamped += other.tempos_clamped;
  return *this;
}

EncodedScore encode_notes(const Score& score) {
  EncodedScore out;
  if (score.notes.empty()) return out;
  const int tpq = score.ticks_per_quarter;
  const auto segments = build_segments(score);

  std::vector<TempoEvent> tempos = score.tempos;
  std::stable_sort(tempos.begin(), tempos.end(),
                   [](const auto& a, const auto& b) { return a.at_ticks < b.at_ticks; });

  out.tokens.reserve(score.notes.size());
  out.note_index.reserve(score.notes.size());
  for (size_t i = 0; i < score.notes.size(); ++i) {
    const NoteEvent& note = score.notes[i];
    const int64_t onset = ticks_to_units(note.onset_ticks, tpq);
    auto seg = std::upper_bound(segments.begin(), segments.end(), onset,
                                [](int64_t u, const TimeSigSegment& s) { return u < s.start_unit; });
    --seg;  // the first segment starts at or before tick 0
    if (seg->bar_len == 0 || seg->bar_len > kMaxPosition + 1) {
      throw Error(ErrorCode::kUnsupportedTimeSig,
                  std::to_string(seg->ts.numerator) + "/" + std::to_string(seg->ts.denominator) +
                      " governs a note but is outside the vocabulary");
    }
    const int64_t offset = onset - seg->start_unit;
    const int64_t bar = seg->first_bar + offset / seg->bar_len;
    const int64_t position = offset % seg->bar_len;

    // Tempo changes are placed on the unit grid like onsets.
    double bpm = 120.0;
    for (const auto& t : tempos) {
      if (ticks_to_units(t.at_ticks, tpq) > onset) break;
      bpm = t.bpm;
    }
    if (bpm < kMinTempo || bpm > kMaxTempo) ++out.stats.tempos_clamped;

    int64_t dur = ticks_to_units(note.duration_ticks, tpq);
    if (dur < 1) {
      dur = 1;
      ++out.stats.durations_rounded_up;
    } else if (dur > kMaxDuration) {
      dur = kMaxDuration;
      ++out.stats.durations_clamped;
    }

    OctupleToken t;
    t[Field::kTimeSig] = kFirstValueId + timesig_index(seg->ts);
    t[Field::kTempo] = kFirstValueId + tempo_bin(bpm);
    t[Field::kBar] = kFirstValueId + static_cast<int32_t>(bar);
    t[Field::kPosition] = kFirstValueId + static_cast<int32_t>(position);
    t[Field::kInstrument] = kFirstValueId;
    t[Field::kPitch] = kFirstValueId + std::clamp(note.pitch, 0, 127);
    t[Field::kDuration] = kFirstValueId + static_cast<int32_t>(dur) - 1;
    t[Field::kVelocity] = kFirstValueId + velocity_bin(note.velocity);
    out.tokens.push_back(t);
    out.note_index.push_back(i);
  }
  out.stats.notes = static_cast<int64_t>(score.notes.size());

  std::vector<size_t> order(out.tokens.size());
  std::iota(order.begin(), order.end(), size_t{0});
  auto key = [&](size_t i) {
    const auto& t = out.tokens[i];
    return std::make_tuple(t[Field::kBar], t[Field::kPosition], t[Field::kPitch], t.ids,
                           out.note_index[i]);
  };
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return key(a) < key(b); });
  EncodedScore sorted;
  sorted.stats = out.stats;
  for (size_t i : order) {
    sorted.tokens.push_back(out.tokens[i]);
    sorted.note_index.push_back(out.note_index[i]);
  }
  return sorted;
}

TokenSequence encode_score(const Score& score, EncodeStats* stats) {
  EncodedScore encoded = encode_notes(score);
  for (const auto& t : encoded.tokens) {
    if (t[Field::kBar] - kFirstValueId > kMaxBar) {
      throw Error(ErrorCode::kBarOverflow,
                  "bar " + std::to_string(t[Field::kBar] - kFirstValueId) +
                      " exceeds 255; split the score first");
    }
  }
  if (stats) *stats += encoded.stats;
  TokenSequence seq;
  seq.tokens = std::move(encoded.tokens);
  return seq;
}

void validate_token(const OctupleToken& token) {
  if (token.is_special()) return;
  for (Field f : kAllFields) {
    const int32_t id = token[f];
    if (id == kMaskId) continue;
    FieldVocab::of(f).value(id);
  }
}

int token_duration(const OctupleToken& token) {
  return FieldVocab::of(Field::kDuration).value(token[Field::kDuration]);
}

Score decode_tokens(const TokenSequence& seq, int ticks_per_quarter) {
  if (ticks_per_quarter <= 0 || ticks_per_quarter % kUnitsPerQuarter != 0) {
    throw Error(ErrorCode::kOutOfRange, "ticks_per_quarter must be a positive multiple of 16");
  }
  const int64_t ticks_per_unit = ticks_per_quarter / kUnitsPerQuarter;

  std::vector<const OctupleToken*> musical;
  for (const auto& t : seq.tokens) {
    if (t.has_mask()) throw Error(ErrorCode::kMaskedTokenPresent, "cannot decode MASK ids");
    if (t.is_special()) continue;
    validate_token(t);
    musical.push_back(&t);
  }

  Score score;
  score.ticks_per_quarter = ticks_per_quarter;
  if (musical.empty()) {
    canonicalize(score);
    return score;
  }

  const auto& bar_vocab = FieldVocab::of(Field::kBar);
  const auto& ts_vocab = FieldVocab::of(Field::kTimeSig);
  int32_t max_bar = 0;
  for (const auto* t : musical) max_bar = std::max(max_bar, bar_vocab.value((*t)[Field::kBar]));

  // A bar takes the signature of its first token; empty bars inherit.
  std::vector<int> bar_sig(static_cast<size_t>(max_bar) + 1, -1);
  for (const auto* t : musical) {
    auto& sig = bar_sig[static_cast<size_t>(bar_vocab.value((*t)[Field::kBar]))];
    if (sig < 0) sig = ts_vocab.value((*t)[Field::kTimeSig]);
  }
  int current = ts_vocab.value(musical.front()->ids[static_cast<size_t>(Field::kTimeSig)]);
  for (auto& sig : bar_sig) {
    if (sig < 0) sig = current;
    current = sig;
  }

  std::vector<int64_t> bar_start(bar_sig.size());
  int64_t unit = 0;
  for (size_t b = 0; b < bar_sig.size(); ++b) {
    bar_start[b] = unit;
    const TimeSignature ts = timesig_from_index(bar_sig[b]);
    if (b == 0 || bar_sig[b] != bar_sig[b - 1]) {
      score.timesigs.push_back({unit * ticks_per_unit, ts.numerator, ts.denominator});
    }
    unit += bar_units(ts);
  }

  int last_tempo = -1;
  for (const auto* t : musical) {
    const int64_t bar = bar_vocab.value((*t)[Field::kBar]);
    const int64_t pos = FieldVocab::of(Field::kPosition).value((*t)[Field::kPosition]);
    const int64_t onset = (bar_start[static_cast<size_t>(bar)] + pos) * ticks_per_unit;
    const int tempo = FieldVocab::of(Field::kTempo).value((*t)[Field::kTempo]);
    if (tempo != last_tempo) {
      score.tempos.push_back({last_tempo < 0 ? 0 : onset, tempo_bin_center(tempo)});
      last_tempo = tempo;
    }
    NoteEvent note;
    note.onset_ticks = onset;
    note.duration_ticks = token_duration(*t) * ticks_per_unit;
    note.pitch = FieldVocab::of(Field::kPitch).value((*t)[Field::kPitch]);
    note.velocity = velocity_bin_center(FieldVocab::of(Field::kVelocity).value((*t)[Field::kVelocity]));
    score.notes.push_back(note);
  }
  canonicalize(score);
  return score;
}

}  // namespace octomidi
