#include "octomidi/octuple.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "octomidi/error.h"
#include "test_util.h"

namespace octomidi {
namespace {

using testing::make_token;
using testing::value_of;

template <class Fn>
ErrorCode code_of(Fn fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorCode::kIoError;
}

Score one_note_score(NoteEvent n) {
  Score s;
  s.notes.push_back(n);
  canonicalize(s);
  return s;
}

TEST(FieldVocabTest, Sizes) {
  const std::pair<Field, int> sizes[] = {
      {Field::kTimeSig, 68}, {Field::kTempo, 36},   {Field::kBar, 260},      {Field::kPosition, 132},
      {Field::kInstrument, 5}, {Field::kPitch, 132}, {Field::kDuration, 132}, {Field::kVelocity, 36}};
  for (auto [f, size] : sizes) EXPECT_EQ(FieldVocab::of(f).size(), size) << field_name(f);
}

TEST(FieldVocabTest, OffsetByFourLayout) {
  const auto& pitch = FieldVocab::of(Field::kPitch);
  EXPECT_EQ(pitch.value(4), 0);
  EXPECT_EQ(pitch.id(127), 131);
  const auto& dur = FieldVocab::of(Field::kDuration);
  EXPECT_EQ(dur.id(1), 4);
  EXPECT_EQ(dur.id(128), 131);
  EXPECT_EQ(dur.value(131), 128);
}

TEST(FieldVocabTest, BijectionAndRejections) {
  for (Field f : kAllFields) {
    const auto& v = FieldVocab::of(f);
    for (int32_t id = kFirstValueId; id < v.size(); ++id) EXPECT_EQ(v.id(v.value(id)), id);
    for (int32_t id : {kPadId, kBosId, kEosId, kMaskId, v.size()}) {
      EXPECT_EQ(code_of([&] { v.value(id); }), ErrorCode::kOutOfVocabulary);
    }
    EXPECT_EQ(code_of([&] { v.id(v.max_value() + 1); }), ErrorCode::kOutOfVocabulary);
    EXPECT_EQ(code_of([&] { v.id(v.min_value() - 1); }), ErrorCode::kOutOfVocabulary);
  }
}

TEST(QuantizeTest, TempoBins) {
  EXPECT_EQ(tempo_bin(16), 0);
  EXPECT_EQ(tempo_bin(256), 31);
  EXPECT_EQ(tempo_bin(5), 0);
  EXPECT_EQ(tempo_bin(900), 31);
  EXPECT_EQ(tempo_bin(120), 23);  // 31 * (log2 120 - 4) / 4 = 22.53
  EXPECT_EQ(tempo_bin(60), 15);   // 14.78
  int prev = 0;
  for (int bpm = 16; bpm <= 256; ++bpm) {
    const int b = tempo_bin(bpm);
    EXPECT_GE(b, prev);
    prev = b;
  }
  for (int b = 0; b < kTempoBins; ++b) EXPECT_EQ(tempo_bin(tempo_bin_center(b)), b);
}

TEST(QuantizeTest, VelocityBins) {
  for (int v = 0; v < 128; ++v) {
    EXPECT_EQ(velocity_bin(v), v / 4);
    EXPECT_EQ(velocity_bin(velocity_bin_center(velocity_bin(v))), velocity_bin(v));
  }
  EXPECT_EQ(velocity_bin(64), 16);
}

TEST(QuantizeTest, TimeSignatures) {
  std::set<int> seen;
  for (int num = 1; num <= 16; ++num) {
    for (int den : {2, 4, 8, 16}) {
      const int idx = timesig_index({num, den});
      EXPECT_TRUE(idx >= 0 && idx < 64);
      seen.insert(idx);
      EXPECT_EQ(timesig_from_index(idx), (TimeSignature{num, den}));
    }
  }
  EXPECT_EQ(seen.size(), 64u);
  EXPECT_EQ(bar_units({4, 4}), 64);
  EXPECT_EQ(bar_units({3, 4}), 48);
  EXPECT_EQ(bar_units({6, 8}), 48);
  EXPECT_EQ(bar_units({7, 16}), 28);
  for (TimeSignature ts : {TimeSignature{4, 3}, {4, 32}, {17, 4}, {0, 4}, {4, 1}}) {
    EXPECT_EQ(code_of([&] { timesig_index(ts); }), ErrorCode::kUnsupportedTimeSig);
  }
}

TEST(EncodeTest, SingleQuarterNote) {
  TokenSequence seq = encode_score(one_note_score({0, 480, 60, 64, 0, 0}));
  ASSERT_EQ(seq.size(), 1u);
  const auto& t = seq.tokens[0];
  EXPECT_EQ(timesig_from_index(value_of(t, Field::kTimeSig)), (TimeSignature{4, 4}));
  EXPECT_EQ(value_of(t, Field::kTempo), tempo_bin(120));
  EXPECT_EQ(value_of(t, Field::kBar), 0);
  EXPECT_EQ(value_of(t, Field::kPosition), 0);
  EXPECT_EQ(value_of(t, Field::kInstrument), 0);
  EXPECT_EQ(value_of(t, Field::kPitch), 60);
  EXPECT_EQ(value_of(t, Field::kDuration), 16);
  EXPECT_EQ(value_of(t, Field::kVelocity), velocity_bin(64));
  EXPECT_EQ(t.ids, (std::array<int32_t, 8>{4 + 13, 4 + 23, 4, 4, 4, 64, 19, 20}));
}

TEST(EncodeTest, EmptyScore) {
  Score s;
  canonicalize(s);
  EXPECT_TRUE(encode_score(s).empty());
}

// Positions from plain arithmetic: 64 units per whole note, 4 quarters of
// 480 ticks per 4/4 bar.
TEST(EncodeTest, EightEighthNotesFillOneBar) {
  Score s;
  for (int i = 0; i < 8; ++i) s.notes.push_back({i * 240, 240, 60 + i, 80, 0, 0});
  canonicalize(s);
  TokenSequence seq = encode_score(s);
  ASSERT_EQ(seq.size(), 8u);
  for (int i = 0; i < 8; ++i) {
    const int expected_pos = (i * 240) * 64 / (4 * 480);
    EXPECT_EQ(value_of(seq.tokens[i], Field::kPosition), expected_pos);
    EXPECT_EQ(value_of(seq.tokens[i], Field::kPosition), i * 8);
    EXPECT_EQ(value_of(seq.tokens[i], Field::kDuration), 8);
    EXPECT_EQ(value_of(seq.tokens[i], Field::kBar), 0);
  }
}

TEST(EncodeTest, OrderIsBarPositionPitch) {
  Score s;
  s.notes = {{1920, 100, 50, 64, 0, 0}, {0, 100, 70, 64, 0, 0}, {0, 100, 40, 64, 1, 0},
             {120, 100, 30, 64, 0, 0}};
  canonicalize(s);
  TokenSequence seq = encode_score(s);
  std::vector<std::array<int, 3>> keys;
  for (const auto& t : seq.tokens) {
    keys.push_back({value_of(t, Field::kBar), value_of(t, Field::kPosition), value_of(t, Field::kPitch)});
  }
  EXPECT_EQ(keys, (std::vector<std::array<int, 3>>{{0, 0, 40}, {0, 0, 70}, {0, 4, 30}, {1, 0, 50}}));
}

TEST(EncodeTest, TimeSignatureChangesAndBars) {
  Score s;
  s.timesigs = {{0, 3, 4}, {1440 * 2, 6, 8}};  // two 3/4 bars, then 6/8
  s.notes = {{0, 10, 60, 64, 0, 0}, {1440, 10, 61, 64, 0, 0}, {2880, 10, 62, 64, 0, 0},
             {2880 + 1440 + 240, 10, 63, 64, 0, 0}};
  canonicalize(s);
  TokenSequence seq = encode_score(s);
  ASSERT_EQ(seq.size(), 4u);
  EXPECT_EQ(value_of(seq.tokens[1], Field::kBar), 1);
  EXPECT_EQ(value_of(seq.tokens[2], Field::kBar), 2);
  EXPECT_EQ(timesig_from_index(value_of(seq.tokens[2], Field::kTimeSig)), (TimeSignature{6, 8}));
  EXPECT_EQ(value_of(seq.tokens[3], Field::kBar), 3);
  EXPECT_EQ(value_of(seq.tokens[3], Field::kPosition), 8);
}

TEST(EncodeTest, MidBarSignatureChangeOpensNewBar) {
  Score s;
  s.timesigs = {{0, 4, 4}, {960, 3, 4}};
  s.notes = {{0, 10, 60, 64, 0, 0}, {960, 10, 61, 64, 0, 0}};
  canonicalize(s);
  TokenSequence seq = encode_score(s);
  EXPECT_EQ(value_of(seq.tokens[1], Field::kBar), 1);
  EXPECT_EQ(value_of(seq.tokens[1], Field::kPosition), 0);
}

TEST(EncodeTest, TempoIsLatestAtOrBeforeQuantizedOnset) {
  Score s;
  s.tempos = {{0, 60}, {480, 200}};
  // Ticks 449 and 479 round to units 15 and 16; the change at 480 is unit 16.
  s.notes = {{0, 10, 60, 64, 0, 0}, {449, 10, 61, 64, 0, 0}, {479, 10, 62, 64, 0, 0}, {480, 10, 63, 64, 0, 0}};
  canonicalize(s);
  TokenSequence seq = encode_score(s);
  ASSERT_EQ(seq.size(), 4u);
  EXPECT_EQ(value_of(seq.tokens[0], Field::kTempo), tempo_bin(60));
  EXPECT_EQ(value_of(seq.tokens[1], Field::kPosition), 15);
  EXPECT_EQ(value_of(seq.tokens[1], Field::kTempo), tempo_bin(60));
  EXPECT_EQ(value_of(seq.tokens[2], Field::kPosition), 16);
  EXPECT_EQ(value_of(seq.tokens[2], Field::kTempo), tempo_bin(200));
  EXPECT_EQ(value_of(seq.tokens[3], Field::kTempo), tempo_bin(200));
}

TEST(EncodeTest, Errors) {
  Score far = one_note_score({256LL * 1920, 10, 60, 64, 0, 0});
  EXPECT_EQ(code_of([&] { encode_score(far); }), ErrorCode::kBarOverflow);
  EXPECT_NO_THROW(encode_score(one_note_score({255LL * 1920, 10, 60, 64, 0, 0})));

  Score odd = one_note_score({0, 10, 60, 64, 0, 0});
  odd.timesigs = {{0, 4, 32}};
  EXPECT_EQ(code_of([&] { encode_score(odd); }), ErrorCode::kUnsupportedTimeSig);
  Score wide = odd;
  wide.timesigs = {{0, 16, 4}};  // 256 units does not fit the position grid
  EXPECT_EQ(code_of([&] { encode_score(wide); }), ErrorCode::kUnsupportedTimeSig);
}

TEST(EncodeTest, DurationClampAndRoundUp) {
  Score s;
  s.notes = {{0, 5000, 60, 64, 0, 0}, {0, 3, 61, 64, 0, 0}, {0, 15, 62, 64, 0, 0}};
  canonicalize(s);
  EncodeStats st;
  TokenSequence seq = encode_score(s, &st);
  EXPECT_EQ(value_of(seq.tokens[0], Field::kDuration), 128);
  EXPECT_EQ(value_of(seq.tokens[1], Field::kDuration), 1);
  EXPECT_EQ(value_of(seq.tokens[2], Field::kDuration), 1);
  EXPECT_EQ(st.durations_clamped, 1);
  EXPECT_EQ(st.durations_rounded_up, 1);
  EXPECT_EQ(st.notes, 3);
}

TEST(EncodeTest, TokensAreValidAndDisjointPerField) {
  Rng rng(17);
  for (int i = 0; i < 100; ++i) {
    for (const auto& t : encode_score(testing::random_score(rng)).tokens) {
      EXPECT_TRUE(t.is_musical());
      EXPECT_NO_THROW(validate_token(t));
      for (Field f : kAllFields) EXPECT_LT(t[f], FieldVocab::of(f).size());
    }
  }
}

TEST(DecodeTest, EmptySequence) {
  Score s = decode_tokens(TokenSequence{});
  EXPECT_TRUE(s.notes.empty());
}

TEST(DecodeTest, SingleQuarterNote) {
  TokenSequence seq;
  seq.tokens.push_back(make_token(0, 0, 60, 16));
  Score s = decode_tokens(seq, 480);
  ASSERT_EQ(s.notes.size(), 1u);
  EXPECT_EQ(s.notes[0].onset_ticks, 0);
  EXPECT_EQ(s.notes[0].duration_ticks, 480);
  EXPECT_EQ(s.notes[0].pitch, 60);
  EXPECT_EQ(s.notes[0].velocity, 66);  // center of bin 16
  EXPECT_EQ(encode_score(s), seq);
}

TEST(DecodeTest, MaskedTokenRejected) {
  TokenSequence seq;
  seq.tokens.push_back(make_token(0, 0, 60, 16));
  seq.tokens[0][Field::kPitch] = kMaskId;
  EXPECT_EQ(code_of([&] { decode_tokens(seq); }), ErrorCode::kMaskedTokenPresent);
}

TEST(DecodeTest, SpecialTokensSkipped) {
  TokenSequence seq;
  seq.tokens.push_back(OctupleToken::filled(kBosId));
  seq.tokens.push_back(make_token(0, 0, 60, 16));
  seq.tokens.push_back(OctupleToken::filled(kEosId));
  seq.tokens.push_back(OctupleToken::filled(kPadId));
  EXPECT_EQ(decode_tokens(seq).notes.size(), 1u);
}

// Random token sequences in canonical form: one signature per bar, one
// tempo per onset, positions inside the bar, sorted by (bar, pos, pitch).
TokenSequence random_tokens(Rng& rng, int count) {
  static const TimeSignature kSigs[] = {{4, 4}, {3, 4}, {6, 8}, {5, 8}, {2, 2}, {7, 4}, {1, 16}};
  std::vector<TimeSignature> bar_sig;
  const int bars = static_cast<int>(rng.uniform_int(1, 200));
  for (int b = 0; b < bars; ++b) {
    bar_sig.push_back(b > 0 && rng.uniform(3) ? bar_sig.back() : kSigs[rng.uniform(std::size(kSigs))]);
  }
  std::vector<std::array<int, 5>> raw;  // bar, pos, pitch, dur, vel
  for (int i = 0; i < count; ++i) {
    const int b = static_cast<int>(rng.uniform(bars));
    raw.push_back({b, static_cast<int>(rng.uniform(bar_units(bar_sig[b]))),
                   static_cast<int>(rng.uniform(128)), static_cast<int>(rng.uniform_int(1, 128)),
                   static_cast<int>(rng.uniform(128))});
  }
  std::sort(raw.begin(), raw.end());
  TokenSequence seq;
  std::array<int, 2> last_onset = {-1, -1};
  int tempo = 0;
  for (const auto& r : raw) {
    if (std::array<int, 2>{r[0], r[1]} != last_onset) {
      tempo = static_cast<int>(rng.uniform(kTempoBins));
      last_onset = {r[0], r[1]};
    }
    seq.tokens.push_back(
        make_token(r[0], r[1], r[2], r[3], r[4], bar_sig[r[0]], tempo_bin_center(tempo)));
  }
  return seq;
}

TEST(DecodeTest, RandomTokensRoundTrip) {
  Rng rng(99);
  for (int i = 0; i < 20; ++i) {
    TokenSequence seq = random_tokens(rng, 500);
    ASSERT_EQ(encode_score(decode_tokens(seq)), seq) << "case " << i;
  }
}

TEST(DecodeTest, EncodeDecodeEncodeFixedPoint) {
  Rng rng(123);
  for (int i = 0; i < 200; ++i) {
    Score s = testing::random_score(rng);
    TokenSequence once = encode_score(s);
    ASSERT_EQ(encode_score(decode_tokens(once)), once) << "score " << i;
  }
}

TEST(DecodeTest, TicksPerQuarterMustDivide) {
  TokenSequence seq;
  seq.tokens.push_back(make_token(0, 0, 60, 16));
  EXPECT_EQ(code_of([&] { decode_tokens(seq, 100); }), ErrorCode::kOutOfRange);
  EXPECT_EQ(decode_tokens(seq, 96).notes[0].duration_ticks, 96);
}

TEST(TokenTest, Classification) {
  EXPECT_TRUE(OctupleToken::filled(kPadId).is_special());
  EXPECT_TRUE(OctupleToken::filled(kEosId).is_special());
  EXPECT_FALSE(OctupleToken::filled(kMaskId).is_special());
  EXPECT_TRUE(OctupleToken::filled(kMaskId).has_mask());
  OctupleToken mixed = make_token(0, 0, 60, 16);
  EXPECT_TRUE(mixed.is_musical());
  mixed[Field::kBar] = kPadId;
  EXPECT_FALSE(mixed.is_musical());
  EXPECT_EQ(code_of([&] { validate_token(mixed); }), ErrorCode::kOutOfVocabulary);
  OctupleToken masked = make_token(0, 0, 60, 16);
  masked[Field::kVelocity] = kMaskId;
  EXPECT_NO_THROW(validate_token(masked));
  EXPECT_EQ(token_duration(make_token(0, 0, 60, 37)), 37);
}

}  // namespace
}  // namespace octomidi
