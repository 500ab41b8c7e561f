#ifndef OCTOMIDI_TESTS_TEST_UTIL_H_
#define OCTOMIDI_TESTS_TEST_UTIL_H_

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "octomidi/midi_io.h"
#include "octomidi/octuple.h"
#include "octomidi/rng.h"

namespace octomidi::testing {

// Musical token from plain values. Defaults: 4/4, tempo bin of 120 BPM,
// velocity 64.
inline OctupleToken make_token(int bar, int pos, int pitch, int dur, int velocity = 64,
                               TimeSignature ts = {4, 4}, double bpm = 120.0) {
  OctupleToken t;
  t[Field::kTimeSig] = FieldVocab::of(Field::kTimeSig).id(timesig_index(ts));
  t[Field::kTempo] = FieldVocab::of(Field::kTempo).id(tempo_bin(bpm));
  t[Field::kBar] = FieldVocab::of(Field::kBar).id(bar);
  t[Field::kPosition] = FieldVocab::of(Field::kPosition).id(pos);
  t[Field::kInstrument] = FieldVocab::of(Field::kInstrument).id(0);
  t[Field::kPitch] = FieldVocab::of(Field::kPitch).id(pitch);
  t[Field::kDuration] = FieldVocab::of(Field::kDuration).id(dur);
  t[Field::kVelocity] = FieldVocab::of(Field::kVelocity).id(velocity_bin(velocity));
  return t;
}

inline int value_of(const OctupleToken& t, Field f) { return FieldVocab::of(f).value(t[f]); }

// n quarter notes, four per 4/4 bar, pitches cycling upward from 60.
inline TokenSequence quarter_stream(size_t n) {
  TokenSequence seq;
  for (size_t i = 0; i < n; ++i) {
    seq.tokens.push_back(make_token(static_cast<int>(i / 4), static_cast<int>(i % 4) * 16,
                                    60 + static_cast<int>(i % 12), 16));
  }
  return seq;
}

// Bars of `per_bar` evenly spaced notes in 4/4, pitches varying per token.
inline TokenSequence bar_stream(int bars, int per_bar) {
  TokenSequence seq;
  const int step = 64 / per_bar;
  for (int b = 0; b < bars; ++b) {
    for (int k = 0; k < per_bar; ++k) {
      seq.tokens.push_back(make_token(b % 256, k * step, 40 + (b * 7 + k * 5) % 60, step));
    }
  }
  return seq;
}

// Hand-rolled SMF assembly, independent of the library writer.
inline void put_vlq(std::vector<uint8_t>& out, uint32_t v) {
  uint8_t buf[5];
  int n = 0;
  buf[n++] = v & 0x7F;
  while (v >>= 7) buf[n++] = 0x80 | (v & 0x7F);
  while (n) out.push_back(buf[--n]);
}

inline void put_be(std::vector<uint8_t>& out, uint32_t v, int bytes) {
  for (int i = bytes - 1; i >= 0; --i) out.push_back((v >> (8 * i)) & 0xFF);
}

inline std::vector<uint8_t> smf_header(int format, int tracks, int division) {
  std::vector<uint8_t> out = {'M', 'T', 'h', 'd', 0, 0, 0, 6};
  put_be(out, format, 2);
  put_be(out, tracks, 2);
  put_be(out, division, 2);
  return out;
}

// Wraps already delta-timed event bytes in an MTrk chunk with end-of-track.
inline std::vector<uint8_t> smf_track(std::vector<uint8_t> events) {
  events.insert(events.end(), {0x00, 0xFF, 0x2F, 0x00});
  std::vector<uint8_t> out = {'M', 'T', 'r', 'k'};
  put_be(out, static_cast<uint32_t>(events.size()), 4);
  out.insert(out.end(), events.begin(), events.end());
  return out;
}

inline std::vector<uint8_t> smf_file(int format, int division,
                                     const std::vector<std::vector<uint8_t>>& track_events) {
  auto out = smf_header(format, static_cast<int>(track_events.size()), division);
  for (const auto& ev : track_events) {
    auto chunk = smf_track(ev);
    out.insert(out.end(), chunk.begin(), chunk.end());
  }
  return out;
}

// Absolute-time note list written as a single-track file: note-ons and
// note-offs sorted by tick, offs first.
inline std::vector<uint8_t> smf_from_notes(const std::vector<NoteEvent>& notes, int division = 480) {
  std::vector<std::tuple<int64_t, int, int, int, int>> ev;  // tick, off?0:1, ch, pitch, vel
  for (const auto& n : notes) {
    ev.emplace_back(n.onset_ticks, 1, n.channel, n.pitch, n.velocity);
    ev.emplace_back(n.onset_ticks + n.duration_ticks, 0, n.channel, n.pitch, 0);
  }
  std::sort(ev.begin(), ev.end());
  std::vector<uint8_t> bytes;
  int64_t now = 0;
  for (const auto& [tick, on, ch, pitch, vel] : ev) {
    put_vlq(bytes, static_cast<uint32_t>(tick - now));
    now = tick;
    bytes.push_back(static_cast<uint8_t>((on ? 0x90 : 0x80) | ch));
    bytes.push_back(static_cast<uint8_t>(pitch));
    bytes.push_back(static_cast<uint8_t>(on ? vel : 64));
  }
  return smf_file(0, division, {bytes});
}

inline void write_bytes(const std::filesystem::path& path, const std::vector<uint8_t>& bytes) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("octomidi_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// Random Score that survives write/parse exactly and encodes without
// error: ticks on a 480 tpq grid, tempos of the form 6e7/k, bar-aligned
// time signatures whose bars fit the position vocabulary, no overlapping
// notes on one channel and pitch, one program per channel.
inline Score random_score(Rng& rng, int max_notes = 60) {
  static const TimeSignature kSigs[] = {{4, 4}, {3, 4}, {2, 4}, {6, 8}, {7, 8}, {5, 4},
                                        {2, 2}, {3, 8}, {12, 16}, {8, 4}};
  Score s;
  s.ticks_per_quarter = 480;
  const int bars = static_cast<int>(rng.uniform_int(1, 24));

  int64_t tick = 0;
  std::vector<int64_t> bar_start;
  std::vector<int64_t> bar_ticks;
  for (int b = 0; b < bars; ++b) {
    if (b == 0 || rng.uniform(4) == 0) {
      TimeSignature ts = kSigs[rng.uniform(std::size(kSigs))];
      if (s.timesigs.empty() || s.timesigs.back().numerator != ts.numerator ||
          s.timesigs.back().denominator != ts.denominator) {
        s.timesigs.push_back({tick, ts.numerator, ts.denominator});
      }
    }
    const auto& ts = s.timesigs.back();
    const int64_t len = 4LL * 480 * ts.numerator / ts.denominator;
    bar_start.push_back(tick);
    bar_ticks.push_back(len);
    tick += len;
  }

  const int tempo_changes = static_cast<int>(rng.uniform(4));
  s.tempos.push_back({0, 6e7 / static_cast<double>(rng.uniform_int(250000, 1500000))});
  for (int i = 0; i < tempo_changes; ++i) {
    int64_t at = static_cast<int64_t>(rng.uniform(static_cast<uint64_t>(tick)));
    s.tempos.push_back({at, 6e7 / static_cast<double>(rng.uniform_int(250000, 1500000))});
  }

  int programs[16];
  for (int& p : programs) p = static_cast<int>(rng.uniform(128));
  const int n = static_cast<int>(rng.uniform_int(0, max_notes));
  for (int i = 0; i < n; ++i) {
    NoteEvent note;
    const int b = static_cast<int>(rng.uniform(static_cast<uint64_t>(bars)));
    note.onset_ticks = bar_start[b] + static_cast<int64_t>(rng.uniform(static_cast<uint64_t>(bar_ticks[b])));
    note.duration_ticks = rng.uniform_int(1, 4000);
    note.pitch = static_cast<int>(rng.uniform(128));
    note.velocity = static_cast<int>(rng.uniform_int(1, 127));
    note.channel = static_cast<int>(rng.uniform(4));
    note.program = programs[note.channel];
    s.notes.push_back(note);
  }

  // Resolve same channel+pitch overlaps by shortening the earlier note.
  std::map<std::pair<int, int>, std::vector<NoteEvent*>> voices;
  for (auto& nt : s.notes) voices[{nt.channel, nt.pitch}].push_back(&nt);
  std::vector<NoteEvent> kept;
  for (auto& [key, list] : voices) {
    std::sort(list.begin(), list.end(),
              [](const NoteEvent* a, const NoteEvent* b) { return a->onset_ticks < b->onset_ticks; });
    for (size_t i = 0; i < list.size(); ++i) {
      NoteEvent nt = *list[i];
      if (i + 1 < list.size()) {
        const int64_t next = list[i + 1]->onset_ticks;
        if (next == nt.onset_ticks) continue;
        nt.duration_ticks = std::min(nt.duration_ticks, next - nt.onset_ticks);
      }
      kept.push_back(nt);
    }
  }
  s.notes = std::move(kept);
  canonicalize(s);
  return s;
}

}  // namespace octomidi::testing

#endif  // OCTOMIDI_TESTS_TEST_UTIL_H_
