#include "octomidi/midi_io.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iterator>
#include <map>
#include <string>
#include <tuple>
#include <utility>

#include "octomidi/error.h"

namespace octomidi {
namespace {

constexpr double kDefaultBpm = 120.0;
constexpr double kMinBpm = 1.0;
constexpr double kMaxBpm = 1000.0;
constexpr double kMicrosPerMinute = 60'000'000.0;

[[noreturn]] void malformed(const std::string& what) {
  throw Error(ErrorCode::kMalformedFile, what);
}

class ByteReader {
 public:
  ByteReader(std::span<const uint8_t> bytes) : bytes_(bytes) {}

  size_t offset() const { return pos_; }
  size_t remaining() const { return bytes_.size() - pos_; }
  bool done() const { return pos_ >= bytes_.size(); }

  uint8_t u8() {
    if (done()) malformed("unexpected end of data at offset " + std::to_string(pos_));
    return bytes_[pos_++];
  }
  uint8_t peek() const {
    if (done()) malformed("unexpected end of data at offset " + std::to_string(pos_));
    return bytes_[pos_];
  }
  uint32_t u16() {
    uint32_t hi = u8();
    return (hi << 8) | u8();
  }
  uint32_t u32() {
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = (v << 8) | u8();
    return v;
  }
  uint32_t vlq() {
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      uint8_t b = u8();
      v = (v << 7) | (b & 0x7F);
      if ((b & 0x80) == 0) return v;
    }
    malformed("variable-length quantity longer than 4 bytes");
  }
  std::span<const uint8_t> take(size_t n) {
    if (n > remaining()) malformed("chunk or event overruns the data");
    auto out = bytes_.subspan(pos_, n);
    pos_ += n;
    return out;
  }

 private:
  std::span<const uint8_t> bytes_;
  size_t pos_ = 0;
};

uint8_t data_byte(ByteReader& in) {
  uint8_t b = in.u8();
  if (b & 0x80) malformed("status byte where a data byte was expected");
  return b;
}

struct SoundingNote {
  int64_t onset = 0;
  int velocity = 0;
  int program = 0;
};

struct TrackResult {
  std::vector<NoteEvent> notes;
  std::vector<TempoEvent> tempos;
  std::vector<TimeSigEvent> timesigs;
};

void close_note(std::vector<NoteEvent>& notes, ParseWarnings& warnings,
                const SoundingNote& s, int channel, int pitch, int64_t end) {
  if (end <= s.onset) {
    ++warnings.zero_length_notes;
    return;
  }
  notes.push_back({s.onset, end - s.onset, pitch, s.velocity, channel, s.program});
}

TrackResult parse_track(std::span<const uint8_t> data, ParseWarnings& warnings) {
  TrackResult out;
  ByteReader in(data);
  int64_t tick = 0;
  uint8_t running = 0;
  std::array<int, 16> program{};
  std::map<std::pair<int, int>, SoundingNote> sounding;

  while (!in.done()) {
    tick += in.vlq();
    uint8_t status = in.peek();
    if (status & 0x80) {
      in.u8();
    } else {
      if (running == 0) malformed("running status without a previous status byte");
      status = running;
    }

    if (status == 0xFF) {
      running = 0;
      uint8_t type = in.u8();
      auto payload = in.take(in.vlq());
      if (type == 0x2F) break;
      if (type == 0x51) {
        if (payload.size() < 3) {
          ++warnings.ignored_meta_events;
          continue;
        }
        uint32_t us = (uint32_t{payload[0]} << 16) | (uint32_t{payload[1]} << 8) | payload[2];
        if (us == 0) {
          ++warnings.ignored_meta_events;
          continue;
        }
        double bpm = kMicrosPerMinute / us;
        if (bpm < kMinBpm || bpm > kMaxBpm) {
          ++warnings.clamped_tempos;
          bpm = std::clamp(bpm, kMinBpm, kMaxBpm);
        }
        out.tempos.push_back({tick, bpm});
      } else if (type == 0x58) {
        if (payload.size() < 2 || payload[0] == 0 || payload[1] > 6) {
          ++warnings.ignored_meta_events;
          continue;
        }
        out.timesigs.push_back({tick, payload[0], 1 << payload[1]});
      }
      continue;
    }
    if (status == 0xF0 || status == 0xF7) {
      running = 0;
      in.take(in.vlq());
      continue;
    }
    if (status >= 0xF0) malformed("unexpected system message in track data");

    running = status;
    const int channel = status & 0x0F;
    switch (status & 0xF0) {
      case 0x80:
      case 0x90: {
        const int pitch = data_byte(in);
        const int velocity = data_byte(in);
        const auto key = std::make_pair(channel, pitch);
        auto it = sounding.find(key);
        if ((status & 0xF0) == 0x90 && velocity > 0) {
          if (it != sounding.end()) {
            ++warnings.truncated_overlaps;
            close_note(out.notes, warnings, it->second, channel, pitch, tick);
          }
          sounding[key] = {tick, velocity, program[channel]};
        } else if (it == sounding.end()) {
          ++warnings.orphan_note_offs;
        } else {
          close_note(out.notes, warnings, it->second, channel, pitch, tick);
          sounding.erase(it);
        }
        break;
      }
      case 0xA0:
      case 0xB0:
      case 0xE0:
        data_byte(in);
        data_byte(in);
        break;
      case 0xC0:
        program[channel] = data_byte(in);
        break;
      case 0xD0:
        data_byte(in);
        break;
    }
  }

  for (const auto& [key, note] : sounding) {
    ++warnings.unpaired_note_ons;
    NoteEvent closed{note.onset, std::max<int64_t>(1, tick - note.onset), key.second,
                     note.velocity, key.first, note.program};
    out.notes.push_back(closed);
  }
  return out;
}

void put_u16(std::vector<uint8_t>& out, uint32_t v) {
  out.push_back(static_cast<uint8_t>(v >> 8));
  out.push_back(static_cast<uint8_t>(v));
}

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<uint8_t>(v >> shift));
}

void put_vlq(std::vector<uint8_t>& out, uint32_t v) {
  uint8_t buf[5];
  int n = 0;
  buf[n++] = v & 0x7F;
  while (v >>= 7) buf[n++] = static_cast<uint8_t>((v & 0x7F) | 0x80);
  while (n > 0) out.push_back(buf[--n]);
}

int log2_exact(int v) {
  int k = 0;
  while ((1 << k) < v) ++k;
  return k;
}

// Sort key for writer events at equal ticks: meta, note-off, program, note-on.
struct WriterEvent {
  int64_t tick;
  int rank;
  int order;
  std::vector<uint8_t> bytes;
};

}  // namespace

bool note_less(const NoteEvent& a, const NoteEvent& b) {
  return std::tie(a.onset_ticks, a.pitch, a.duration_ticks, a.velocity, a.channel, a.program) <
         std::tie(b.onset_ticks, b.pitch, b.duration_ticks, b.velocity, b.channel, b.program);
}

ParseWarnings& ParseWarnings::operator+=(const ParseWarnings& other) {
  unpaired_note_ons += other.unpaired_note_ons;
  orphan_note_offs += other.orphan_note_offs;
  truncated_overlaps += other.truncated_overlaps;
  zero_length_notes += other.zero_length_notes;
  clamped_tempos += other.clamped_tempos;
  ignored_meta_events += other.ignored_meta_events;
  return *this;
}

void canonicalize(Score& score) {
  std::sort(score.notes.begin(), score.notes.end(), note_less);

  auto dedupe = [](auto& events) {
    std::stable_sort(events.begin(), events.end(),
                     [](const auto& a, const auto& b) { return a.at_ticks < b.at_ticks; });
    // Last event at a given tick wins.
    std::decay_t<decltype(events)> kept;
    for (const auto& e : events) {
      if (!kept.empty() && kept.back().at_ticks == e.at_ticks) {
        kept.back() = e;
      } else {
        kept.push_back(e);
      }
    }
    events = std::move(kept);
  };
  dedupe(score.tempos);
  dedupe(score.timesigs);
  if (score.tempos.empty() || score.tempos.front().at_ticks > 0) {
    score.tempos.insert(score.tempos.begin(), TempoEvent{0, kDefaultBpm});
  }
  if (score.timesigs.empty() || score.timesigs.front().at_ticks > 0) {
    score.timesigs.insert(score.timesigs.begin(), TimeSigEvent{0, 4, 4});
  }
}

Score parse_midi(std::span<const uint8_t> bytes, ParseWarnings* warnings) {
  ByteReader in(bytes);
  if (in.remaining() < 14) malformed("file shorter than an MThd header");
  auto magic = in.take(4);
  if (!std::equal(magic.begin(), magic.end(), "MThd")) malformed("bad header magic");
  const uint32_t header_len = in.u32();
  if (header_len < 6) malformed("header chunk shorter than 6 bytes");
  if (header_len > in.remaining()) malformed("truncated header chunk");
  const uint32_t format = in.u16();
  in.u16();  // declared track count; real files often get it wrong
  const uint32_t division = in.u16();
  in.take(header_len - 6);

  if (format == 2) throw Error(ErrorCode::kUnsupportedFormat, "SMF format 2 has no shared timeline");
  if (format > 2) throw Error(ErrorCode::kUnsupportedFormat, "unknown SMF format " + std::to_string(format));
  if (division & 0x8000) throw Error(ErrorCode::kUnsupportedFormat, "SMPTE time division");
  if (division == 0) malformed("zero ticks per quarter note");

  Score score;
  score.ticks_per_quarter = static_cast<int>(division);
  ParseWarnings local;

  while (!in.done()) {
    if (in.remaining() < 8) malformed("truncated chunk header");
    auto id = in.take(4);
    const uint32_t len = in.u32();
    if (len > in.remaining()) malformed("truncated chunk");
    auto body = in.take(len);
    if (!std::equal(id.begin(), id.end(), "MTrk")) continue;
    TrackResult track = parse_track(body, local);
    std::move(track.notes.begin(), track.notes.end(), std::back_inserter(score.notes));
    std::move(track.tempos.begin(), track.tempos.end(), std::back_inserter(score.tempos));
    std::move(track.timesigs.begin(), track.timesigs.end(), std::back_inserter(score.timesigs));
  }

  canonicalize(score);
  if (warnings) *warnings += local;
  return score;
}

std::vector<uint8_t> write_midi(const Score& score) {
  std::vector<WriterEvent> events;
  int order = 0;

  for (const auto& t : score.tempos) {
    const double us = std::round(kMicrosPerMinute / t.bpm);
    const auto v = static_cast<uint32_t>(std::clamp(us, 1.0, double{0xFFFFFF}));
    events.push_back({t.at_ticks, 0, order++,
                      {0xFF, 0x51, 0x03, static_cast<uint8_t>(v >> 16),
                       static_cast<uint8_t>(v >> 8), static_cast<uint8_t>(v)}});
  }
  for (const auto& ts : score.timesigs) {
    events.push_back({ts.at_ticks, 0, order++,
                      {0xFF, 0x58, 0x04, static_cast<uint8_t>(ts.numerator),
                       static_cast<uint8_t>(log2_exact(ts.denominator)), 24, 8}});
  }

  std::vector<NoteEvent> notes = score.notes;
  std::sort(notes.begin(), notes.end(), note_less);
  std::array<int, 16> program;
  program.fill(-1);
  for (const auto& n : notes) {
    const auto ch = static_cast<uint8_t>(n.channel & 0x0F);
    if (program[ch] != n.program) {
      // Program 0 is implicit.
      if (program[ch] != -1 || n.program != 0) {
        events.push_back({n.onset_ticks, 2, order++,
                          {static_cast<uint8_t>(0xC0 | ch), static_cast<uint8_t>(n.program)}});
      }
      program[ch] = n.program;
    }
    // Velocity 0 would read back as a note-off.
    const auto vel = static_cast<uint8_t>(std::clamp(n.velocity, 1, 127));
    events.push_back({n.onset_ticks, 3, order++,
                      {static_cast<uint8_t>(0x90 | ch), static_cast<uint8_t>(n.pitch), vel}});
    events.push_back({n.onset_ticks + n.duration_ticks, 1, order++,
                      {static_cast<uint8_t>(0x80 | ch), static_cast<uint8_t>(n.pitch), 0}});
  }
  std::stable_sort(events.begin(), events.end(), [](const WriterEvent& a, const WriterEvent& b) {
    return std::tie(a.tick, a.rank, a.order) < std::tie(b.tick, b.rank, b.order);
  });

  std::vector<uint8_t> track;
  int64_t last = 0;
  for (const auto& e : events) {
    put_vlq(track, static_cast<uint32_t>(e.tick - last));
    track.insert(track.end(), e.bytes.begin(), e.bytes.end());
    last = e.tick;
  }
  put_vlq(track, 0);
  track.insert(track.end(), {0xFF, 0x2F, 0x00});

  std::vector<uint8_t> out = {'M', 'T', 'h', 'd'};
  put_u32(out, 6);
  put_u16(out, 0);
  put_u16(out, 1);
  put_u16(out, static_cast<uint32_t>(score.ticks_per_quarter) & 0x7FFF);
  out.insert(out.end(), {'M', 'T', 'r', 'k'});
  put_u32(out, static_cast<uint32_t>(track.size()));
  out.insert(out.end(), track.begin(), track.end());
  return out;
}

std::vector<uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  return std::vector<uint8_t>(std::istreambuf_iterator<char>(f), {});
}

Score read_midi_file(const std::filesystem::path& path, ParseWarnings* warnings) {
  const auto bytes = read_file_bytes(path);
  return parse_midi(bytes, warnings);
}

void write_midi_file(const std::filesystem::path& path, const Score& score) {
  const auto bytes = write_midi(score);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace octomidi
