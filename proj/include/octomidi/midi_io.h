#ifndef OCTOMIDI_MIDI_IO_H_
#define OCTOMIDI_MIDI_IO_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace octomidi {

struct NoteEvent {
  int64_t onset_ticks = 0;
  int64_t duration_ticks = 1;
  int pitch = 60;
  int velocity = 64;
  int channel = 0;
  int program = 0;

  bool operator==(const NoteEvent&) const = default;
};

// Canonical note order: (onset, pitch) first, remaining fields break ties.
bool note_less(const NoteEvent& a, const NoteEvent& b);

struct TempoEvent {
  int64_t at_ticks = 0;
  double bpm = 120.0;

  bool operator==(const TempoEvent&) const = default;
};

struct TimeSigEvent {
  int64_t at_ticks = 0;
  int numerator = 4;
  int denominator = 4;

  bool operator==(const TimeSigEvent&) const = default;
};

// Track-merged, note-level view of a Standard MIDI File.
struct Score {
  int ticks_per_quarter = 480;
  std::vector<NoteEvent> notes;
  std::vector<TempoEvent> tempos;
  std::vector<TimeSigEvent> timesigs;

  bool operator==(const Score&) const = default;
};

// Sorts notes canonically, orders the tempo and time-signature maps, keeps the
// last event when several share a tick, and synthesizes 120 BPM and 4/4 at
// tick 0 when the maps do not start there.
void canonicalize(Score& score);

// Irregularities repaired while parsing. None of them make a file fail.
struct ParseWarnings {
  int64_t unpaired_note_ons = 0;    // closed at end of track
  int64_t orphan_note_offs = 0;     // note-off with nothing sounding
  int64_t truncated_overlaps = 0;   // same channel+pitch re-struck while sounding
  int64_t zero_length_notes = 0;    // dropped
  int64_t clamped_tempos = 0;       // outside [1, 1000] BPM
  int64_t ignored_meta_events = 0;  // tempo / time signature with bad payload

  int64_t total() const {
    return unpaired_note_ons + orphan_note_offs + truncated_overlaps +
           zero_length_notes + clamped_tempos + ignored_meta_events;
  }
  ParseWarnings& operator+=(const ParseWarnings& other);
};

// Parses an SMF of format 0 or 1. Throws Error(kMalformedFile) or
// Error(kUnsupportedFormat). Only notes, program changes (to tag notes),
// tempo and time signature survive; controllers, pitch bend and sysex are
// dropped.
Score parse_midi(std::span<const uint8_t> bytes, ParseWarnings* warnings = nullptr);

// Emits a format 0 file with a single track and no running status.
std::vector<uint8_t> write_midi(const Score& score);

Score read_midi_file(const std::filesystem::path& path, ParseWarnings* warnings = nullptr);
void write_midi_file(const std::filesystem::path& path, const Score& score);

std::vector<uint8_t> read_file_bytes(const std::filesystem::path& path);

}  // namespace octomidi

#endif  // OCTOMIDI_MIDI_IO_H_
