#ifndef OCTOMIDI_PIPELINE_H_
#define OCTOMIDI_PIPELINE_H_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "octomidi/corruption.h"
#include "octomidi/midi_io.h"
#include "octomidi/octuple.h"

namespace octomidi {

struct PipelineConfig {
  size_t max_seq_len = 1024;
  size_t stride = 0;  // 0 means max_seq_len (no overlap)
  uint64_t seed = 0;
  int velocity_levels = 6;
  int threads = 0;  // 0 means hardware concurrency
  CorruptionConfig corruption;
  std::filesystem::path input;
  std::filesystem::path output;

  size_t effective_stride() const { return stride == 0 ? max_seq_len : stride; }

  // Applies one "key = value" setting. Throws Error(kInvalidConfig).
  void set(std::string_view key, std::string_view value);
  // Applies every setting in a key-value file ('#' starts a comment).
  void load(const std::filesystem::path& path);
  void validate() const;
};

struct SegmentRecord {
  TokenSequence sequence;
  // Index into the source file's canonical note list for each token.
  std::vector<size_t> note_index;
  size_t file_notes = 0;
  std::vector<int> token_labels;
  std::optional<int> sequence_label;
};

// Windows of max_seq_len tokens taken every stride tokens. Bar ids are
// rebased so each window starts at bar 0; a window is cut early where the
// rebased bar would pass 255. The last window records its padding.
std::vector<SegmentRecord> segment_tokens(const EncodedScore& encoded, const std::string& source,
                                          size_t file_notes, const PipelineConfig& config);

struct FileFailure {
  std::string file;
  std::string message;
};

struct CorpusStats {
  int64_t files = 0;
  int64_t parsed = 0;
  int64_t failed = 0;
  int64_t notes = 0;
  int64_t tokens = 0;
  int64_t segments = 0;
  ParseWarnings parse_warnings;
  EncodeStats encode_stats;
  // Distinct value ids used per field.
  std::array<int64_t, kNumFields> distinct_ids{};

  std::string to_string() const;
};

struct CorpusSegments {
  std::vector<SegmentRecord> segments;
  std::vector<FileFailure> failures;
  CorpusStats stats;
};

// *.mid / *.midi below `folder`, sorted by relative path.
std::vector<std::filesystem::path> list_midi_files(const std::filesystem::path& folder);

// Parses, encodes and segments every MIDI file, in parallel per file, with
// output in file order. Files that fail are reported and skipped. Throws
// Error(kEmptyCorpus) when nothing parses.
CorpusSegments segment_corpus(const std::filesystem::path& folder, const PipelineConfig& config);

// Like segment_corpus but never throws for an empty or unreadable corpus.
CorpusStats corpus_stats(const std::filesystem::path& folder, const PipelineConfig& config);

// One corruption pair per segment, seeded by derive_seed(seed, source,
// segment). Output is independent of the thread count.
std::vector<CorruptionPair> emit_pretraining_pairs(std::span<const TokenSequence> segments,
                                                   const PipelineConfig& config);
void write_pair_file(const std::filesystem::path& path, std::span<const CorruptionPair> pairs);

// floor(v * levels / 128). Throws Error(kOutOfRange) outside 0..127.
int velocity_level(int velocity, int levels = 6);

enum class LabelTask { kVelocity, kMelody, kSequenceClass };
std::string_view task_name(LabelTask task);
LabelTask parse_task(std::string_view name);
bool is_token_task(LabelTask task);

inline constexpr int kIgnoreLabel = -100;

// Rows of "file,label". Token tasks list one row per note in canonical note
// order; sequence tasks list one row per file.
using LabelTable = std::map<std::string, std::vector<int>>;
LabelTable read_label_table(std::istream& in);
LabelTable read_label_table_file(const std::filesystem::path& path);

// Velocity labels for every note of every parseable file under `folder`.
LabelTable velocity_label_table(const std::filesystem::path& folder, int levels = 6);

// Throws Error(kAlignmentMismatch) when a file's label count does not match
// its note count (token tasks) or is not exactly one (sequence tasks), and
// Error(kOutOfRange) for labels outside [0, num_classes) when num_classes > 0.
void attach_labels(std::vector<SegmentRecord>& records, const LabelTable& table, LabelTask task,
                   int num_classes = 0);

// Token tasks: "@labels task=<T>" then one label per token line.
// Sequence tasks: "@seqlabel task=<T> label=<id>".
void write_labels(std::ostream& out, std::span<const SegmentRecord> records, LabelTask task);

}  // namespace octomidi

#endif  // OCTOMIDI_PIPELINE_H_
