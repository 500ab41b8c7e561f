#include "octomidi/pipeline.h"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "octomidi/error.h"

namespace octomidi {
namespace {

namespace fs = std::filesystem;

std::string trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    const size_t at = s.find(sep, start);
    out.push_back(trim(s.substr(start, at == std::string_view::npos ? std::string_view::npos : at - start)));
    if (at == std::string_view::npos) break;
    start = at + 1;
  }
  return out;
}

template <class T>
T parse_number(std::string_view key, std::string_view text) {
  T v{};
  const std::string t = trim(text);
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size()) {
    throw Error(ErrorCode::kInvalidConfig, std::string(key) + ": bad number '" + t + "'");
  }
  return v;
}

bool parse_bool(std::string_view key, std::string_view text) {
  const std::string t = trim(text);
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  throw Error(ErrorCode::kInvalidConfig, std::string(key) + ": expected true or false");
}

// Runs fn(i) for i in [0, n) on up to `threads` workers.
template <class Fn>
void parallel_for(size_t n, int threads, Fn fn) {
  size_t workers = threads > 0 ? static_cast<size_t>(threads)
                               : std::max<size_t>(1, std::thread::hardware_concurrency());
  workers = std::min(workers, n);
  if (workers <= 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (size_t i = next++; i < n; i = next++) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

struct FileResult {
  std::vector<SegmentRecord> segments;
  int64_t notes = 0;
  ParseWarnings warnings;
  EncodeStats stats;
  std::optional<std::string> error;
};

std::string relative_name(const fs::path& file, const fs::path& folder) {
  return fs::relative(file, folder).generic_string();
}

FileResult process_file(const fs::path& file, const std::string& name, const PipelineConfig& config) {
  FileResult r;
  try {
    const Score score = read_midi_file(file, &r.warnings);
    const EncodedScore encoded = encode_notes(score);
    r.notes = static_cast<int64_t>(score.notes.size());
    r.stats = encoded.stats;
    r.segments = segment_tokens(encoded, name, score.notes.size(), config);
  } catch (const std::exception& e) {
    r.segments.clear();
    r.error = e.what();
  }
  return r;
}

std::vector<FileResult> process_corpus(const std::vector<fs::path>& files, const fs::path& folder,
                                       const PipelineConfig& config) {
  std::vector<FileResult> results(files.size());
  parallel_for(files.size(), config.threads, [&](size_t i) {
    results[i] = process_file(files[i], relative_name(files[i], folder), config);
  });
  return results;
}

CorpusStats summarize(const std::vector<FileResult>& results) {
  CorpusStats s;
  std::array<std::set<int32_t>, kNumFields> seen;
  s.files = static_cast<int64_t>(results.size());
  for (const auto& r : results) {
    s.parse_warnings += r.warnings;
    if (r.error) {
      ++s.failed;
      continue;
    }
    ++s.parsed;
    s.notes += r.notes;
    s.encode_stats += r.stats;
    s.segments += static_cast<int64_t>(r.segments.size());
    for (const auto& seg : r.segments) {
      s.tokens += static_cast<int64_t>(seg.sequence.size());
      for (const auto& t : seg.sequence.tokens) {
        for (size_t f = 0; f < kNumFields; ++f) seen[f].insert(t.ids[f]);
      }
    }
  }
  for (size_t f = 0; f < kNumFields; ++f) s.distinct_ids[f] = static_cast<int64_t>(seen[f].size());
  return s;
}

}  // namespace

void PipelineConfig::set(std::string_view raw_key, std::string_view value) {
  const std::string key = trim(raw_key);
  auto& c = corruption;
  if (key == "max_seq_len") {
    max_seq_len = parse_number<size_t>(key, value);
  } else if (key == "stride") {
    stride = parse_number<size_t>(key, value);
  } else if (key == "seed") {
    seed = parse_number<uint64_t>(key, value);
  } else if (key == "velocity_levels") {
    velocity_levels = parse_number<int>(key, value);
  } else if (key == "threads") {
    threads = parse_number<int>(key, value);
  } else if (key == "masking_ratio") {
    c.masking_ratio = parse_number<double>(key, value);
  } else if (key == "deletion_ratio") {
    c.deletion_ratio = parse_number<double>(key, value);
  } else if (key == "infilling_ratio") {
    c.infilling_ratio = parse_number<double>(key, value);
  } else if (key == "infill_mean_span") {
    c.options.infill_mean_span = parse_number<double>(key, value);
  } else if (key == "permutation_segments") {
    c.options.permutation_segments = parse_number<size_t>(key, value);
  } else if (key == "renumber_bars") {
    c.options.renumber_bars = parse_bool(key, value);
  } else if (key == "kinds") {
    std::vector<CorruptionKind> kinds;
    for (const auto& name : split(value, ',')) {
      try {
        kinds.push_back(parse_kind(name));
      } catch (const Error& e) {
        throw Error(ErrorCode::kInvalidConfig, e.what());
      }
    }
    c.enable_only(kinds);
  } else if (key.rfind("weight.", 0) == 0 || key.rfind("methods.", 0) == 0) {
    const bool is_weight = key[0] == 'w';
    CorruptionKind kind;
    try {
      kind = parse_kind(key.substr(is_weight ? 7 : 8));
    } catch (const Error& e) {
      throw Error(ErrorCode::kInvalidConfig, e.what());
    }
    const auto k = static_cast<size_t>(kind);
    if (is_weight) {
      c.kind_weights[k] = parse_number<double>(key, value);
    } else {
      c.methods[k].clear();
      for (const auto& name : split(value, ',')) {
        try {
          c.methods[k].push_back(parse_method(name));
        } catch (const Error& e) {
          throw Error(ErrorCode::kInvalidConfig, e.what());
        }
      }
    }
  } else if (key == "input") {
    input = trim(value);
  } else if (key == "output") {
    output = trim(value);
  } else {
    throw Error(ErrorCode::kInvalidConfig, "unknown key '" + key + "'");
  }
}

void PipelineConfig::load(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::kIoError, "cannot open config " + path.string());
  std::string line;
  int line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kInvalidConfig,
                  path.string() + ":" + std::to_string(line_no) + ": expected key = value");
    }
    set(std::string_view(line).substr(0, eq), std::string_view(line).substr(eq + 1));
  }
}

void PipelineConfig::validate() const {
  if (max_seq_len < 2) throw Error(ErrorCode::kInvalidConfig, "max_seq_len must be at least 2");
  if (stride > max_seq_len) throw Error(ErrorCode::kInvalidConfig, "stride cannot exceed max_seq_len");
  if (velocity_levels < 1 || velocity_levels > 128) {
    throw Error(ErrorCode::kInvalidConfig, "velocity_levels must lie in 1..128");
  }
  corruption.validate();
}

std::vector<SegmentRecord> segment_tokens(const EncodedScore& encoded, const std::string& source,
                                          size_t file_notes, const PipelineConfig& config) {
  std::vector<SegmentRecord> out;
  const auto& tokens = encoded.tokens;
  const size_t n = tokens.size();
  const size_t max_len = config.max_seq_len;
  const size_t stride = config.effective_stride();
  size_t start = 0;
  while (start < n) {
    size_t end = std::min(start + max_len, n);
    const int32_t base = tokens[start][Field::kBar];
    for (size_t i = start; i < end; ++i) {
      if (tokens[i][Field::kBar] - base > kMaxBar) {
        end = i;
        break;
      }
    }
    SegmentRecord rec;
    rec.sequence.provenance = {source, static_cast<int64_t>(out.size()),
                               static_cast<int64_t>(max_len - (end - start))};
    rec.file_notes = file_notes;
    for (size_t i = start; i < end; ++i) {
      OctupleToken t = tokens[i];
      t[Field::kBar] -= base - kFirstValueId;
      rec.sequence.tokens.push_back(t);
      rec.note_index.push_back(encoded.note_index[i]);
    }
    out.push_back(std::move(rec));
    if (end == n) break;
    start = std::min(start + stride, end);
  }
  return out;
}

std::string CorpusStats::to_string() const {
  std::ostringstream out;
  out << "files=" << files << '\n'
      << "parsed=" << parsed << '\n'
      << "failed=" << failed << '\n'
      << "notes=" << notes << '\n'
      << "tokens=" << tokens << '\n'
      << "segments=" << segments << '\n'
      << "warn.unpaired_note_ons=" << parse_warnings.unpaired_note_ons << '\n'
      << "warn.orphan_note_offs=" << parse_warnings.orphan_note_offs << '\n'
      << "warn.truncated_overlaps=" << parse_warnings.truncated_overlaps << '\n'
      << "warn.zero_length_notes=" << parse_warnings.zero_length_notes << '\n'
      << "warn.clamped_tempos=" << parse_warnings.clamped_tempos << '\n'
      << "warn.ignored_meta_events=" << parse_warnings.ignored_meta_events << '\n'
      << "clamp.durations_long=" << encode_stats.durations_clamped << '\n'
      << "clamp.durations_short=" << encode_stats.durations_rounded_up << '\n'
      << "clamp.tempos=" << encode_stats.tempos_clamped << '\n';
  for (Field f : kAllFields) {
    const auto& vocab = FieldVocab::of(f);
    out << "coverage." << field_name(f) << '=' << distinct_ids[static_cast<size_t>(f)] << '/'
        << vocab.cardinality() << '\n';
  }
  return out.str();
}

std::vector<fs::path> list_midi_files(const fs::path& folder) {
  if (!fs::is_directory(folder)) throw Error(ErrorCode::kIoError, folder.string() + " is not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(folder)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
    if (ext == ".mid" || ext == ".midi") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end(), [&](const fs::path& a, const fs::path& b) {
    return relative_name(a, folder) < relative_name(b, folder);
  });
  return files;
}

CorpusSegments segment_corpus(const fs::path& folder, const PipelineConfig& config) {
  config.validate();
  const auto files = list_midi_files(folder);
  auto results = process_corpus(files, folder, config);
  CorpusSegments out;
  out.stats = summarize(results);
  for (size_t i = 0; i < results.size(); ++i) {
    if (results[i].error) {
      out.failures.push_back({relative_name(files[i], folder), *results[i].error});
      continue;
    }
    for (auto& s : results[i].segments) out.segments.push_back(std::move(s));
  }
  if (out.stats.parsed == 0) {
    throw Error(ErrorCode::kEmptyCorpus, "no parseable MIDI files under " + folder.string());
  }
  return out;
}

CorpusStats corpus_stats(const fs::path& folder, const PipelineConfig& config) {
  if (!fs::is_directory(folder)) return {};
  return summarize(process_corpus(list_midi_files(folder), folder, config));
}

std::vector<CorruptionPair> emit_pretraining_pairs(std::span<const TokenSequence> segments,
                                                   const PipelineConfig& config) {
  config.validate();
  std::vector<CorruptionPair> pairs(segments.size());
  parallel_for(segments.size(), config.threads, [&](size_t i) {
    const auto& p = segments[i].provenance;
    const uint64_t seed = derive_seed(config.seed, p.source, static_cast<uint64_t>(p.segment));
    pairs[i] = corrupt(segments[i], seed, config.corruption);
  });
  return pairs;
}

void write_pair_file(const fs::path& path, std::span<const CorruptionPair> pairs) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  for (const auto& p : pairs) write_pair(f, p);
}

int velocity_level(int velocity, int levels) {
  if (velocity < 0 || velocity > 127) {
    throw Error(ErrorCode::kOutOfRange, "velocity " + std::to_string(velocity) + " outside 0..127");
  }
  return velocity * levels / 128;
}

std::string_view task_name(LabelTask task) {
  switch (task) {
    case LabelTask::kVelocity: return "velocity";
    case LabelTask::kMelody: return "melody";
    case LabelTask::kSequenceClass: return "sequence-class";
  }
  return "?";
}

LabelTask parse_task(std::string_view name) {
  for (LabelTask t : {LabelTask::kVelocity, LabelTask::kMelody, LabelTask::kSequenceClass}) {
    if (task_name(t) == name) return t;
  }
  throw Error(ErrorCode::kFormatError, "unknown label task '" + std::string(name) + "'");
}

bool is_token_task(LabelTask task) { return task != LabelTask::kSequenceClass; }

LabelTable read_label_table(std::istream& in) {
  LabelTable table;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty() || line[0] == '#') continue;
    const auto comma = line.rfind(',');
    if (comma == std::string::npos) {
      throw Error(ErrorCode::kFormatError, "label table line " + std::to_string(line_no) + ": expected file,label");
    }
    const std::string file = trim(std::string_view(line).substr(0, comma));
    const std::string label = trim(std::string_view(line).substr(comma + 1));
    if (line_no == 1 && file == "file" && label == "label") continue;
    int v = 0;
    auto [ptr, ec] = std::from_chars(label.data(), label.data() + label.size(), v);
    if (ec != std::errc() || ptr != label.data() + label.size()) {
      throw Error(ErrorCode::kFormatError, "label table line " + std::to_string(line_no) + ": bad label");
    }
    table[file].push_back(v);
  }
  return table;
}

LabelTable read_label_table_file(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  return read_label_table(f);
}

LabelTable velocity_label_table(const fs::path& folder, int levels) {
  LabelTable table;
  for (const auto& file : list_midi_files(folder)) {
    Score score;
    try {
      score = read_midi_file(file);
    } catch (const Error&) {
      continue;
    }
    auto& labels = table[relative_name(file, folder)];
    for (const auto& n : score.notes) labels.push_back(velocity_level(n.velocity, levels));
  }
  return table;
}

void attach_labels(std::vector<SegmentRecord>& records, const LabelTable& table, LabelTask task,
                   int num_classes) {
  auto check_class = [&](int label) {
    if (num_classes > 0 && (label < 0 || label >= num_classes)) {
      throw Error(ErrorCode::kOutOfRange, "label " + std::to_string(label) + " outside [0, " +
                                              std::to_string(num_classes) + ")");
    }
  };
  for (auto& rec : records) {
    const auto& source = rec.sequence.provenance.source;
    const auto it = table.find(source);
    if (it == table.end()) throw Error(ErrorCode::kAlignmentMismatch, "no labels for " + source);
    const auto& labels = it->second;
    if (is_token_task(task)) {
      if (labels.size() != rec.file_notes) {
        throw Error(ErrorCode::kAlignmentMismatch,
                    source + ": " + std::to_string(labels.size()) + " labels for " +
                        std::to_string(rec.file_notes) + " notes");
      }
      rec.token_labels.assign(rec.sequence.size(), kIgnoreLabel);
      for (size_t i = 0; i < rec.sequence.size(); ++i) {
        if (!rec.sequence.tokens[i].is_musical()) continue;
        rec.token_labels[i] = labels[rec.note_index[i]];
        check_class(rec.token_labels[i]);
      }
    } else {
      if (labels.size() != 1) {
        throw Error(ErrorCode::kAlignmentMismatch,
                    source + ": sequence tasks take exactly one label per file");
      }
      check_class(labels.front());
      rec.sequence_label = labels.front();
    }
  }
}

void write_labels(std::ostream& out, std::span<const SegmentRecord> records, LabelTask task) {
  for (const auto& rec : records) {
    if (is_token_task(task)) {
      out << "@labels task=" << task_name(task) << '\n';
      for (int label : rec.token_labels) out << label << '\n';
    } else {
      out << "@seqlabel task=" << task_name(task) << " label=" << rec.sequence_label.value_or(kIgnoreLabel)
          << '\n';
    }
  }
}

}  // namespace octomidi
