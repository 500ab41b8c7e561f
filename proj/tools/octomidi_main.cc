// octomidi: corpus preparation for Octuple-token denoising pre-training.
//
//   octomidi tokenize   piece.mid -o piece.tok
//   octomidi detokenize piece.tok -o piece.mid
//   octomidi segment    corpus/ -o segments.tok
//   octomidi corrupt    segments.tok -o pairs.txt
//   octomidi labels     corpus/ --task velocity -o labels.txt
//   octomidi metrics    --generated g.tok --reference gt.tok --prompt p.tok
//   octomidi stats      corpus/

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "octomidi/corruption.h"
#include "octomidi/error.h"
#include "octomidi/metrics.h"
#include "octomidi/midi_io.h"
#include "octomidi/octuple.h"
#include "octomidi/pipeline.h"
#include "octomidi/token_io.h"

namespace fs = std::filesystem;
using namespace octomidi;

namespace {

struct GlobalOptions {
  std::optional<uint64_t> seed;
  std::optional<std::string> config_path;
  std::optional<size_t> max_len;
  std::optional<int> threads;
};

PipelineConfig make_config(const GlobalOptions& g) {
  PipelineConfig config;
  if (g.config_path) config.load(*g.config_path);
  if (g.seed) config.seed = *g.seed;
  if (g.max_len) config.max_seq_len = *g.max_len;
  if (g.threads) config.threads = *g.threads;
  return config;
}

// Writes to `path`, or stdout when empty.
template <class Fn>
void with_output(const std::string& path, Fn fn) {
  if (path.empty() || path == "-") {
    fn(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path);
  fn(out);
}

TokenSequence load_sequence(const fs::path& path, size_t index) {
  std::string ext = path.extension().string();
  if (ext == ".mid" || ext == ".midi") {
    TokenSequence seq = encode_score(read_midi_file(path));
    seq.provenance.source = path.filename().string();
    return seq;
  }
  const auto seqs = read_sequence_file(path);
  if (index >= seqs.size()) {
    throw Error(ErrorCode::kBadIndex, path.string() + " holds " + std::to_string(seqs.size()) +
                                          " sequences");
  }
  return seqs[index];
}

void report_failures(const std::vector<FileFailure>& failures) {
  for (const auto& f : failures) std::cerr << "skipped " << f.file << ": " << f.message << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Octuple tokenization, corruption and evaluation for symbolic piano music"};
  app.require_subcommand(1);
  GlobalOptions g;
  app.add_option("--seed", g.seed, "Random seed")->check(CLI::NonNegativeNumber);
  app.add_option("--config", g.config_path, "Key-value config file")->check(CLI::ExistingFile);
  app.add_option("--max-len", g.max_len, "Maximum tokens per segment");
  app.add_option("--threads", g.threads, "Worker threads (0 = all cores)");

  std::string input, output;
  size_t seq_index = 0;
  int tpq = 480;

  auto* tokenize = app.add_subcommand("tokenize", "Encode one MIDI file as Octuple tokens");
  tokenize->add_option("input", input, "MIDI file")->required()->check(CLI::ExistingFile);
  tokenize->add_option("-o,--output", output, "Token file (default stdout)");

  auto* detokenize = app.add_subcommand("detokenize", "Decode a token sequence to MIDI");
  detokenize->add_option("input", input, "Token file")->required()->check(CLI::ExistingFile);
  detokenize->add_option("-o,--output", output, "MIDI file")->required();
  detokenize->add_option("--index", seq_index, "Which sequence of the file");
  detokenize->add_option("--tpq", tpq, "Ticks per quarter note of the output");

  size_t stride = 0;
  auto* segment = app.add_subcommand("segment", "Tokenize a MIDI folder into fixed-length segments");
  segment->add_option("input", input, "Corpus folder")->required()->check(CLI::ExistingDirectory);
  segment->add_option("-o,--output", output, "Segment file (default stdout)");
  segment->add_option("--stride", stride, "Window stride; below --max-len the windows overlap");

  std::vector<std::string> kinds;
  bool keep_bar_ids = false;
  auto* corrupt_cmd = app.add_subcommand("corrupt", "Emit one corruption pair per segment");
  corrupt_cmd->add_option("input", input, "Segment file")->required()->check(CLI::ExistingFile);
  corrupt_cmd->add_option("-o,--output", output, "Pair file (default stdout)");
  corrupt_cmd->add_option("--kinds", kinds, "Enabled kinds, e.g. TokenMasking DocumentRotation");
  corrupt_cmd->add_flag("--keep-bar-ids", keep_bar_ids, "Do not renumber bars after reordering");

  std::string task, table_path;
  int classes = 0;
  auto* labels = app.add_subcommand("labels", "Segment a folder and attach downstream labels");
  labels->add_option("input", input, "Corpus folder")->required()->check(CLI::ExistingDirectory);
  labels->add_option("--task", task, "velocity | melody | sequence-class")->required();
  labels->add_option("--table", table_path, "file,label table (melody, sequence-class)");
  labels->add_option("--classes", classes, "Number of classes to validate against");
  labels->add_option("-o,--output", output, "Label file (default stdout)");

  std::string generated, reference, prompt, kv_path;
  auto* metrics = app.add_subcommand("metrics", "PFS, PCHE and GS against a reference");
  metrics->add_option("--generated", generated, "Generated piece (.tok or .mid)")->required();
  metrics->add_option("--reference", reference, "Ground truth (.tok or .mid)")->required();
  metrics->add_option("--prompt", prompt, "Prompt (.tok or .mid)")->required();
  metrics->add_option("--kv", kv_path, "Also write key=value results here");

  auto* stats = app.add_subcommand("stats", "Corpus statistics");
  stats->add_option("input", input, "Corpus folder")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    PipelineConfig config = make_config(g);

    if (*tokenize) {
      EncodeStats es;
      TokenSequence seq = encode_score(read_midi_file(input), &es);
      seq.provenance.source = fs::path(input).filename().string();
      with_output(output, [&](std::ostream& out) { write_sequence(out, seq); });
      if (es.durations_clamped + es.durations_rounded_up + es.tempos_clamped > 0) {
        std::cerr << "clamped: " << es.durations_clamped << " long durations, "
                  << es.durations_rounded_up << " short durations, " << es.tempos_clamped
                  << " tempos\n";
      }
    } else if (*detokenize) {
      write_midi_file(output, decode_tokens(load_sequence(input, seq_index), tpq));
    } else if (*segment) {
      if (stride > 0) config.stride = stride;
      config.validate();
      auto corpus = segment_corpus(input, config);
      report_failures(corpus.failures);
      std::vector<TokenSequence> seqs;
      seqs.reserve(corpus.segments.size());
      for (auto& s : corpus.segments) seqs.push_back(std::move(s.sequence));
      with_output(output, [&](std::ostream& out) { write_sequences(out, seqs); });
    } else if (*corrupt_cmd) {
      if (!kinds.empty()) {
        std::vector<CorruptionKind> enabled;
        for (const auto& k : kinds) enabled.push_back(parse_kind(k));
        config.corruption.enable_only(enabled);
      }
      if (keep_bar_ids) config.corruption.options.renumber_bars = false;
      config.validate();
      const auto seqs = read_sequence_file(input);
      const auto pairs = emit_pretraining_pairs(seqs, config);
      with_output(output, [&](std::ostream& out) {
        for (const auto& p : pairs) write_pair(out, p);
      });
    } else if (*labels) {
      const LabelTask t = parse_task(task);
      config.validate();
      auto corpus = segment_corpus(input, config);
      report_failures(corpus.failures);
      LabelTable table;
      if (t == LabelTask::kVelocity) {
        table = velocity_label_table(input, config.velocity_levels);
      } else {
        if (table_path.empty()) throw Error(ErrorCode::kInvalidConfig, "--table is required for " + task);
        table = read_label_table_file(table_path);
      }
      attach_labels(corpus.segments, table, t, classes);
      with_output(output, [&](std::ostream& out) { write_labels(out, corpus.segments, t); });
    } else if (*metrics) {
      const MetricReport report = compare_to_reference(load_sequence(generated, 0),
                                                       load_sequence(reference, 0),
                                                       load_sequence(prompt, 0));
      std::cout << format_report_table(report);
      if (!kv_path.empty()) {
        with_output(kv_path, [&](std::ostream& out) { out << format_report_kv(report); });
      }
    } else if (*stats) {
      std::cout << corpus_stats(input, config).to_string();
    }
  } catch (const Error& e) {
    std::cerr << "octomidi: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "octomidi: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
