#include <pybind11/eigen.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "octomidi/corruption.h"
#include "octomidi/error.h"
#include "octomidi/metrics.h"
#include "octomidi/midi_io.h"
#include "octomidi/octuple.h"
#include "octomidi/pipeline.h"
#include "octomidi/selection.h"
#include "octomidi/token_io.h"

namespace py = pybind11;
using namespace octomidi;

namespace {

using TokenRows = std::vector<std::array<int32_t, kNumFields>>;

TokenRows rows_of(const std::vector<OctupleToken>& tokens) {
  TokenRows rows;
  rows.reserve(tokens.size());
  for (const auto& t : tokens) rows.push_back(t.ids);
  return rows;
}

std::vector<OctupleToken> tokens_of(const TokenRows& rows) {
  std::vector<OctupleToken> tokens(rows.size());
  for (size_t i = 0; i < rows.size(); ++i) tokens[i].ids = rows[i];
  return tokens;
}

Field parse_field(const std::string& name) {
  for (Field f : kAllFields) {
    if (field_name(f) == name) return f;
  }
  throw Error(ErrorCode::kFormatError, "unknown field '" + name + "'");
}

CorruptionKind kind_from(const std::string& name) { return parse_kind(name); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Octuple tokenization, corruption selection and evaluation metrics";

  static py::exception<Error> error_type(m, "OctomidiError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::tuple args = py::make_tuple(std::string(error_code_name(e.code())), e.what());
      PyErr_SetObject(error_type.ptr(), args.ptr());
    }
  });

  py::class_<NoteEvent>(m, "NoteEvent")
      .def(py::init<>())
      .def(py::init([](int64_t onset, int64_t duration, int pitch, int velocity, int channel,
                       int program) {
             return NoteEvent{onset, duration, pitch, velocity, channel, program};
           }),
           py::arg("onset_ticks"), py::arg("duration_ticks"), py::arg("pitch"),
           py::arg("velocity"), py::arg("channel") = 0, py::arg("program") = 0)
      .def_readwrite("onset_ticks", &NoteEvent::onset_ticks)
      .def_readwrite("duration_ticks", &NoteEvent::duration_ticks)
      .def_readwrite("pitch", &NoteEvent::pitch)
      .def_readwrite("velocity", &NoteEvent::velocity)
      .def_readwrite("channel", &NoteEvent::channel)
      .def_readwrite("program", &NoteEvent::program)
      .def(py::self == py::self)
      .def("__repr__", [](const NoteEvent& n) {
        std::ostringstream s;
        s << "NoteEvent(onset=" << n.onset_ticks << ", dur=" << n.duration_ticks
          << ", pitch=" << n.pitch << ", vel=" << n.velocity << ", ch=" << n.channel
          << ", prog=" << n.program << ")";
        return s.str();
      });

  py::class_<TempoEvent>(m, "TempoEvent")
      .def(py::init([](int64_t at, double bpm) { return TempoEvent{at, bpm}; }),
           py::arg("at_ticks"), py::arg("bpm"))
      .def_readwrite("at_ticks", &TempoEvent::at_ticks)
      .def_readwrite("bpm", &TempoEvent::bpm);

  py::class_<TimeSigEvent>(m, "TimeSigEvent")
      .def(py::init([](int64_t at, int num, int den) { return TimeSigEvent{at, num, den}; }),
           py::arg("at_ticks"), py::arg("numerator"), py::arg("denominator"))
      .def_readwrite("at_ticks", &TimeSigEvent::at_ticks)
      .def_readwrite("numerator", &TimeSigEvent::numerator)
      .def_readwrite("denominator", &TimeSigEvent::denominator);

  py::class_<Score>(m, "Score")
      .def(py::init<>())
      .def_readwrite("ticks_per_quarter", &Score::ticks_per_quarter)
      .def_readwrite("notes", &Score::notes)
      .def_readwrite("tempos", &Score::tempos)
      .def_readwrite("timesigs", &Score::timesigs)
      .def("canonicalize", [](Score& s) { canonicalize(s); })
      .def(py::self == py::self);

  py::class_<TokenSequence>(m, "TokenSequence")
      .def(py::init([](const TokenRows& rows, const std::string& source, int64_t segment) {
             TokenSequence s;
             s.tokens = tokens_of(rows);
             s.provenance.source = source;
             s.provenance.segment = segment;
             return s;
           }),
           py::arg("tokens") = TokenRows{}, py::arg("source") = "", py::arg("segment") = 0)
      .def_property(
          "tokens", [](const TokenSequence& s) { return rows_of(s.tokens); },
          [](TokenSequence& s, const TokenRows& rows) { s.tokens = tokens_of(rows); })
      .def_property(
          "source", [](const TokenSequence& s) { return s.provenance.source; },
          [](TokenSequence& s, const std::string& v) { s.provenance.source = v; })
      .def_property(
          "segment", [](const TokenSequence& s) { return s.provenance.segment; },
          [](TokenSequence& s, int64_t v) { s.provenance.segment = v; })
      .def_property_readonly("pad", [](const TokenSequence& s) { return s.provenance.pad; })
      .def("__len__", &TokenSequence::size)
      .def(py::self == py::self);

  m.attr("PAD") = kPadId;
  m.attr("BOS") = kBosId;
  m.attr("EOS") = kEosId;
  m.attr("MASK") = kMaskId;
  m.attr("FIELDS") = [] {
    std::vector<std::string> names;
    for (Field f : kAllFields) names.emplace_back(field_name(f));
    return names;
  }();

  // midi-io
  m.def("parse_midi", [](py::bytes data) {
    const std::string s = data;
    const auto* p = reinterpret_cast<const uint8_t*>(s.data());
    ParseWarnings w;
    Score score = parse_midi(std::span<const uint8_t>(p, s.size()), &w);
    return score;
  });
  m.def("write_midi", [](const Score& score) {
    const auto bytes = write_midi(score);
    return py::bytes(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  });

  // octuple-codec
  m.def("encode_score", [](const Score& s) { return encode_score(s); });
  m.def("decode_tokens", &decode_tokens, py::arg("seq"), py::arg("ticks_per_quarter") = 480);
  m.def("vocab_size", [](const std::string& f) { return FieldVocab::of(parse_field(f)).size(); });
  m.def("field_value", [](const std::string& f, int32_t id) { return FieldVocab::of(parse_field(f)).value(id); });
  m.def("field_id", [](const std::string& f, int32_t v) { return FieldVocab::of(parse_field(f)).id(v); });
  m.def("tempo_bin", &tempo_bin);
  m.def("velocity_bin", &velocity_bin);
  m.def("format_sequences", [](const std::vector<TokenSequence>& seqs) {
    std::ostringstream out;
    write_sequences(out, seqs);
    return out.str();
  });
  m.def("parse_sequences", [](const std::string& text) {
    std::istringstream in(text);
    return read_sequences(in);
  });

  // selection
  py::class_<SelectionMask>(m, "SelectionMask")
      .def_property_readonly("method", [](const SelectionMask& k) { return method_name(k.method()); })
      .def_property_readonly("coverage", &SelectionMask::coverage)
      .def_property_readonly("selected_cells", &SelectionMask::selected_cells)
      .def_property_readonly("grid",
                             [](const SelectionMask& k) {
                               std::vector<std::array<bool, kNumFields>> g(k.length());
                               for (size_t i = 0; i < k.length(); ++i) {
                                 for (Field f : kAllFields) g[i][static_cast<size_t>(f)] = k.get(i, f);
                               }
                               return g;
                             })
      .def_property_readonly("spans",
                             [](const SelectionMask& k) {
                               std::vector<std::tuple<size_t, size_t, int>> out;
                               for (const auto& s : k.spans()) out.emplace_back(s.start, s.length, s.field);
                               return out;
                             })
      .def("to_text", &SelectionMask::to_text);

  m.def("nbar_span", [](const TokenSequence& s, size_t p, int mm) { return nbar_span(s, p, mm).n; },
        py::arg("seq"), py::arg("p"), py::arg("m"));
  m.def("select",
        [](const TokenSequence& s, const std::string& method, double ratio, uint64_t seed) {
          Rng rng(seed);
          return select(s, parse_method(method), ratio, rng);
        },
        py::arg("seq"), py::arg("method"), py::arg("ratio") = 0.15, py::arg("seed") = 0);

  // corruption
  py::class_<CorruptionPair>(m, "CorruptionPair")
      .def_readonly("source", &CorruptionPair::source)
      .def_readonly("target", &CorruptionPair::target)
      .def_property_readonly("kind", [](const CorruptionPair& p) { return std::string(kind_name(p.kind)); })
      .def_property_readonly("method", [](const CorruptionPair& p) { return method_name(p.method); })
      .def_readonly("seed", &CorruptionPair::seed)
      .def_readonly("rotation", &CorruptionPair::rotation)
      .def_readonly("mask", &CorruptionPair::mask)
      .def("to_wire", [](const CorruptionPair& p) {
        std::ostringstream out;
        write_pair(out, p);
        return out.str();
      });

  m.def("mask_tokens",
        [](const TokenSequence& s, const std::string& method, double ratio, uint64_t seed) {
          Rng rng(seed);
          return mask_tokens(s, parse_method(method), ratio, rng);
        },
        py::arg("seq"), py::arg("method"), py::arg("ratio") = 0.15, py::arg("seed") = 0);
  m.def("delete_tokens",
        [](const TokenSequence& s, const std::string& method, double prob, uint64_t seed) {
          Rng rng(seed);
          return delete_tokens(s, parse_method(method), prob, rng);
        },
        py::arg("seq"), py::arg("method"), py::arg("prob") = 0.15, py::arg("seed") = 0);
  m.def("infill_spans",
        [](const TokenSequence& s, const std::string& method, double ratio, uint64_t seed) {
          Rng rng(seed);
          return infill_spans(s, parse_method(method), ratio, rng);
        },
        py::arg("seq"), py::arg("method"), py::arg("ratio") = 0.15, py::arg("seed") = 0);
  m.def("permute_sentences",
        [](const TokenSequence& s, const std::string& method, uint64_t seed, bool renumber) {
          Rng rng(seed);
          CorruptionOptions o;
          o.renumber_bars = renumber;
          return permute_sentences(s, parse_method(method), rng, o);
        },
        py::arg("seq"), py::arg("method"), py::arg("seed") = 0, py::arg("renumber_bars") = true);
  m.def("rotate_document",
        [](const TokenSequence& s, uint64_t seed, bool renumber) {
          Rng rng(seed);
          CorruptionOptions o;
          o.renumber_bars = renumber;
          return rotate_document(s, rng, o);
        },
        py::arg("seq"), py::arg("seed") = 0, py::arg("renumber_bars") = true);
  m.def("corrupt",
        [](const TokenSequence& s, uint64_t seed, std::optional<std::vector<std::string>> kinds) {
          CorruptionConfig c;
          if (kinds) {
            std::vector<CorruptionKind> enabled;
            for (const auto& k : *kinds) enabled.push_back(kind_from(k));
            c.enable_only(enabled);
          }
          c.validate();
          return corrupt(s, seed, c);
        },
        py::arg("seq"), py::arg("seed") = 0, py::arg("kinds") = py::none());
  m.def("read_pairs", [](const std::string& text) {
    std::istringstream in(text);
    std::vector<py::dict> out;
    for (const auto& r : read_pairs(in)) {
      py::dict d;
      d["kind"] = std::string(kind_name(r.kind));
      d["method"] = method_name(r.method);
      d["seed"] = r.seed;
      d["source"] = rows_of(r.source);
      d["target"] = rows_of(r.target);
      out.push_back(d);
    }
    return out;
  });

  // metrics
  m.def("pitch_class_histograms", [](const TokenSequence& s, bool per_bar) {
    std::vector<std::optional<std::array<double, 12>>> out;
    for (const auto& h : pitch_class_histograms(s, per_bar ? HistogramScope::kPerBar : HistogramScope::kWhole)) {
      out.push_back(h.empty ? std::nullopt : std::optional(h.bins));
    }
    return out;
  }, py::arg("seq"), py::arg("per_bar") = true);
  m.def("pche", py::overload_cast<const TokenSequence&>(&pche));
  m.def("gs", &gs);
  m.def("pfs", &pfs);
  m.def("frechet_distance",
        [](const Eigen::VectorXd& mean_a, const Eigen::MatrixXd& cov_a, int64_t count_a,
           const Eigen::VectorXd& mean_b, const Eigen::MatrixXd& cov_b, int64_t count_b) {
          return frechet_distance({mean_a, cov_a, count_a}, {mean_b, cov_b, count_b});
        },
        py::arg("mean_a"), py::arg("cov_a"), py::arg("count_a"), py::arg("mean_b"),
        py::arg("cov_b"), py::arg("count_b"));
  m.def("compare_to_reference",
        [](const TokenSequence& gen, const TokenSequence& gt, const TokenSequence& prompt) {
          const MetricReport r = compare_to_reference(gen, gt, prompt);
          py::dict d;
          d["pfs_gt"] = r.pfs_gt;
          d["pfs_prompt"] = r.pfs_prompt;
          d["pche_abs_diff"] = r.pche_abs_diff;
          d["gs_abs_diff"] = r.gs_abs_diff;
          return d;
        });

  // pipeline
  m.def("velocity_level", &velocity_level, py::arg("velocity"), py::arg("levels") = 6);
  m.def("segment_corpus",
        [](const std::filesystem::path& folder, size_t max_len, int threads) {
          PipelineConfig c;
          c.max_seq_len = max_len;
          c.threads = threads;
          std::vector<TokenSequence> out;
          for (auto& r : segment_corpus(folder, c).segments) out.push_back(std::move(r.sequence));
          return out;
        },
        py::arg("folder"), py::arg("max_len") = 1024, py::arg("threads") = 1);
  m.def("corpus_stats", [](const std::filesystem::path& folder) {
    const CorpusStats s = corpus_stats(folder, PipelineConfig{});
    py::dict d;
    d["files"] = s.files;
    d["parsed"] = s.parsed;
    d["failed"] = s.failed;
    d["notes"] = s.notes;
    d["tokens"] = s.tokens;
    d["segments"] = s.segments;
    return d;
  });
}
