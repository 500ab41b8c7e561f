#include "octomidi/metrics.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include <Eigen/Eigenvalues>

#include "octomidi/error.h"

namespace octomidi {
namespace {

struct MetricNote {
  int bar;
  int position;
  int bar_len;
  int pitch;
};

std::vector<MetricNote> metric_notes(const TokenSequence& seq) {
  std::vector<MetricNote> notes;
  for (const auto& t : seq.tokens) {
    if (!t.is_musical()) continue;
    const TimeSignature ts = timesig_from_index(FieldVocab::of(Field::kTimeSig).value(t[Field::kTimeSig]));
    notes.push_back({FieldVocab::of(Field::kBar).value(t[Field::kBar]),
                     FieldVocab::of(Field::kPosition).value(t[Field::kPosition]), bar_units(ts),
                     FieldVocab::of(Field::kPitch).value(t[Field::kPitch])});
  }
  return notes;
}

PitchClassHistogram normalize(const std::array<double, 12>& counts) {
  PitchClassHistogram h;
  double total = 0.0;
  for (double c : counts) total += c;
  if (total <= 0.0) return h;
  h.empty = false;
  for (size_t i = 0; i < 12; ++i) h.bins[i] = counts[i] / total;
  return h;
}

double entropy(const PitchClassHistogram& h) {
  double e = 0.0;
  for (double p : h.bins) {
    if (p > 0.0) e -= p * std::log2(p);
  }
  return e;
}

Eigen::MatrixXd symmetric_sqrt(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (m + m.transpose()));
  const Eigen::VectorXd roots = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * roots.asDiagonal() * eig.eigenvectors().transpose();
}

GaussianSummary bar_histogram_summary(const TokenSequence& seq) {
  std::vector<std::vector<double>> samples;
  for (const auto& h : pitch_class_histograms(seq, HistogramScope::kPerBar)) {
    if (!h.empty) samples.emplace_back(h.bins.begin(), h.bins.end());
  }
  if (samples.size() < 2) {
    throw Error(ErrorCode::kTooFewBars, "PFS needs at least two non-empty bars per sequence");
  }
  GaussianSummary g = fit_gaussian(samples);
  g.cov.diagonal().array() += kCovarianceRidge;
  return g;
}

}  // namespace

std::vector<PitchClassHistogram> pitch_class_histograms(const TokenSequence& seq,
                                                        HistogramScope scope) {
  const auto notes = metric_notes(seq);
  if (scope == HistogramScope::kWhole) {
    std::array<double, 12> counts{};
    for (const auto& n : notes) counts[static_cast<size_t>(n.pitch % 12)] += 1.0;
    return {normalize(counts)};
  }
  int last_bar = -1;
  for (const auto& n : notes) last_bar = std::max(last_bar, n.bar);
  std::vector<std::array<double, 12>> counts(static_cast<size_t>(last_bar + 1));
  for (const auto& n : notes) counts[static_cast<size_t>(n.bar)][static_cast<size_t>(n.pitch % 12)] += 1.0;
  std::vector<PitchClassHistogram> out;
  out.reserve(counts.size());
  for (const auto& c : counts) out.push_back(normalize(c));
  return out;
}

double pche(std::span<const PitchClassHistogram> hists) {
  double sum = 0.0;
  size_t used = 0;
  for (const auto& h : hists) {
    if (h.empty) continue;
    sum += entropy(h);
    ++used;
  }
  if (used == 0) throw Error(ErrorCode::kAllEmpty, "every histogram is empty");
  return sum / static_cast<double>(used);
}

double pche(const TokenSequence& seq) {
  const auto hists = pitch_class_histograms(seq, HistogramScope::kPerBar);
  return pche(hists);
}

GroovingVector grooving_vector(const TokenSequence& seq, int bar_index) {
  GroovingVector v;
  for (const auto& n : metric_notes(seq)) {
    if (n.bar != bar_index) continue;
    const int slot = n.position * kGrooveSlots / n.bar_len;
    if (slot >= 0 && slot < kGrooveSlots) v.set(static_cast<size_t>(slot));
  }
  return v;
}

double grooving_similarity(const GroovingVector& a, const GroovingVector& b) {
  return 1.0 - static_cast<double>((a ^ b).count()) / kGrooveSlots;
}

double gs(const TokenSequence& seq) {
  std::map<int, GroovingVector> bars;
  for (const auto& n : metric_notes(seq)) {
    const int slot = n.position * kGrooveSlots / n.bar_len;
    if (slot >= 0 && slot < kGrooveSlots) bars[n.bar].set(static_cast<size_t>(slot));
  }
  std::vector<GroovingVector> vectors;
  for (const auto& [bar, v] : bars) vectors.push_back(v);
  if (vectors.size() < 2) throw Error(ErrorCode::kTooFewBars, "GS needs two non-empty bars");
  double sum = 0.0;
  size_t pairs = 0;
  for (size_t i = 0; i < vectors.size(); ++i) {
    for (size_t j = i + 1; j < vectors.size(); ++j) {
      sum += grooving_similarity(vectors[i], vectors[j]);
      ++pairs;
    }
  }
  return sum / static_cast<double>(pairs);
}

GaussianSummary fit_gaussian(const std::vector<std::vector<double>>& samples) {
  if (samples.size() < 2) throw Error(ErrorCode::kDegenerateCount, "need at least two samples");
  const size_t dim = samples.front().size();
  Eigen::MatrixXd x(static_cast<Eigen::Index>(samples.size()), static_cast<Eigen::Index>(dim));
  for (size_t r = 0; r < samples.size(); ++r) {
    if (samples[r].size() != dim) throw Error(ErrorCode::kDimensionMismatch, "ragged samples");
    for (size_t c = 0; c < dim; ++c) {
      x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = samples[r][c];
    }
  }
  GaussianSummary g;
  g.count = static_cast<int64_t>(samples.size());
  g.mean = x.colwise().mean().transpose();
  const Eigen::MatrixXd centered = x.rowwise() - g.mean.transpose();
  g.cov = centered.transpose() * centered / static_cast<double>(g.count - 1);
  return g;
}

double frechet_distance(const GaussianSummary& a, const GaussianSummary& b) {
  if (a.mean.size() != b.mean.size() || a.cov.rows() != a.mean.size() ||
      b.cov.rows() != b.mean.size() || a.cov.cols() != a.cov.rows() ||
      b.cov.cols() != b.cov.rows()) {
    throw Error(ErrorCode::kDimensionMismatch, "Gaussian summaries differ in dimension");
  }
  if (a.count < 2 || b.count < 2) {
    throw Error(ErrorCode::kDegenerateCount, "Gaussian summaries need count >= 2");
  }
  // Identical summaries give exactly zero.
  if (a.mean == b.mean && a.cov == b.cov) return 0.0;
  const Eigen::MatrixXd root_a = symmetric_sqrt(a.cov);
  const Eigen::MatrixXd inner = root_a * b.cov * root_a;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (inner + inner.transpose()),
                                                     Eigen::EigenvaluesOnly);
  const double trace_root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  const double d2 = (a.mean - b.mean).squaredNorm() + a.cov.trace() + b.cov.trace() - 2.0 * trace_root;
  return std::sqrt(std::max(d2, 0.0));
}

double pfs(const TokenSequence& generated, const TokenSequence& reference) {
  return std::exp(-frechet_distance(bar_histogram_summary(generated), bar_histogram_summary(reference)));
}

MetricReport compare_to_reference(const TokenSequence& generated, const TokenSequence& ground_truth,
                                  const TokenSequence& prompt) {
  MetricReport r;
  r.pfs_gt = pfs(generated, ground_truth);
  r.pfs_prompt = pfs(generated, prompt);
  r.pche_abs_diff = std::abs(pche(generated) - pche(ground_truth));
  r.gs_abs_diff = std::abs(gs(generated) - gs(ground_truth));
  return r;
}

std::string format_report_kv(const MetricReport& r) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "pfs_gt=%.6f\npfs_prompt=%.6f\npche_abs_diff=%.6f\ngs_abs_diff=%.6f\n",
                r.pfs_gt, r.pfs_prompt, r.pche_abs_diff, r.gs_abs_diff);
  return buf;
}

std::string format_report_table(const MetricReport& r) {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "metric          value\n"
                "--------------  --------\n"
                "PFS_GT          %.6f\n"
                "PFS_prompt      %.6f\n"
                "|PCHE - GT|     %.6f\n"
                "|GS - GT|       %.6f\n",
                r.pfs_gt, r.pfs_prompt, r.pche_abs_diff, r.gs_abs_diff);
  return buf;
}

}  // namespace octomidi
