#ifndef OCTOMIDI_METRICS_H_
#define OCTOMIDI_METRICS_H_

#include <array>
#include <bitset>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "octomidi/octuple.h"

namespace octomidi {

inline constexpr double kMaxPitchClassEntropy = 3.5849625007211561815;  // log2(12)
inline constexpr int kGrooveSlots = 64;

struct PitchClassHistogram {
  std::array<double, 12> bins{};
  bool empty = true;  // no notes in scope; bins are all zero
};

enum class HistogramScope { kWhole, kPerBar };

// Per-bar scope yields one histogram for every bar from 0 to the last bar
// holding a note, including empty bars (flagged). Masked and special tokens
// are ignored.
std::vector<PitchClassHistogram> pitch_class_histograms(const TokenSequence& seq,
                                                        HistogramScope scope);

// Mean base-2 entropy over the non-empty histograms. Throws Error(kAllEmpty).
double pche(std::span<const PitchClassHistogram> hists);
// Per-bar PCHE of a sequence.
double pche(const TokenSequence& seq);

using GroovingVector = std::bitset<kGrooveSlots>;

// Bit j is set iff some note in the bar starts in slot j, where a slot is
// 1/64 of the bar's length.
GroovingVector grooving_vector(const TokenSequence& seq, int bar_index);

// Mean over unordered pairs of non-empty bars of 1 - hamming/64. Throws
// Error(kTooFewBars) with fewer than two non-empty bars.
double gs(const TokenSequence& seq);
double grooving_similarity(const GroovingVector& a, const GroovingVector& b);

struct GaussianSummary {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  int64_t count = 0;
};

// Sample mean and unbiased covariance of the rows of `samples`. Throws
// Error(kDegenerateCount) with fewer than two rows.
GaussianSummary fit_gaussian(const std::vector<std::vector<double>>& samples);

// Frechet distance between two Gaussians:
//   d^2 = |mu_a - mu_b|^2 + Tr(S_a + S_b - 2 (S_a^1/2 S_b S_a^1/2)^1/2)
// Square roots come from symmetric eigendecompositions with negative
// eigenvalues clipped to zero. Throws Error(kDimensionMismatch) or
// Error(kDegenerateCount).
double frechet_distance(const GaussianSummary& a, const GaussianSummary& b);

inline constexpr double kCovarianceRidge = 1e-6;

// exp(-d) between Gaussians fitted to the per-bar pitch-class histograms of
// the two sequences, with kCovarianceRidge added to both covariance
// diagonals. Requires two non-empty bars in each sequence.
double pfs(const TokenSequence& generated, const TokenSequence& reference);

struct MetricReport {
  double pfs_gt = 0.0;
  double pfs_prompt = 0.0;
  double pche_abs_diff = 0.0;
  double gs_abs_diff = 0.0;
};

MetricReport compare_to_reference(const TokenSequence& generated, const TokenSequence& ground_truth,
                                  const TokenSequence& prompt);

// "key value" per line, six decimals.
std::string format_report_kv(const MetricReport& report);
// Aligned two-column table for terminals.
std::string format_report_table(const MetricReport& report);

}  // namespace octomidi

#endif  // OCTOMIDI_METRICS_H_
