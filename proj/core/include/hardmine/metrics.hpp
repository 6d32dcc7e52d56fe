#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "hardmine/dataset.hpp"
#include "hardmine/estimators.hpp"

namespace hardmine {

/// Per-image scores keyed by image id. Entries may arrive in any order; every
/// metric sorts internally with deterministic tie-breaks.
using ScoreSeries = std::vector<std::pair<ImageId, double>>;

/// Ranking quality of an estimated hardness ordering against the true one.
/// Images that share an estimated score form a tie group and each contributes
/// the group's mean true hardness at its rank, so the result is invariant to
/// how tied images are permuted. The reference DCG applies the same tie rule
/// to the true scores themselves. When the reference DCG is 0 (no hardness
/// anywhere), the ranking is defined as perfect (1.0).
struct RankingResult {
  std::vector<ImageId> order;  ///< descending estimate, ties by ascending id
  double dcg = 0.0;
  double dcg_reference = 0.0;
  double ndcg = 1.0;
};
RankingResult ndcg(const ScoreSeries& estimates, const ScoreSeries& truths);

/// Probability that a random positive outranks a random negative, counting
/// ties as half (the rank-sum formulation). Undefined (nullopt) when either
/// class is empty.
std::optional<double> auroc(const std::vector<double>& scores,
                            const std::vector<int>& labels);

/// One hard/easy split: the threshold is the ceil(ratio * D)-th largest true
/// hardness and an image is hard when its true hardness is strictly above it
/// (erring toward fewer hard labels).
struct RatioBand {
  double ratio = 0.0;
  double threshold = 0.0;
  int num_hard = 0;
  int num_easy = 0;
  std::optional<double> auroc;
};
struct ClassificationResult {
  std::vector<RatioBand> bands;
  std::optional<double> mean_auroc;  ///< mean over the defined bands
};
ClassificationResult hard_image_classification(const ScoreSeries& estimates,
                                               const ScoreSeries& truths,
                                               std::span<const double> ratios);

/// Cumulative true hardness collected when images are visited in order of
/// decreasing estimate, plus the uniform diagonal reference. The curve and the
/// diagonal share their endpoint (the total true hardness).
struct CurvePoint {
  int budget = 0;
  double cumulative = 0.0;
  double diagonal = 0.0;
};
std::vector<CurvePoint> cumulative_hardness_curve(const ScoreSeries& estimates,
                                                  const ScoreSeries& truths);

/// Rank correlation with average ranks for ties. Undefined when either side
/// has zero rank variance.
std::optional<double> spearman(const std::vector<double>& a,
                               const std::vector<double>& b);

/// Pairwise rank correlations of several score series over the same images.
/// The diagonal is exactly 1.
std::vector<std::vector<std::optional<double>>> spearman_matrix(
    const std::vector<ScoreSeries>& series);

/// Ordinary least-squares slope of ln(y) on ln(x); points with y <= 0 are
/// skipped. Throws EvalError with fewer than two usable points.
double fit_log_log_slope(const std::vector<std::pair<double, double>>& points);

/// A half-open value bin [lo, hi) — the last bin of a histogram includes its
/// upper edge. `precision` is only populated by the confidence histogram.
struct HistogramBin {
  double lo = 0.0;
  double hi = 0.0;
  long long count = 0;
  std::optional<double> precision;
};

/// Detector calibration diagnostic: bin every retained detection by score and
/// report the fraction that match real ground truth (at the configured IoU).
/// Detections absorbed by crowd regions are excluded. Only annotated images
/// participate.
std::vector<HistogramBin> confidence_histogram(const Dataset& dataset, int num_bins,
                                               const SamplerConfig& config);

/// Distribution of the per-detection Bernoulli variances s(1-s) over [0, 0.25]
/// for every retained detection in the dataset.
std::vector<HistogramBin> variance_histogram(const Dataset& dataset, int num_bins);

/// Histogram of hardness values. Integer-valued inputs get integer-aligned
/// bins ([k-0.5, k+0.5)) so counts are exact; otherwise equal-width bins are
/// used. The mass at exactly zero is also reported separately.
struct HardnessHistogram {
  bool integer_aligned = false;
  long long zero_count = 0;
  std::vector<HistogramBin> bins;
};
HardnessHistogram hardness_histogram(const std::vector<double>& values, int max_bins);

/// One row of the sample-count sensitivity sweep: ranking and classification
/// quality at a given Monte Carlo budget, plus the cross-seed standard
/// deviation of the per-image estimates (which should fall off as 1/sqrt(N)).
struct SweepRow {
  int num_samples = 0;
  double ndcg_mean = 0.0;
  double ndcg_stddev = 0.0;
  std::optional<double> mauroc_mean;
  double mauroc_stddev = 0.0;
  double estimate_stddev = 0.0;
};
struct SweepConfig {
  std::vector<int> sample_counts;  ///< ascending, nonempty
  int num_seeds = 20;
  std::vector<double> ratios = {0.05, 0.10, 0.25, 0.50};
  int jobs = 1;
};
std::vector<SweepRow> sensitivity_sweep(const Dataset& dataset, const QueryExprPtr& query,
                                        const SamplerConfig& sampler,
                                        const SweepConfig& sweep);

}  // namespace hardmine
