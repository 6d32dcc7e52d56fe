#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "hardmine/dataset.hpp"
#include "hardmine/matching.hpp"
#include "hardmine/query.hpp"

namespace hardmine {

/// Configuration shared by the sampling estimator, the exact-expectation
/// oracle and the ground-truth evaluator.
struct SamplerConfig {
  int num_samples = 10;       ///< Monte Carlo draws per image
  double eta = 0.05;          ///< positive-set threshold (score strictly above)
  std::uint64_t seed = 0;     ///< run seed; per-image streams derive from it
  MatchConfig match;          ///< matcher shared by all hardness evaluations
  int enumeration_limit = 15; ///< refuse exact enumeration beyond this pool size
};

/// A Monte Carlo estimate with its standard error (sample standard deviation
/// divided by sqrt(N); 0 when N == 1).
struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
};

/// Draw one pseudo ground truth from a detection pool: every pool entry is
/// kept independently with probability equal to its score. Consumes exactly
/// one uniform draw per pool entry, in pool order.
std::vector<GroundTruthBox> sample_pseudo_gt(const std::vector<Detection>& pool,
                                             std::mt19937_64& rng);

/// Monte Carlo hardness estimate: average the queries over pseudo ground
/// truths sampled from the image's own detection pool, matched against the
/// positive detections (score > eta). All queries share the same samples, so
/// a query's estimate does not depend on which other queries ride along.
/// Deterministic given (image id, config): the RNG stream is derived from the
/// seed and the image id, never from processing order.
std::vector<Estimate> score_sampling(const ImageRecord& image,
                                     std::span<const QueryExprPtr> queries,
                                     const SamplerConfig& config);
Estimate score_sampling(const ImageRecord& image, const QueryExprPtr& query,
                        const SamplerConfig& config);

/// Exact expected hardness by enumerating all 2^m keep/drop subsets of the
/// pool, weighted by their Bernoulli probabilities. Throws EvalError when the
/// pool exceeds config.enumeration_limit.
std::vector<double> exact_expected_hardness(const ImageRecord& image,
                                            std::span<const QueryExprPtr> queries,
                                            const SamplerConfig& config);
double exact_expected_hardness(const ImageRecord& image, const QueryExprPtr& query,
                               const SamplerConfig& config);

/// Total class-entropy of the given detections (natural log). In softmax mode
/// each detection contributes the entropy of its class distribution; in
/// one-vs-all mode the binary entropy of its score. Zero detections give 0.
double entropy_uncertainty(const std::vector<Detection>& detections, ScoreMode mode);

/// Evidence-based uncertainty: each detection contributes K / (K + sum_k
/// exp(logit_k)), the belief mass left unassigned by its evidence. In
/// one-vs-all mode the evidence is (s / (1 - s), 1) with s clamped away from
/// the endpoints. Zero detections give 0.
double dempster_shafer_uncertainty(const std::vector<Detection>& detections,
                                   ScoreMode mode);

/// True hardness: the queries evaluated on the matching between the positive
/// detections and the image's real annotations. Throws EvalError when the
/// image has no ground truth.
std::vector<double> ground_truth_hardness(const ImageRecord& image,
                                          std::span<const QueryExprPtr> queries,
                                          const SamplerConfig& config);
double ground_truth_hardness(const ImageRecord& image, const QueryExprPtr& query,
                             const SamplerConfig& config);

}  // namespace hardmine
