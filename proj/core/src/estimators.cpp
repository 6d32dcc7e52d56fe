#include "hardmine/estimators.hpp"

#include <algorithm>
#include <cmath>

#include "hardmine/errors.hpp"
#include "hardmine/rng.hpp"

namespace hardmine {
namespace {

// Online mean/variance accumulator (Welford). Exact for constant inputs: once
// the mean equals the samples, every delta is 0 and the spread term stays 0.
struct Welford {
  long long n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++n;
    const double delta = x - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (x - mean);
  }

  double std_error() const {
    if (n <= 1) return 0.0;
    const double variance = m2 / static_cast<double>(n - 1);
    return std::sqrt(variance / static_cast<double>(n));
  }
};

double image_area_of(const ImageRecord& image) {
  return image.has_dimensions() ? image.area() : 0.0;
}

void check_sampler_config(const SamplerConfig& config) {
  if (config.num_samples < 1) {
    throw ConfigError("sample count must be at least 1, got " +
                      std::to_string(config.num_samples));
  }
  if (!(config.eta >= 0.0 && config.eta < 1.0)) {
    throw ConfigError("positive-set threshold must lie in [0, 1), got " +
                      std::to_string(config.eta));
  }
}

std::vector<double> softmax(const std::vector<double>& logits) {
  const double peak = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    p[k] = std::exp(logits[k] - peak);
    sum += p[k];
  }
  for (double& v : p) v /= sum;
  return p;
}

// x * ln x with the 0 * ln 0 == 0 convention.
double xlnx(double x) {
  if (x <= 0.0) return 0.0;
  return x * std::log(x);
}

}  // namespace

std::vector<GroundTruthBox> sample_pseudo_gt(const std::vector<Detection>& pool,
                                             std::mt19937_64& rng) {
  std::vector<GroundTruthBox> out;
  out.reserve(pool.size());
  for (const Detection& d : pool) {
    // One draw per entry no matter the outcome keeps the stream layout fixed.
    const bool keep = bernoulli(rng, d.score);
    if (keep) {
      out.push_back(GroundTruthBox{d.box, d.class_id, false});
    }
  }
  return out;
}

std::vector<Estimate> score_sampling(const ImageRecord& image,
                                     std::span<const QueryExprPtr> queries,
                                     const SamplerConfig& config) {
  check_sampler_config(config);
  const std::vector<Detection> positives = filter_positive(image.detections, config.eta);
  const double area = image_area_of(image);

  std::mt19937_64 rng = make_stream(config.seed, static_cast<std::uint64_t>(image.id));
  std::vector<Welford> acc(queries.size());
  for (int n = 0; n < config.num_samples; ++n) {
    const std::vector<GroundTruthBox> pseudo = sample_pseudo_gt(image.detections, rng);
    const Matching matching = match(positives, pseudo, config.match);
    const QueryInputs inputs = make_query_inputs(positives, pseudo, matching, area);
    for (std::size_t q = 0; q < queries.size(); ++q) {
      acc[q].add(eval_query(queries[q], inputs));
    }
  }

  std::vector<Estimate> out(queries.size());
  for (std::size_t q = 0; q < queries.size(); ++q) {
    out[q] = Estimate{acc[q].mean, acc[q].std_error()};
  }
  return out;
}

Estimate score_sampling(const ImageRecord& image, const QueryExprPtr& query,
                        const SamplerConfig& config) {
  return score_sampling(image, std::span<const QueryExprPtr>(&query, 1), config)[0];
}

std::vector<double> exact_expected_hardness(const ImageRecord& image,
                                            std::span<const QueryExprPtr> queries,
                                            const SamplerConfig& config) {
  check_sampler_config(config);
  const std::vector<Detection>& pool = image.detections;
  const int m = static_cast<int>(pool.size());
  if (m > config.enumeration_limit) {
    throw EvalError("image " + std::to_string(image.id) + ": exact enumeration over " +
                    std::to_string(m) + " detections exceeds the limit of " +
                    std::to_string(config.enumeration_limit));
  }
  const std::vector<Detection> positives = filter_positive(pool, config.eta);
  const double area = image_area_of(image);

  std::vector<double> expectation(queries.size(), 0.0);
  std::vector<GroundTruthBox> pseudo;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << m); ++mask) {
    double weight = 1.0;
    for (int i = 0; i < m; ++i) {
      const bool kept = (mask >> i) & 1u;
      weight *= kept ? pool[i].score : 1.0 - pool[i].score;
    }
    if (weight == 0.0) continue;  // impossible outcome, contributes nothing
    pseudo.clear();
    for (int i = 0; i < m; ++i) {
      if ((mask >> i) & 1u) {
        pseudo.push_back(GroundTruthBox{pool[i].box, pool[i].class_id, false});
      }
    }
    const Matching matching = match(positives, pseudo, config.match);
    const QueryInputs inputs = make_query_inputs(positives, pseudo, matching, area);
    for (std::size_t q = 0; q < queries.size(); ++q) {
      expectation[q] += weight * eval_query(queries[q], inputs);
    }
  }
  return expectation;
}

double exact_expected_hardness(const ImageRecord& image, const QueryExprPtr& query,
                               const SamplerConfig& config) {
  return exact_expected_hardness(image, std::span<const QueryExprPtr>(&query, 1), config)[0];
}

double entropy_uncertainty(const std::vector<Detection>& detections, ScoreMode mode) {
  double total = 0.0;
  for (const Detection& d : detections) {
    if (mode == ScoreMode::one_vs_all) {
      total += -(xlnx(d.score) + xlnx(1.0 - d.score));
      continue;
    }
    if (d.class_scores.has_value()) {
      for (double p : *d.class_scores) total += -xlnx(p);
    } else if (d.logits.has_value()) {
      for (double p : softmax(*d.logits)) total += -xlnx(p);
    } else {
      throw ConfigError(
          "entropy in softmax mode needs class_scores or logits on every detection");
    }
  }
  return total;
}

double dempster_shafer_uncertainty(const std::vector<Detection>& detections,
                                   ScoreMode mode) {
  double total = 0.0;
  for (const Detection& d : detections) {
    if (mode == ScoreMode::one_vs_all) {
      // Binary evidence (s / (1 - s), 1); clamping keeps the ratio finite.
      const double s = std::clamp(d.score, 1e-12, 1.0 - 1e-12);
      total += 2.0 / (2.0 + s / (1.0 - s) + 1.0);
      continue;
    }
    if (!d.logits.has_value()) {
      throw ConfigError("evidence-based uncertainty in softmax mode needs raw logits; "
                        "normalized class scores do not carry the evidence scale");
    }
    const std::vector<double>& logits = *d.logits;
    const double k = static_cast<double>(logits.size());
    double evidence = 0.0;
    for (double l : logits) evidence += std::exp(l);
    total += k / (k + evidence);
  }
  return total;
}

std::vector<double> ground_truth_hardness(const ImageRecord& image,
                                          std::span<const QueryExprPtr> queries,
                                          const SamplerConfig& config) {
  check_sampler_config(config);
  if (!image.ground_truths.has_value()) {
    throw EvalError("image " + std::to_string(image.id) +
                    ": ground truth hardness requested but no annotations are loaded");
  }
  const std::vector<Detection> positives = filter_positive(image.detections, config.eta);
  const Matching matching = match(positives, *image.ground_truths, config.match);
  const QueryInputs inputs =
      make_query_inputs(positives, *image.ground_truths, matching, image_area_of(image));
  std::vector<double> out(queries.size());
  for (std::size_t q = 0; q < queries.size(); ++q) {
    out[q] = eval_query(queries[q], inputs);
  }
  return out;
}

double ground_truth_hardness(const ImageRecord& image, const QueryExprPtr& query,
                             const SamplerConfig& config) {
  return ground_truth_hardness(image, std::span<const QueryExprPtr>(&query, 1), config)[0];
}

}  // namespace hardmine
