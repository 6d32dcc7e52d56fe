#include "hardmine/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>

#include "hardmine/errors.hpp"
#include "hardmine/parallel.hpp"
#include "hardmine/rng.hpp"

namespace hardmine {
namespace {

struct AlignedEntry {
  ImageId id = 0;
  double estimate = 0.0;
  double truth = 0.0;
};

// Join two series on image id; both must cover exactly the same images.
std::vector<AlignedEntry> align_series(const ScoreSeries& estimates,
                                       const ScoreSeries& truths) {
  std::map<ImageId, double> truth_by_id;
  for (const auto& [id, value] : truths) {
    if (!truth_by_id.emplace(id, value).second) {
      throw EvalError("duplicate image id " + std::to_string(id) + " in truth series");
    }
  }
  std::vector<AlignedEntry> out;
  out.reserve(estimates.size());
  std::map<ImageId, char> seen;
  for (const auto& [id, value] : estimates) {
    if (!seen.emplace(id, 1).second) {
      throw EvalError("duplicate image id " + std::to_string(id) + " in estimate series");
    }
    auto it = truth_by_id.find(id);
    if (it == truth_by_id.end()) {
      throw EvalError("image id " + std::to_string(id) + " has an estimate but no truth");
    }
    out.push_back(AlignedEntry{id, value, it->second});
  }
  if (truth_by_id.size() != out.size()) {
    for (const auto& [id, value] : truth_by_id) {
      if (seen.find(id) == seen.end()) {
        throw EvalError("image id " + std::to_string(id) + " has a truth but no estimate");
      }
    }
  }
  return out;
}

// Sort by descending key with ascending id inside ties: a total order, so the
// result is independent of the input permutation.
template <typename Key>
void sort_for_ranking(std::vector<AlignedEntry>& entries, Key key) {
  std::sort(entries.begin(), entries.end(), [&](const AlignedEntry& a, const AlignedEntry& b) {
    const double ka = key(a);
    const double kb = key(b);
    if (ka != kb) return ka > kb;
    return a.id < b.id;
  });
}

// Discounted cumulative gain with tie-averaged gains: every member of a tie
// group carries the group's mean truth at its own rank. The group sum is
// accumulated over value-sorted truths so that reassigning truths among the
// tied images cannot change the result even in the last bit.
template <typename Key>
double tie_averaged_dcg(std::vector<AlignedEntry>& entries, Key key) {
  sort_for_ranking(entries, key);
  double dcg = 0.0;
  std::vector<double> group;
  std::size_t i = 0;
  while (i < entries.size()) {
    std::size_t j = i;
    group.clear();
    while (j < entries.size() && key(entries[j]) == key(entries[i])) {
      group.push_back(entries[j].truth);
      ++j;
    }
    std::sort(group.begin(), group.end(), std::greater<double>());
    double truth_sum = 0.0;
    for (double t : group) truth_sum += t;
    const double gain = truth_sum / static_cast<double>(j - i);
    for (std::size_t r = i; r < j; ++r) {
      dcg += gain / std::log2(static_cast<double>(r) + 2.0);
    }
    i = j;
  }
  return dcg;
}

// Average 1-based ranks, ties sharing the mean rank of their run.
std::vector<double> average_ranks(const std::vector<double>& values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (values[a] != values[b]) return values[a] < values[b];
    return a < b;
  });
  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    const double mean_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t r = i; r < j; ++r) ranks[order[r]] = mean_rank;
    i = j;
  }
  return ranks;
}

double sample_stddev(const std::vector<double>& values) {
  const std::size_t n = values.size();
  if (n < 2) return 0.0;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(n - 1));
}

}  // namespace

RankingResult ndcg(const ScoreSeries& estimates, const ScoreSeries& truths) {
  std::vector<AlignedEntry> entries = align_series(estimates, truths);
  RankingResult result;
  if (entries.empty()) {
    throw EvalError("ranking quality needs at least one image");
  }
  result.dcg = tie_averaged_dcg(entries, [](const AlignedEntry& e) { return e.estimate; });
  result.order.reserve(entries.size());
  for (const AlignedEntry& e : entries) result.order.push_back(e.id);
  result.dcg_reference =
      tie_averaged_dcg(entries, [](const AlignedEntry& e) { return e.truth; });
  result.ndcg = result.dcg_reference == 0.0 ? 1.0 : result.dcg / result.dcg_reference;
  return result;
}

std::optional<double> auroc(const std::vector<double>& scores,
                            const std::vector<int>& labels) {
  if (scores.size() != labels.size()) {
    throw EvalError("scores and labels must have equal length");
  }
  long long num_pos = 0;
  for (int label : labels) num_pos += label != 0 ? 1 : 0;
  const long long num_neg = static_cast<long long>(labels.size()) - num_pos;
  if (num_pos == 0 || num_neg == 0) return std::nullopt;

  const std::vector<double> ranks = average_ranks(scores);
  double rank_sum_pos = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0) rank_sum_pos += ranks[i];
  }
  const double p = static_cast<double>(num_pos);
  const double u = rank_sum_pos - p * (p + 1.0) / 2.0;
  return u / (p * static_cast<double>(num_neg));
}

ClassificationResult hard_image_classification(const ScoreSeries& estimates,
                                               const ScoreSeries& truths,
                                               std::span<const double> ratios) {
  const std::vector<AlignedEntry> entries = align_series(estimates, truths);
  if (entries.empty()) {
    throw EvalError("hard-image classification needs at least one image");
  }
  const std::size_t d = entries.size();
  std::vector<double> sorted_truths(d);
  for (std::size_t i = 0; i < d; ++i) sorted_truths[i] = entries[i].truth;
  std::sort(sorted_truths.begin(), sorted_truths.end(), std::greater<double>());

  std::vector<double> scores(d);
  std::vector<int> labels(d);
  for (std::size_t i = 0; i < d; ++i) scores[i] = entries[i].estimate;

  ClassificationResult result;
  double auroc_sum = 0.0;
  int auroc_count = 0;
  for (double ratio : ratios) {
    if (!(ratio > 0.0 && ratio <= 1.0)) {
      throw ConfigError("hard-image ratio must lie in (0, 1], got " + std::to_string(ratio));
    }
    // ceil(ratio * D) with a guard against rounding the product up a notch.
    const double scaled = ratio * static_cast<double>(d);
    long long k = static_cast<long long>(std::ceil(scaled - 1e-9));
    k = std::clamp(k, static_cast<long long>(1), static_cast<long long>(d));
    RatioBand band;
    band.ratio = ratio;
    band.threshold = sorted_truths[static_cast<std::size_t>(k - 1)];
    for (std::size_t i = 0; i < d; ++i) {
      labels[i] = entries[i].truth > band.threshold ? 1 : 0;
      band.num_hard += labels[i];
    }
    band.num_easy = static_cast<int>(d) - band.num_hard;
    band.auroc = auroc(scores, labels);
    if (band.auroc.has_value()) {
      auroc_sum += *band.auroc;
      ++auroc_count;
    }
    result.bands.push_back(band);
  }
  if (auroc_count > 0) {
    result.mean_auroc = auroc_sum / static_cast<double>(auroc_count);
  }
  return result;
}

std::vector<CurvePoint> cumulative_hardness_curve(const ScoreSeries& estimates,
                                                  const ScoreSeries& truths) {
  std::vector<AlignedEntry> entries = align_series(estimates, truths);
  sort_for_ranking(entries, [](const AlignedEntry& e) { return e.estimate; });
  const std::size_t d = entries.size();
  std::vector<CurvePoint> curve(d);
  double cumulative = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    cumulative += entries[i].truth;
    curve[i].budget = static_cast<int>(i + 1);
    curve[i].cumulative = cumulative;
  }
  // The diagonal reuses the final cumulative sum so both lines end on the
  // exact same value.
  const double total = d == 0 ? 0.0 : curve[d - 1].cumulative;
  for (std::size_t i = 0; i < d; ++i) {
    curve[i].diagonal =
        total * (static_cast<double>(i + 1) / static_cast<double>(d));
  }
  return curve;
}

std::optional<double> spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) {
    throw EvalError("rank correlation needs series of equal length");
  }
  const std::size_t n = a.size();
  if (n < 2) return std::nullopt;
  const std::vector<double> ra = average_ranks(a);
  const std::vector<double> rb = average_ranks(b);
  const double mean = (static_cast<double>(n) + 1.0) / 2.0;  // ranks always average this
  double cov = 0.0, var_a = 0.0, var_b = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double da = ra[i] - mean;
    const double db = rb[i] - mean;
    cov += da * db;
    var_a += da * da;
    var_b += db * db;
  }
  if (var_a == 0.0 || var_b == 0.0) return std::nullopt;
  return std::clamp(cov / (std::sqrt(var_a) * std::sqrt(var_b)), -1.0, 1.0);
}

std::vector<std::vector<std::optional<double>>> spearman_matrix(
    const std::vector<ScoreSeries>& series) {
  const std::size_t q = series.size();
  // Reduce every series to values in a common ascending-id order.
  std::vector<std::vector<double>> values(q);
  std::vector<ImageId> reference_ids;
  for (std::size_t s = 0; s < q; ++s) {
    std::map<ImageId, double> by_id;
    for (const auto& [id, value] : series[s]) {
      if (!by_id.emplace(id, value).second) {
        throw EvalError("duplicate image id " + std::to_string(id) + " in series " +
                        std::to_string(s));
      }
    }
    if (s == 0) {
      reference_ids.reserve(by_id.size());
      for (const auto& [id, value] : by_id) reference_ids.push_back(id);
    }
    if (by_id.size() != reference_ids.size()) {
      throw EvalError("score series cover different image sets");
    }
    values[s].reserve(reference_ids.size());
    for (ImageId id : reference_ids) {
      auto it = by_id.find(id);
      if (it == by_id.end()) {
        throw EvalError("score series cover different image sets");
      }
      values[s].push_back(it->second);
    }
  }
  std::vector<std::vector<std::optional<double>>> matrix(
      q, std::vector<std::optional<double>>(q));
  for (std::size_t i = 0; i < q; ++i) {
    matrix[i][i] = 1.0;
    for (std::size_t j = i + 1; j < q; ++j) {
      const std::optional<double> r = spearman(values[i], values[j]);
      matrix[i][j] = r;
      matrix[j][i] = r;
    }
  }
  return matrix;
}

double fit_log_log_slope(const std::vector<std::pair<double, double>>& points) {
  std::vector<std::pair<double, double>> logged;
  for (const auto& [x, y] : points) {
    if (x > 0.0 && y > 0.0) logged.emplace_back(std::log(x), std::log(y));
  }
  if (logged.size() < 2) {
    throw EvalError("log-log slope needs at least two points with positive values");
  }
  double mean_x = 0.0, mean_y = 0.0;
  for (const auto& [x, y] : logged) {
    mean_x += x;
    mean_y += y;
  }
  mean_x /= static_cast<double>(logged.size());
  mean_y /= static_cast<double>(logged.size());
  double cov = 0.0, var = 0.0;
  for (const auto& [x, y] : logged) {
    cov += (x - mean_x) * (y - mean_y);
    var += (x - mean_x) * (x - mean_x);
  }
  if (var == 0.0) {
    throw EvalError("log-log slope needs at least two distinct x values");
  }
  return cov / var;
}

std::vector<HistogramBin> confidence_histogram(const Dataset& dataset, int num_bins,
                                               const SamplerConfig& config) {
  if (num_bins < 1) {
    throw ConfigError("histogram needs at least one bin");
  }
  std::vector<long long> tp_count(num_bins, 0), all_count(num_bins, 0);
  const auto bin_of = [&](double score) {
    const int idx = static_cast<int>(score * num_bins);
    return std::min(idx, num_bins - 1);
  };
  for (const ImageRecord& image : dataset.images) {
    if (!image.ground_truths.has_value()) continue;
    // Positive detections only: the diagnostic asks how well the scores that
    // drive the estimator track empirical correctness.
    const std::vector<Detection> positives = filter_positive(image.detections, config.eta);
    const Matching matching = match(positives, *image.ground_truths, config.match);
    for (const TpPair& pair : matching.tp) {
      const int b = bin_of(positives[pair.det_index].score);
      ++tp_count[b];
      ++all_count[b];
    }
    for (int i : matching.fp) {
      ++all_count[bin_of(positives[i].score)];
    }
  }
  std::vector<HistogramBin> bins(num_bins);
  for (int b = 0; b < num_bins; ++b) {
    bins[b].lo = static_cast<double>(b) / num_bins;
    bins[b].hi = static_cast<double>(b + 1) / num_bins;
    bins[b].count = all_count[b];
    if (all_count[b] > 0) {
      bins[b].precision = static_cast<double>(tp_count[b]) / static_cast<double>(all_count[b]);
    }
  }
  return bins;
}

std::vector<HistogramBin> variance_histogram(const Dataset& dataset, int num_bins) {
  if (num_bins < 1) {
    throw ConfigError("histogram needs at least one bin");
  }
  std::vector<HistogramBin> bins(num_bins);
  const double hi = 0.25;  // the variance s(1-s) cannot exceed 1/4
  for (int b = 0; b < num_bins; ++b) {
    bins[b].lo = hi * static_cast<double>(b) / num_bins;
    bins[b].hi = hi * static_cast<double>(b + 1) / num_bins;
  }
  for (const ImageRecord& image : dataset.images) {
    for (const Detection& det : image.detections) {
      const double v = det.score * (1.0 - det.score);
      const int idx = std::min(static_cast<int>(v / hi * num_bins), num_bins - 1);
      ++bins[idx].count;
    }
  }
  return bins;
}

HardnessHistogram hardness_histogram(const std::vector<double>& values, int max_bins) {
  if (max_bins < 1) {
    throw ConfigError("histogram needs at least one bin");
  }
  HardnessHistogram out;
  for (double v : values) {
    if (v == 0.0) ++out.zero_count;
  }
  if (values.empty()) return out;

  const auto [min_it, max_it] = std::minmax_element(values.begin(), values.end());
  const double lo_value = std::min(0.0, *min_it);
  const double hi_value = *max_it;

  bool integral = true;
  for (double v : values) {
    if (std::abs(v - std::nearbyint(v)) > 1e-9) {
      integral = false;
      break;
    }
  }
  if (integral) {
    const long long k_min = std::llround(std::min(0.0, *min_it));
    const long long k_max = std::llround(std::max(0.0, hi_value));
    const long long span = k_max - k_min + 1;
    if (span <= max_bins) {
      out.integer_aligned = true;
      out.bins.resize(static_cast<std::size_t>(span));
      for (long long k = k_min; k <= k_max; ++k) {
        HistogramBin& bin = out.bins[static_cast<std::size_t>(k - k_min)];
        bin.lo = static_cast<double>(k) - 0.5;
        bin.hi = static_cast<double>(k) + 0.5;
      }
      for (double v : values) {
        const long long k = std::llround(v);
        ++out.bins[static_cast<std::size_t>(k - k_min)].count;
      }
      return out;
    }
  }

  const double width_total = hi_value - lo_value;
  const int bins = max_bins;
  out.bins.resize(bins);
  if (width_total <= 0.0) {
    // All values identical: one degenerate bin holds everything.
    out.bins.resize(1);
    out.bins[0].lo = lo_value;
    out.bins[0].hi = lo_value + 1.0;
    out.bins[0].count = static_cast<long long>(values.size());
    return out;
  }
  for (int b = 0; b < bins; ++b) {
    out.bins[b].lo = lo_value + width_total * static_cast<double>(b) / bins;
    out.bins[b].hi = lo_value + width_total * static_cast<double>(b + 1) / bins;
  }
  for (double v : values) {
    const int idx =
        std::min(static_cast<int>((v - lo_value) / width_total * bins), bins - 1);
    ++out.bins[std::max(idx, 0)].count;
  }
  return out;
}

std::vector<SweepRow> sensitivity_sweep(const Dataset& dataset, const QueryExprPtr& query,
                                        const SamplerConfig& sampler,
                                        const SweepConfig& sweep) {
  if (sweep.sample_counts.empty()) {
    throw ConfigError("sensitivity sweep needs a nonempty sample-count list");
  }
  if (!std::is_sorted(sweep.sample_counts.begin(), sweep.sample_counts.end())) {
    throw ConfigError("sensitivity sweep sample counts must be ascending");
  }
  if (sweep.num_seeds < 2) {
    throw ConfigError("sensitivity sweep needs at least two seeds");
  }
  if (!dataset.has_annotations) {
    throw ConfigError("sensitivity sweep needs ground truth annotations");
  }

  const std::size_t d = dataset.images.size();
  ScoreSeries truths(d);
  parallel_for(d, sweep.jobs, [&](std::size_t i) {
    const ImageRecord& image = dataset.images[i];
    truths[i] = {image.id, ground_truth_hardness(image, query, sampler)};
  });

  std::vector<SweepRow> rows;
  for (int n : sweep.sample_counts) {
    std::vector<double> ndcgs, maurocs;
    // estimates_by_seed[s][i]: estimate of image i under seed s.
    std::vector<std::vector<double>> estimates_by_seed(sweep.num_seeds);
    for (int s = 0; s < sweep.num_seeds; ++s) {
      SamplerConfig cfg = sampler;
      cfg.num_samples = n;
      cfg.seed = derive_stream_seed(sampler.seed, static_cast<std::uint64_t>(n),
                                    static_cast<std::uint64_t>(s));
      ScoreSeries estimates(d);
      estimates_by_seed[s].resize(d);
      parallel_for(d, sweep.jobs, [&](std::size_t i) {
        const Estimate e = score_sampling(dataset.images[i], query, cfg);
        estimates[i] = {dataset.images[i].id, e.value};
        estimates_by_seed[s][i] = e.value;
      });
      ndcgs.push_back(ndcg(estimates, truths).ndcg);
      const ClassificationResult cls =
          hard_image_classification(estimates, truths, sweep.ratios);
      if (cls.mean_auroc.has_value()) maurocs.push_back(*cls.mean_auroc);
    }

    SweepRow row;
    row.num_samples = n;
    double sum = 0.0;
    for (double v : ndcgs) sum += v;
    row.ndcg_mean = sum / static_cast<double>(ndcgs.size());
    row.ndcg_stddev = sample_stddev(ndcgs);
    if (!maurocs.empty()) {
      sum = 0.0;
      for (double v : maurocs) sum += v;
      row.mauroc_mean = sum / static_cast<double>(maurocs.size());
      row.mauroc_stddev = sample_stddev(maurocs);
    }
    // Mean over images of the cross-seed spread of the estimate.
    double spread_sum = 0.0;
    std::vector<double> per_image(sweep.num_seeds);
    for (std::size_t i = 0; i < d; ++i) {
      for (int s = 0; s < sweep.num_seeds; ++s) per_image[s] = estimates_by_seed[s][i];
      spread_sum += sample_stddev(per_image);
    }
    row.estimate_stddev = d == 0 ? 0.0 : spread_sum / static_cast<double>(d);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace hardmine
