#include "hardmine/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <span>
#include <utility>

#include <json.hpp>

#include "hardmine/coco_io.hpp"
#include "hardmine/errors.hpp"
#include "hardmine/metrics.hpp"
#include "hardmine/parallel.hpp"
#include "hardmine/tables.hpp"
#include "hardmine/version.hpp"

namespace hardmine {
namespace {

using nlohmann::json;

struct LoadedRun {
  Dataset dataset;
  std::vector<NamedQuery> queries;
};

std::string matcher_name(MatchAlgorithm algorithm) {
  return algorithm == MatchAlgorithm::hungarian ? "hungarian" : "greedy";
}

std::string crowd_name(CrowdPolicy policy) {
  return policy == CrowdPolicy::ignore ? "ignore" : "strict";
}

std::string score_mode_name(ScoreMode mode) {
  return mode == ScoreMode::softmax ? "softmax" : "one_vs_all";
}

IngestOptions make_ingest_options(const RunConfig& config) {
  IngestOptions options;
  options.floor = config.floor;
  options.strict = !config.lenient;
  options.clip_boxes = config.clip_boxes;
  options.score_mode = config.score_mode;
  return options;
}

SamplerConfig make_sampler(const RunConfig& config) {
  SamplerConfig sampler;
  sampler.num_samples = config.num_samples;
  sampler.eta = config.eta;
  sampler.seed = config.seed;
  sampler.match.tau = config.tau;
  sampler.match.algorithm = config.matcher;
  sampler.match.crowd = config.crowd;
  return sampler;
}

void ensure_unique_names(std::vector<NamedQuery>& queries) {
  std::set<std::string> used;
  for (NamedQuery& query : queries) {
    if (used.insert(query.name).second) continue;
    int suffix = 2;
    std::string candidate;
    do {
      candidate = query.name + "_" + std::to_string(suffix++);
    } while (used.count(candidate) != 0);
    query.name = candidate;
    used.insert(query.name);
  }
}

LoadedRun load_run(const RunConfig& config, std::vector<NamedQuery> fallback_queries) {
  if (config.detections_path.empty()) {
    throw ConfigError("a detection dump is required (--detections)");
  }
  const IngestOptions options = make_ingest_options(config);

  LoadedRun run;
  auto pools = load_detection_pools(config.detections_path, options);
  if (!config.annotations_path.empty()) {
    run.dataset = load_annotations(config.annotations_path, options);
    attach_detections(run.dataset, std::move(pools), options);
  } else {
    run.dataset = dataset_from_detections(std::move(pools), options);
  }
  if (!config.remap_path.empty()) {
    run.dataset = apply_class_remap(run.dataset, load_class_remap(config.remap_path));
  }

  std::vector<NamedQuery> queries;
  if (!config.query_file.empty()) {
    queries = load_query_file(config.query_file);
  }
  if (!config.query_texts.empty()) {
    std::vector<NamedQuery> inline_queries = name_queries(config.query_texts);
    for (NamedQuery& query : inline_queries) queries.push_back(std::move(query));
  }
  if (queries.empty()) queries = std::move(fallback_queries);
  ensure_unique_names(queries);
  for (NamedQuery& query : queries) {
    query.expr = bind_query(query.expr, run.dataset.classes);
  }
  run.queries = std::move(queries);
  return run;
}

void require_annotations(const Dataset& dataset, const std::string& what) {
  if (!dataset.has_annotations) {
    throw ConfigError(what + " needs ground truth; pass --annotations with labels");
  }
}

std::vector<QueryExprPtr> exprs_of(const std::vector<NamedQuery>& queries) {
  std::vector<QueryExprPtr> exprs;
  exprs.reserve(queries.size());
  for (const NamedQuery& query : queries) exprs.push_back(query.expr);
  return exprs;
}

/// Per-query score series over all images, in image input order. Estimates
/// depend only on (image, config), never on scheduling, so any --jobs value
/// produces identical numbers.
std::vector<ScoreSeries> compute_scores(const Dataset& dataset,
                                        const std::vector<QueryExprPtr>& exprs,
                                        Method method, const SamplerConfig& sampler,
                                        ScoreMode mode, int jobs) {
  const std::size_t num_images = dataset.images.size();
  const std::size_t num_queries = exprs.size();
  std::vector<std::vector<double>> per_image(num_images);
  parallel_for(num_images, jobs, [&](std::size_t i) {
    const ImageRecord& image = dataset.images[i];
    try {
      switch (method) {
        case Method::ss: {
          const std::vector<Estimate> estimates = score_sampling(image, exprs, sampler);
          per_image[i].reserve(num_queries);
          for (const Estimate& e : estimates) per_image[i].push_back(e.value);
          break;
        }
        case Method::gt:
          per_image[i] = ground_truth_hardness(image, exprs, sampler);
          break;
        case Method::entropy:
        case Method::ds: {
          const std::vector<Detection> positives =
              filter_positive(image.detections, sampler.eta);
          const double uncertainty = method == Method::entropy
                                         ? entropy_uncertainty(positives, mode)
                                         : dempster_shafer_uncertainty(positives, mode);
          per_image[i].assign(num_queries, uncertainty);
          break;
        }
      }
    } catch (const ConfigError&) {
      throw;  // configuration problems are global, not image-specific
    } catch (const Error& e) {
      const std::string message = e.what();
      if (message.find("image ") != std::string::npos) throw;
      throw EvalError("image " + std::to_string(image.id) + ": " + message);
    }
  });

  std::vector<ScoreSeries> series(num_queries);
  for (std::size_t q = 0; q < num_queries; ++q) {
    series[q].reserve(num_images);
    for (std::size_t i = 0; i < num_images; ++i) {
      series[q].push_back({dataset.images[i].id, per_image[i][q]});
    }
  }
  return series;
}

/// Sidecar skeleton all commands share. Deliberately omits --jobs and the
/// output directory: neither influences any computed byte, and leaving them
/// out keeps sidecars comparable across runs.
json config_echo(const RunConfig& config, const std::vector<NamedQuery>& queries) {
  json echo;
  echo["detections"] = config.detections_path;
  echo["annotations"] = config.annotations_path;
  echo["remap"] = config.remap_path;
  echo["method"] = method_name(config.method);
  echo["num_samples"] = config.num_samples;
  echo["eta"] = config.eta;
  echo["floor"] = config.floor;
  echo["tau"] = config.tau;
  echo["matcher"] = matcher_name(config.matcher);
  echo["crowd_policy"] = crowd_name(config.crowd);
  echo["seed"] = config.seed;
  echo["score_mode"] = score_mode_name(config.score_mode);
  echo["hard_ratios"] = config.hard_ratios;
  echo["clip_boxes"] = config.clip_boxes;
  echo["lenient"] = config.lenient;
  echo["histogram_bins"] = config.histogram_bins;
  echo["sweep_samples"] = config.sweep_samples;
  echo["sweep_seeds"] = config.sweep_seeds;

  json sidecar;
  sidecar["config"] = std::move(echo);
  sidecar["tool_version"] = version_string;
  json query_list = json::array();
  for (const NamedQuery& query : queries) {
    query_list.push_back({{"name", query.name}, {"text", query.text}});
  }
  sidecar["queries"] = std::move(query_list);
  return sidecar;
}

std::string histogram_csv(const std::vector<HistogramBin>& bins, bool with_precision) {
  std::vector<std::string> header = {"bin_lo", "bin_hi", "count"};
  if (with_precision) header.push_back("precision");
  CsvTable table(header);
  for (const HistogramBin& bin : bins) {
    std::vector<std::string> row = {format_double(bin.lo), format_double(bin.hi),
                                    std::to_string(bin.count)};
    if (with_precision) {
      row.push_back(bin.precision.has_value() ? format_double(*bin.precision) : "");
    }
    table.add_row(std::move(row));
  }
  return table.to_string();
}

std::string curve_csv(const std::vector<CurvePoint>& curve) {
  CsvTable table({"budget", "cumulative", "diagonal"});
  for (const CurvePoint& point : curve) {
    table.add_row({std::to_string(point.budget), format_double(point.cumulative),
                   format_double(point.diagonal)});
  }
  return table.to_string();
}

/// Ranking order for a series: descending score, ties by ascending image id.
std::vector<std::pair<ImageId, double>> ranked(const ScoreSeries& series) {
  std::vector<std::pair<ImageId, double>> sorted(series.begin(), series.end());
  std::stable_sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  return sorted;
}

std::vector<double> series_values(const ScoreSeries& series) {
  std::vector<double> values;
  values.reserve(series.size());
  for (const auto& [id, value] : series) values.push_back(value);
  return values;
}

json hardness_histogram_json(const HardnessHistogram& histogram) {
  json j;
  j["integer_aligned"] = histogram.integer_aligned;
  j["zero_count"] = histogram.zero_count;
  return j;
}

}  // namespace

std::string method_name(Method method) {
  switch (method) {
    case Method::ss: return "ss";
    case Method::entropy: return "entropy";
    case Method::ds: return "ds";
    case Method::gt: return "gt";
  }
  return "ss";
}

std::vector<std::filesystem::path> run_rank(const RunConfig& config) {
  LoadedRun run = load_run(config, name_queries({"total(false)"}));
  const SamplerConfig sampler = make_sampler(config);
  const std::vector<QueryExprPtr> exprs = exprs_of(run.queries);
  if (config.method == Method::gt) require_annotations(run.dataset, "method 'gt'");

  const std::vector<ScoreSeries> estimates = compute_scores(
      run.dataset, exprs, config.method, sampler, run.dataset.score_mode, config.jobs);
  std::vector<ScoreSeries> truths;
  if (run.dataset.has_annotations) {
    truths = compute_scores(run.dataset, exprs, Method::gt, sampler,
                            run.dataset.score_mode, config.jobs);
  }

  OutputStager stager(config.output_dir);
  json sidecar = config_echo(config, run.queries);
  sidecar["command"] = "rank";
  json results = json::object();

  for (std::size_t q = 0; q < run.queries.size(); ++q) {
    const std::string& name = run.queries[q].name;
    std::map<ImageId, double> truth_by_id;
    if (!truths.empty()) {
      for (const auto& [id, value] : truths[q]) truth_by_id[id] = value;
    }

    std::vector<std::string> header = {"rank", "image_id", "estimate"};
    if (!truths.empty()) header.push_back("gt");
    CsvTable table(header);
    int rank = 1;
    for (const auto& [id, value] : ranked(estimates[q])) {
      std::vector<std::string> row = {std::to_string(rank++), std::to_string(id),
                                      format_double(value)};
      if (!truths.empty()) row.push_back(format_double(truth_by_id.at(id)));
      table.add_row(std::move(row));
    }
    stager.stage("rank_" + name + ".csv", table.to_string());

    const HardnessHistogram estimate_hist =
        hardness_histogram(series_values(estimates[q]), config.histogram_bins);
    stager.stage("hist_estimate_" + name + ".csv", histogram_csv(estimate_hist.bins, false));

    json query_result;
    query_result["estimate_histogram"] = hardness_histogram_json(estimate_hist);
    if (!truths.empty()) {
      const HardnessHistogram truth_hist =
          hardness_histogram(series_values(truths[q]), config.histogram_bins);
      stager.stage("hist_gt_" + name + ".csv", histogram_csv(truth_hist.bins, false));
      query_result["gt_histogram"] = hardness_histogram_json(truth_hist);
      query_result["ndcg"] = ndcg(estimates[q], truths[q]).ndcg;
    }
    results[name] = std::move(query_result);
  }
  sidecar["results"] = std::move(results);
  stager.stage("rank.json", sidecar.dump(2) + "\n");
  return stager.commit();
}

std::vector<std::filesystem::path> run_classify(const RunConfig& config) {
  LoadedRun run = load_run(config, name_queries({"total(false)"}));
  require_annotations(run.dataset, "classification");
  const SamplerConfig sampler = make_sampler(config);
  const std::vector<QueryExprPtr> exprs = exprs_of(run.queries);

  const std::vector<ScoreSeries> estimates = compute_scores(
      run.dataset, exprs, config.method, sampler, run.dataset.score_mode, config.jobs);
  const std::vector<ScoreSeries> truths = compute_scores(
      run.dataset, exprs, Method::gt, sampler, run.dataset.score_mode, config.jobs);

  OutputStager stager(config.output_dir);
  json sidecar = config_echo(config, run.queries);
  sidecar["command"] = "classify";
  json results = json::object();

  CsvTable table({"query", "ratio", "threshold", "num_hard", "num_easy", "auroc"});
  for (std::size_t q = 0; q < run.queries.size(); ++q) {
    const ClassificationResult classification =
        hard_image_classification(estimates[q], truths[q], config.hard_ratios);
    for (const RatioBand& band : classification.bands) {
      table.add_row({run.queries[q].name, format_double(band.ratio),
                     format_double(band.threshold), std::to_string(band.num_hard),
                     std::to_string(band.num_easy),
                     band.auroc.has_value() ? format_double(*band.auroc) : ""});
    }
    json query_result;
    if (classification.mean_auroc.has_value()) {
      query_result["mauroc"] = *classification.mean_auroc;
    } else {
      query_result["mauroc"] = nullptr;
    }
    results[run.queries[q].name] = std::move(query_result);
  }
  stager.stage("classify.csv", table.to_string());
  sidecar["results"] = std::move(results);
  stager.stage("classify.json", sidecar.dump(2) + "\n");
  return stager.commit();
}

std::vector<std::filesystem::path> run_evaluate(const RunConfig& config) {
  LoadedRun run = load_run(config, standard_queries());
  require_annotations(run.dataset, "evaluation");
  const SamplerConfig sampler = make_sampler(config);
  const std::vector<QueryExprPtr> exprs = exprs_of(run.queries);

  const std::vector<Method> methods = {Method::ss, Method::entropy, Method::ds};
  std::vector<std::vector<ScoreSeries>> estimates_by_method;
  estimates_by_method.reserve(methods.size());
  for (Method method : methods) {
    estimates_by_method.push_back(compute_scores(run.dataset, exprs, method, sampler,
                                                 run.dataset.score_mode, config.jobs));
  }
  const std::vector<ScoreSeries> truths = compute_scores(
      run.dataset, exprs, Method::gt, sampler, run.dataset.score_mode, config.jobs);

  OutputStager stager(config.output_dir);
  json sidecar = config_echo(config, run.queries);
  sidecar["command"] = "evaluate";
  json results = json::object();

  CsvTable table({"query", "method", "ndcg", "mauroc"});
  for (std::size_t q = 0; q < run.queries.size(); ++q) {
    const std::string& name = run.queries[q].name;
    json per_method = json::object();
    for (std::size_t m = 0; m < methods.size(); ++m) {
      const ScoreSeries& series = estimates_by_method[m][q];
      const double ranking = ndcg(series, truths[q]).ndcg;
      const ClassificationResult classification =
          hard_image_classification(series, truths[q], config.hard_ratios);
      table.add_row({name, method_name(methods[m]), format_double(ranking),
                     classification.mean_auroc.has_value()
                         ? format_double(*classification.mean_auroc)
                         : ""});
      json cell;
      cell["ndcg"] = ranking;
      if (classification.mean_auroc.has_value()) {
        cell["mauroc"] = *classification.mean_auroc;
      } else {
        cell["mauroc"] = nullptr;
      }
      per_method[method_name(methods[m])] = std::move(cell);
      stager.stage("curve_" + name + "_" + method_name(methods[m]) + ".csv",
                   curve_csv(cumulative_hardness_curve(series, truths[q])));
    }
    stager.stage("curve_" + name + "_gt.csv",
                 curve_csv(cumulative_hardness_curve(truths[q], truths[q])));
    results[name] = std::move(per_method);
  }
  stager.stage("evaluate.csv", table.to_string());
  sidecar["results"] = std::move(results);
  stager.stage("evaluate.json", sidecar.dump(2) + "\n");
  return stager.commit();
}

std::vector<std::filesystem::path> run_correlate(const RunConfig& config) {
  LoadedRun run = load_run(config, standard_queries());
  if (config.method == Method::gt) require_annotations(run.dataset, "method 'gt'");
  const SamplerConfig sampler = make_sampler(config);
  const std::vector<QueryExprPtr> exprs = exprs_of(run.queries);

  const std::vector<ScoreSeries> series = compute_scores(
      run.dataset, exprs, config.method, sampler, run.dataset.score_mode, config.jobs);
  const auto matrix = spearman_matrix(series);

  OutputStager stager(config.output_dir);
  std::vector<std::string> header = {"query"};
  for (const NamedQuery& query : run.queries) header.push_back(query.name);
  CsvTable table(header);
  for (std::size_t i = 0; i < run.queries.size(); ++i) {
    std::vector<std::string> row = {run.queries[i].name};
    for (std::size_t j = 0; j < run.queries.size(); ++j) {
      row.push_back(matrix[i][j].has_value() ? format_double(*matrix[i][j]) : "");
    }
    table.add_row(std::move(row));
  }
  stager.stage("correlate.csv", table.to_string());

  json sidecar = config_echo(config, run.queries);
  sidecar["command"] = "correlate";
  stager.stage("correlate.json", sidecar.dump(2) + "\n");
  return stager.commit();
}

std::vector<std::filesystem::path> run_sensitivity(const RunConfig& config) {
  LoadedRun run = load_run(config, name_queries({"total(false)"}));
  require_annotations(run.dataset, "the sensitivity sweep");
  if (run.queries.size() != 1) {
    throw ConfigError("the sensitivity sweep runs a single query; got " +
                      std::to_string(run.queries.size()));
  }
  const SamplerConfig sampler = make_sampler(config);

  SweepConfig sweep;
  sweep.sample_counts = config.sweep_samples;
  sweep.num_seeds = config.sweep_seeds;
  sweep.ratios = config.hard_ratios;
  sweep.jobs = config.jobs;
  const std::vector<SweepRow> rows =
      sensitivity_sweep(run.dataset, run.queries[0].expr, sampler, sweep);

  OutputStager stager(config.output_dir);
  CsvTable table({"num_samples", "ndcg_mean", "ndcg_stddev", "mauroc_mean",
                  "mauroc_stddev", "estimate_stddev"});
  std::vector<std::pair<double, double>> spread_points;
  for (const SweepRow& row : rows) {
    table.add_row({std::to_string(row.num_samples), format_double(row.ndcg_mean),
                   format_double(row.ndcg_stddev),
                   row.mauroc_mean.has_value() ? format_double(*row.mauroc_mean) : "",
                   row.mauroc_mean.has_value() ? format_double(row.mauroc_stddev) : "",
                   format_double(row.estimate_stddev)});
    spread_points.push_back({static_cast<double>(row.num_samples), row.estimate_stddev});
  }
  stager.stage("sensitivity.csv", table.to_string());

  json sidecar = config_echo(config, run.queries);
  sidecar["command"] = "sensitivity";
  json results;
  try {
    results["spread_slope"] = fit_log_log_slope(spread_points);
  } catch (const EvalError&) {
    results["spread_slope"] = nullptr;  // degenerate spreads (e.g. frozen scores)
  }
  sidecar["results"] = std::move(results);
  stager.stage("sensitivity.json", sidecar.dump(2) + "\n");
  return stager.commit();
}

std::vector<std::filesystem::path> run_diagnostics(const RunConfig& config) {
  LoadedRun run = load_run(config, name_queries({"total(false)"}));
  const SamplerConfig sampler = make_sampler(config);

  OutputStager stager(config.output_dir);
  stager.stage("variance_histogram.csv",
               histogram_csv(variance_histogram(run.dataset, config.histogram_bins), false));
  if (run.dataset.has_annotations) {
    stager.stage(
        "confidence_histogram.csv",
        histogram_csv(confidence_histogram(run.dataset, config.histogram_bins, sampler),
                      true));
  }
  json sidecar = config_echo(config, run.queries);
  sidecar["command"] = "diagnostics";
  stager.stage("diagnostics.json", sidecar.dump(2) + "\n");
  return stager.commit();
}

std::vector<std::filesystem::path> run_match(const RunConfig& config) {
  LoadedRun run = load_run(config, name_queries({"total(false)"}));
  require_annotations(run.dataset, "the matching dump");
  const SamplerConfig sampler = make_sampler(config);

  const std::size_t num_images = run.dataset.images.size();
  std::vector<std::vector<std::vector<std::string>>> blocks(num_images);
  parallel_for(num_images, config.jobs, [&](std::size_t i) {
    const ImageRecord& image = run.dataset.images[i];
    const std::vector<Detection> positives = filter_positive(image.detections, sampler.eta);
    const std::vector<GroundTruthBox>& gts = *image.ground_truths;
    const Matching matching = match(positives, gts, sampler.match);
    const std::string id = std::to_string(image.id);
    auto& rows = blocks[i];
    for (const TpPair& pair : matching.tp) {
      rows.push_back({id, "tp", std::to_string(positives[pair.det_index].input_index),
                      std::to_string(pair.gt_index), format_double(pair.iou),
                      run.dataset.classes.name_of(positives[pair.det_index].class_id)});
    }
    for (int d : matching.fp) {
      rows.push_back({id, "fp", std::to_string(positives[d].input_index), "", "",
                      run.dataset.classes.name_of(positives[d].class_id)});
    }
    for (int g : matching.fn) {
      rows.push_back({id, "fn", "", std::to_string(g), "",
                      run.dataset.classes.name_of(gts[g].class_id)});
    }
    for (int d : matching.ignored_det) {
      rows.push_back({id, "ignored_det", std::to_string(positives[d].input_index), "", "",
                      run.dataset.classes.name_of(positives[d].class_id)});
    }
    for (int g : matching.ignored_gt) {
      rows.push_back({id, "ignored_gt", "", std::to_string(g), "",
                      run.dataset.classes.name_of(gts[g].class_id)});
    }
  });

  OutputStager stager(config.output_dir);
  CsvTable table({"image_id", "kind", "det_index", "gt_index", "iou", "class"});
  for (auto& block : blocks) {
    for (auto& row : block) table.add_row(std::move(row));
  }
  stager.stage("match.csv", table.to_string());

  json sidecar = config_echo(config, run.queries);
  sidecar["command"] = "match";
  stager.stage("match.json", sidecar.dump(2) + "\n");
  return stager.commit();
}

std::vector<std::filesystem::path> run_synth(const RunConfig& config) {
  const Dataset dataset = make_synthetic_dataset(config.synth);

  namespace fs = std::filesystem;
  const fs::path dir(config.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw Error("cannot create output directory '" + dir.string() + "': " + ec.message());
  }
  const fs::path tmp_annotations = dir / ".annotations.json.tmp";
  const fs::path tmp_detections = dir / ".detections.json.tmp";
  try {
    save_annotations(dataset, tmp_annotations.string());
    save_detections(dataset, tmp_detections.string());
  } catch (...) {
    fs::remove(tmp_annotations, ec);
    fs::remove(tmp_detections, ec);
    throw;
  }
  const fs::path final_annotations = dir / "annotations.json";
  const fs::path final_detections = dir / "detections.json";
  fs::rename(tmp_annotations, final_annotations);
  fs::rename(tmp_detections, final_detections);

  OutputStager stager(config.output_dir);
  json sidecar;
  const SynthConfig& synth = config.synth;
  json echo;
  echo["num_images"] = synth.num_images;
  echo["seed"] = synth.seed;
  echo["num_classes"] = synth.num_classes;
  echo["image_width"] = synth.image_width;
  echo["image_height"] = synth.image_height;
  echo["max_boxes"] = synth.max_boxes;
  echo["miss_rate"] = synth.miss_rate;
  echo["min_side"] = synth.min_side;
  echo["max_side"] = synth.max_side;
  echo["overlap_rate"] = synth.overlap_rate;
  echo["degenerate_scores"] = synth.degenerate_scores;
  echo["with_class_vectors"] = synth.with_class_vectors;
  echo["tau"] = synth.tau;
  sidecar["command"] = "synth";
  sidecar["config"] = std::move(echo);
  sidecar["tool_version"] = version_string;
  stager.stage("synth.json", sidecar.dump(2) + "\n");
  std::vector<std::filesystem::path> files = stager.commit();
  files.insert(files.begin(), {final_annotations, final_detections});
  return files;
}

}  // namespace hardmine
