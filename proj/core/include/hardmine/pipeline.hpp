#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hardmine/estimators.hpp"
#include "hardmine/matching.hpp"
#include "hardmine/query.hpp"
#include "hardmine/synthetic.hpp"

namespace hardmine {

/// How per-image hardness scores are produced.
///  - ss:      Monte Carlo sampling against pseudo ground truth (annotation-free)
///  - entropy: class-entropy uncertainty baseline (annotation-free)
///  - ds:      evidence-based uncertainty baseline (annotation-free)
///  - gt:      query evaluated against the real annotations
enum class Method { ss, entropy, ds, gt };

std::string method_name(Method method);

/// Full description of one run. Every output is a deterministic function of
/// this struct plus the input files, and the JSON sidecar written next to
/// each table echoes all of it.
struct RunConfig {
  std::string detections_path;
  std::string annotations_path;  ///< empty: annotation-free run
  std::string remap_path;        ///< empty: keep the source class schema

  std::vector<std::string> query_texts;  ///< inline query expressions
  std::string query_file;                ///< file of `name = expression` lines

  Method method = Method::ss;
  int num_samples = 10;
  double eta = 0.05;    ///< positive-set score threshold
  double floor = 0.05;  ///< ingest-time score floor for the detection pool
  double tau = 0.5;     ///< matching IoU threshold
  MatchAlgorithm matcher = MatchAlgorithm::hungarian;
  CrowdPolicy crowd = CrowdPolicy::ignore;
  std::uint64_t seed = 0;
  ScoreMode score_mode = ScoreMode::softmax;
  std::vector<double> hard_ratios = {0.05, 0.10, 0.25, 0.50};
  int jobs = 1;
  std::string output_dir = ".";
  bool clip_boxes = false;
  bool lenient = false;

  std::vector<int> sweep_samples = {1, 2, 5, 10, 20, 50, 100};
  int sweep_seeds = 20;
  int histogram_bins = 10;

  SynthConfig synth;  ///< consumed by run_synth only
};

/// Each entry point loads its inputs, computes its tables and commits them
/// atomically to config.output_dir, returning the files written. Errors
/// surface as hardmine::Error subclasses with image-id context where it
/// exists; on error nothing is written.

/// Descending-hardness ranking per query, with hardness histograms. Adds the
/// true hardness column and ranking-quality summary when annotations are given.
std::vector<std::filesystem::path> run_rank(const RunConfig& config);

/// Hard/easy classification quality (AUROC per ratio, mean across ratios).
std::vector<std::filesystem::path> run_classify(const RunConfig& config);

/// Comparison grid: ranking and classification quality of ss/entropy/ds per
/// query, plus cumulative-hardness curves for each method and the true
/// ordering.
std::vector<std::filesystem::path> run_evaluate(const RunConfig& config);

/// Pairwise rank-correlation matrix of the per-query score series produced by
/// config.method.
std::vector<std::filesystem::path> run_correlate(const RunConfig& config);

/// Sample-count sweep of estimator quality and spread for a single query.
std::vector<std::filesystem::path> run_sensitivity(const RunConfig& config);

/// Score-variance histogram, plus the score-vs-precision calibration
/// histogram when annotations are given.
std::vector<std::filesystem::path> run_diagnostics(const RunConfig& config);

/// Per-image matching dump (tp/fp/fn rows with IoU and class).
std::vector<std::filesystem::path> run_match(const RunConfig& config);

/// Generate the calibrated synthetic dataset described by config.synth and
/// write it as an annotation dump plus a detection dump.
std::vector<std::filesystem::path> run_synth(const RunConfig& config);

}  // namespace hardmine
