#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "hardmine/errors.hpp"
#include "hardmine/pipeline.hpp"
#include "hardmine/version.hpp"

namespace {

using hardmine::RunConfig;

std::uint64_t seed_from_environment() {
  const char* raw = std::getenv("HARDEST_SEED");
  if (raw == nullptr || *raw == '\0') return 0;
  std::uint64_t value = 0;
  const char* end = raw + std::string_view(raw).size();
  const auto result = std::from_chars(raw, end, value);
  if (result.ec != std::errc() || result.ptr != end) {
    throw hardmine::ConfigError(std::string("HARDEST_SEED is not an unsigned integer: '") +
                                raw + "'");
  }
  return value;
}

/// Options shared by every data-driven subcommand. The returned option
/// pointer is the --seed option, so the caller can tell whether it was given
/// explicitly (the HARDEST_SEED fallback applies only when it was not).
CLI::Option* add_common_options(CLI::App* cmd, RunConfig& config) {
  cmd->add_option("--detections", config.detections_path,
                  "Detection dump (JSON array of detections)");
  cmd->add_option("--annotations", config.annotations_path,
                  "Annotation file; enables ground-truth columns and metrics");
  cmd->add_option("--remap", config.remap_path,
                  "Class remap file (JSON object: source name -> target name or null)");
  cmd->add_option("--query", config.query_texts,
                  "Hardness query expression (repeatable)");
  cmd->add_option("--query-file", config.query_file,
                  "File with one `name = expression` query per line");
  cmd->add_option("--method", config.method, "Scoring method")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, hardmine::Method>{{"ss", hardmine::Method::ss},
                                                  {"entropy", hardmine::Method::entropy},
                                                  {"ds", hardmine::Method::ds},
                                                  {"gt", hardmine::Method::gt}},
          CLI::ignore_case));
  cmd->add_option("--samples", config.num_samples, "Monte Carlo samples per image")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--eta", config.eta, "Positive-set score threshold");
  cmd->add_option("--floor", config.floor, "Ingest-time score floor for the pool");
  cmd->add_option("--iou-threshold", config.tau, "Matching IoU threshold");
  cmd->add_option("--matcher", config.matcher, "Matching algorithm")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, hardmine::MatchAlgorithm>{
              {"hungarian", hardmine::MatchAlgorithm::hungarian},
              {"greedy", hardmine::MatchAlgorithm::greedy}},
          CLI::ignore_case));
  cmd->add_option("--score-mode", config.score_mode,
                  "How per-class probability vectors are interpreted")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, hardmine::ScoreMode>{
              {"softmax", hardmine::ScoreMode::softmax},
              {"one_vs_all", hardmine::ScoreMode::one_vs_all}},
          CLI::ignore_case));
  cmd->add_option("--hard-ratios", config.hard_ratios,
                  "Hard-image ratios for classification metrics")
      ->delimiter(',');
  cmd->add_option("--jobs", config.jobs, "Worker threads (0 = all cores)");
  cmd->add_option("--output-dir", config.output_dir, "Directory for result tables");
  cmd->add_flag("--clip-boxes", config.clip_boxes,
                "Clip boxes to the image frame at ingest");
  cmd->add_flag("--lenient", config.lenient,
                "Skip records referencing unknown images/classes instead of failing");
  cmd->add_option("--crowd-policy", config.crowd, "Crowd-region handling")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, hardmine::CrowdPolicy>{
              {"ignore", hardmine::CrowdPolicy::ignore},
              {"strict", hardmine::CrowdPolicy::strict}},
          CLI::ignore_case));
  cmd->add_option("--bins", config.histogram_bins, "Histogram bin count")
      ->check(CLI::PositiveNumber);
  return cmd->add_option("--seed", config.seed, "Run seed (fallback: HARDEST_SEED, then 0)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Post-hoc hard-image mining for object detectors"};
  app.set_version_flag("--version", std::string("hardmine ") + hardmine::version_string);
  app.require_subcommand(1);

  RunConfig config;
  std::map<const CLI::App*, CLI::Option*> seed_options;
  std::map<const CLI::App*, std::function<std::vector<std::filesystem::path>()>> actions;

  const auto data_command = [&](const std::string& name, const std::string& help,
                                std::vector<std::filesystem::path> (*fn)(const RunConfig&)) {
    CLI::App* cmd = app.add_subcommand(name, help);
    seed_options[cmd] = add_common_options(cmd, config);
    actions[cmd] = [fn, &config] { return fn(config); };
    return cmd;
  };

  data_command("rank", "Rank images by estimated hardness", hardmine::run_rank);
  data_command("classify", "Hard/easy classification quality per ratio",
               hardmine::run_classify);
  data_command("evaluate", "Compare scoring methods against ground truth",
               hardmine::run_evaluate);
  data_command("correlate", "Rank-correlation matrix across queries",
               hardmine::run_correlate);
  CLI::App* sensitivity = data_command(
      "sensitivity", "Sweep the Monte Carlo sample count", hardmine::run_sensitivity);
  sensitivity->add_option("--sweep-samples", config.sweep_samples,
                          "Sample counts to sweep (ascending)")
      ->delimiter(',');
  sensitivity->add_option("--sweep-seeds", config.sweep_seeds, "Seeds per sample count")
      ->check(CLI::PositiveNumber);
  data_command("diagnostics", "Score variance and calibration histograms",
               hardmine::run_diagnostics);
  data_command("match", "Dump per-image tp/fp/fn matching rows", hardmine::run_match);

  CLI::App* synth = app.add_subcommand("synth", "Generate a calibrated synthetic dataset");
  synth->group("");  // internal helper: hidden from --help
  synth->add_option("--images", config.synth.num_images, "Number of images")
      ->check(CLI::PositiveNumber);
  synth->add_option("--classes", config.synth.num_classes, "Number of classes")
      ->check(CLI::PositiveNumber);
  synth->add_option("--width", config.synth.image_width, "Image width");
  synth->add_option("--height", config.synth.image_height, "Image height");
  synth->add_option("--max-boxes", config.synth.max_boxes, "Maximum detections per image");
  synth->add_option("--miss-rate", config.synth.miss_rate,
                    "Chance of an annotation with no detection");
  synth->add_option("--min-side", config.synth.min_side, "Minimum box side");
  synth->add_option("--max-side", config.synth.max_side, "Maximum box side");
  synth->add_option("--overlap-rate", config.synth.overlap_rate,
                    "Chance a wrong box is planted next to an earlier box");
  synth->add_flag("--degenerate", config.synth.degenerate_scores,
                  "Draw scores from {0,1} instead of (0.06, 0.995)");
  synth->add_flag("--class-vectors", config.synth.with_class_vectors,
                  "Attach per-class score and logit vectors");
  synth->add_option("--iou-threshold", config.synth.tau,
                    "IoU threshold the non-collision guarantee targets");
  synth->add_option("--output-dir", config.output_dir, "Directory for the generated files");
  seed_options[synth] = synth->add_option("--seed", config.seed,
                                          "Generator seed (fallback: HARDEST_SEED, then 0)");
  actions[synth] = [&config] {
    config.synth.seed = config.seed;
    return hardmine::run_synth(config);
  };

  try {
    app.parse(argc, argv);
    CLI::App* cmd = app.get_subcommands().front();
    if (seed_options[cmd]->count() == 0) config.seed = seed_from_environment();
    const std::vector<std::filesystem::path> files = actions[cmd]();
    for (const auto& path : files) {
      std::cout << "wrote " << path.string() << "\n";
    }
    return 0;
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const hardmine::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return 1;
  }
}
