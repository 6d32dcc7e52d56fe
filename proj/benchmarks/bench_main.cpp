#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "hardmine/dataset.hpp"
#include "hardmine/estimators.hpp"
#include "hardmine/geometry.hpp"
#include "hardmine/matching.hpp"
#include "hardmine/metrics.hpp"
#include "hardmine/query.hpp"
#include "hardmine/rng.hpp"

namespace hardmine {
namespace {

BoundingBox random_box(std::mt19937_64& rng, double span) {
  const double x = uniform01(rng) * span;
  const double y = uniform01(rng) * span;
  return BoundingBox{x, y, x + 8.0 + uniform01(rng) * 48.0,
                     y + 8.0 + uniform01(rng) * 48.0};
}

std::vector<Detection> random_detections(int n, std::mt19937_64& rng) {
  std::vector<Detection> dets;
  for (int i = 0; i < n; ++i) {
    dets.push_back(Detection{random_box(rng, 200.0), 1 + static_cast<ClassId>(i % 3),
                             0.06 + 0.93 * uniform01(rng), {}, {}, i});
  }
  sort_pool_canonical(dets);
  return dets;
}

std::vector<GroundTruthBox> random_gts(int n, std::mt19937_64& rng) {
  std::vector<GroundTruthBox> gts;
  for (int i = 0; i < n; ++i) {
    gts.push_back(GroundTruthBox{random_box(rng, 200.0),
                                 1 + static_cast<ClassId>(i % 3), false});
  }
  return gts;
}

void BM_Iou(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const BoundingBox a = random_box(rng, 100.0);
  const BoundingBox b = random_box(rng, 100.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(iou(a, b));
  }
}
BENCHMARK(BM_Iou);

void BM_MatchHungarian(benchmark::State& state) {
  std::mt19937_64 rng(2);
  const int n = static_cast<int>(state.range(0));
  const auto dets = random_detections(n, rng);
  const auto gts = random_gts(n, rng);
  MatchConfig config;
  for (auto _ : state) {
    benchmark::DoNotOptimize(match(dets, gts, config));
  }
}
BENCHMARK(BM_MatchHungarian)->Arg(4)->Arg(16)->Arg(64);

void BM_MatchGreedy(benchmark::State& state) {
  std::mt19937_64 rng(2);
  const int n = static_cast<int>(state.range(0));
  const auto dets = random_detections(n, rng);
  const auto gts = random_gts(n, rng);
  MatchConfig config;
  config.algorithm = MatchAlgorithm::greedy;
  for (auto _ : state) {
    benchmark::DoNotOptimize(match(dets, gts, config));
  }
}
BENCHMARK(BM_MatchGreedy)->Arg(16)->Arg(64);

ImageRecord bench_image(int num_dets) {
  std::mt19937_64 rng(3);
  ImageRecord image;
  image.id = 1;
  image.width = 640;
  image.height = 512;
  image.detections = random_detections(num_dets, rng);
  return image;
}

void BM_ScoreSampling(benchmark::State& state) {
  const ImageRecord image = bench_image(12);
  const QueryExprPtr query = parse_query("total(false)");
  SamplerConfig config;
  config.num_samples = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(score_sampling(image, query, config));
  }
}
BENCHMARK(BM_ScoreSampling)->Arg(10)->Arg(100);

void BM_ExactEnumeration(benchmark::State& state) {
  const ImageRecord image = bench_image(12);
  const QueryExprPtr query = parse_query("total(false)");
  SamplerConfig config;
  for (auto _ : state) {
    benchmark::DoNotOptimize(exact_expected_hardness(image, query, config));
  }
}
BENCHMARK(BM_ExactEnumeration);

void BM_Ndcg(benchmark::State& state) {
  std::mt19937_64 rng(4);
  const int n = static_cast<int>(state.range(0));
  ScoreSeries estimates, truths;
  for (int i = 0; i < n; ++i) {
    estimates.emplace_back(i + 1, uniform01(rng));
    truths.emplace_back(i + 1, uniform01(rng) * 5.0);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(ndcg(estimates, truths));
  }
}
BENCHMARK(BM_Ndcg)->Arg(1000);

void BM_ParseQuery(benchmark::State& state) {
  const std::string text = "pixeladj(fp, class=car) + 2 * occaware(fn) - 0.5";
  for (auto _ : state) {
    benchmark::DoNotOptimize(parse_query(text));
  }
}
BENCHMARK(BM_ParseQuery);

}  // namespace
}  // namespace hardmine

BENCHMARK_MAIN();
