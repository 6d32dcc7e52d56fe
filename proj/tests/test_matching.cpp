#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <set>
#include <utility>
#include <vector>

#include "hardmine/errors.hpp"
#include "hardmine/geometry.hpp"
#include "hardmine/matching.hpp"
#include "hardmine/rng.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

namespace hardmine {
namespace {

using testing::box;
using testing::brute_force_assignment;
using testing::canonical_total;
using testing::det;
using testing::gt;

MatchConfig hungarian_config(double tau = 0.5) {
  MatchConfig c;
  c.tau = tau;
  c.algorithm = MatchAlgorithm::hungarian;
  return c;
}

MatchConfig greedy_config(double tau = 0.5) {
  MatchConfig c;
  c.tau = tau;
  c.algorithm = MatchAlgorithm::greedy;
  return c;
}

double total_matched_iou(const Matching& m) {
  std::vector<double> ious;
  for (const auto& p : m.tp) ious.push_back(p.iou);
  return canonical_total(std::move(ious));
}

// Random scene generator shared by the property tests. Boxes land in a small
// grid so overlaps at interesting IoU levels are common.
struct Scene {
  std::vector<Detection> detections;
  std::vector<GroundTruthBox> ground_truths;
};

Scene random_scene(std::mt19937_64& rng, int max_per_side, int num_classes,
                   double crowd_rate = 0.0) {
  const auto rand_box = [&] {
    const double x = uniform01(rng) * 40.0;
    const double y = uniform01(rng) * 40.0;
    const double w = 4.0 + uniform01(rng) * 20.0;
    const double h = 4.0 + uniform01(rng) * 20.0;
    return box(x, y, x + w, y + h);
  };
  Scene s;
  const int nd = static_cast<int>(uniform01(rng) * (max_per_side + 1));
  const int ng = static_cast<int>(uniform01(rng) * (max_per_side + 1));
  for (int i = 0; i < nd; ++i) {
    const int cls = 1 + static_cast<int>(uniform01(rng) * num_classes);
    s.detections.push_back(det(rand_box(), cls, 0.1 + 0.9 * uniform01(rng), i));
  }
  for (int i = 0; i < ng; ++i) {
    const int cls = 1 + static_cast<int>(uniform01(rng) * num_classes);
    s.ground_truths.push_back(gt(rand_box(), cls, uniform01(rng) < crowd_rate));
  }
  return s;
}

// Reference result computed with the exhaustive oracle, restricted per class
// the same way the production matcher is specified to work.
double oracle_total_iou(const Scene& scene, double tau) {
  std::set<int> classes;
  for (const auto& d : scene.detections) classes.insert(d.class_id);
  std::vector<double> all_ious;
  for (int cls : classes) {
    std::vector<int> det_idx, gt_idx;
    for (int i = 0; i < static_cast<int>(scene.detections.size()); ++i) {
      if (scene.detections[i].class_id == cls) det_idx.push_back(i);
    }
    for (int j = 0; j < static_cast<int>(scene.ground_truths.size()); ++j) {
      if (scene.ground_truths[j].class_id == cls) gt_idx.push_back(j);
    }
    std::vector<std::vector<double>> weights(det_idx.size(),
                                             std::vector<double>(gt_idx.size(), 0.0));
    for (std::size_t r = 0; r < det_idx.size(); ++r) {
      for (std::size_t c = 0; c < gt_idx.size(); ++c) {
        const double v =
            iou(scene.detections[det_idx[r]].box, scene.ground_truths[gt_idx[c]].box);
        if (v >= tau) weights[r][c] = v;
      }
    }
    const auto best = brute_force_assignment(weights);
    for (const auto& [r, c] : best.pairs) all_ious.push_back(weights[r][c]);
  }
  return canonical_total(std::move(all_ious));
}

// ---------------------------------------------------------------------------
// Pinned examples

TEST(Match, SingleClearPairIsTp) {
  const std::vector<Detection> dets = {det(box(0, 0, 10, 10), 1, 0.9, 0)};
  const std::vector<GroundTruthBox> gts = {gt(box(0, 0, 10, 9), 1)};
  ASSERT_GE(iou(dets[0].box, gts[0].box), 0.8);
  const Matching m = match(dets, gts, hungarian_config());
  ASSERT_EQ(m.tp.size(), 1u);
  EXPECT_EQ(m.tp[0].det_index, 0);
  EXPECT_EQ(m.tp[0].gt_index, 0);
  EXPECT_TRUE(m.fp.empty());
  EXPECT_TRUE(m.fn.empty());
}

TEST(Match, CrossClassPairsNeverMatch) {
  const std::vector<Detection> dets = {det(box(0, 0, 10, 10), 1, 0.9, 0)};
  const std::vector<GroundTruthBox> gts = {gt(box(0, 0, 10, 10), 2)};
  const Matching m = match(dets, gts, hungarian_config());
  EXPECT_TRUE(m.tp.empty());
  ASSERT_EQ(m.fp.size(), 1u);
  ASSERT_EQ(m.fn.size(), 1u);
}

TEST(Match, BelowThresholdPairsAreForbidden) {
  // IoU 1/3 < 0.5.
  const std::vector<Detection> dets = {det(box(0, 0, 2, 2), 1, 0.9, 0)};
  const std::vector<GroundTruthBox> gts = {gt(box(1, 0, 3, 2), 1)};
  const Matching m = match(dets, gts, hungarian_config(0.5));
  EXPECT_TRUE(m.tp.empty());
  EXPECT_EQ(m.fp.size(), 1u);
  EXPECT_EQ(m.fn.size(), 1u);
  // Same pair becomes feasible at a lower threshold.
  const Matching loose = match(dets, gts, hungarian_config(0.3));
  EXPECT_EQ(loose.tp.size(), 1u);
}

TEST(Match, EmptyInputsYieldEmptyMatching) {
  const Matching m = match({}, {}, hungarian_config());
  EXPECT_TRUE(m.tp.empty());
  EXPECT_TRUE(m.fp.empty());
  EXPECT_TRUE(m.fn.empty());
}

TEST(Match, InvalidTauIsAConfigError) {
  EXPECT_THROW(match({}, {}, hungarian_config(0.0)), ConfigError);
  EXPECT_THROW(match({}, {}, hungarian_config(1.5)), ConfigError);
  EXPECT_NO_THROW(match({}, {}, hungarian_config(1.0)));
}

TEST(Match, HungarianRecoversPairGreedyStrands) {
  // det0 (higher score) overlaps both GTs and prefers gt0; det1 is only
  // feasible with gt0. Greedy hands gt0 to det0 and strands det1; the optimal
  // assignment swaps them and matches both.
  const std::vector<Detection> dets = {
      det(box(0, 2, 10, 13), 1, 0.9, 0),  // iou 8/13 with gt0, 1/2 with gt1
      det(box(0, 0, 10, 8), 1, 0.8, 1),   // iou 4/5 with gt0, 1/8 with gt1
  };
  const std::vector<GroundTruthBox> gts = {
      gt(box(0, 0, 10, 10), 1),
      gt(box(0, 6, 10, 16), 1),
  };
  const Matching greedy = match(dets, gts, greedy_config());
  ASSERT_EQ(greedy.tp.size(), 1u);
  EXPECT_EQ(greedy.tp[0].det_index, 0);
  EXPECT_EQ(greedy.tp[0].gt_index, 0);
  ASSERT_EQ(greedy.fp.size(), 1u);
  ASSERT_EQ(greedy.fn.size(), 1u);

  const Matching hungarian = match(dets, gts, hungarian_config());
  ASSERT_EQ(hungarian.tp.size(), 2u);
  EXPECT_EQ(hungarian.tp[0].gt_index, 1);
  EXPECT_EQ(hungarian.tp[1].gt_index, 0);
  EXPECT_GT(total_matched_iou(hungarian), total_matched_iou(greedy));
}

TEST(Match, GreedyWalksDetectionsInScoreOrder) {
  // Two detections compete for one GT; the higher score wins under greedy.
  const std::vector<Detection> dets = {
      det(box(0, 0, 10, 10), 1, 0.6, 0),
      det(box(0, 0, 10, 11), 1, 0.9, 1),
  };
  const std::vector<GroundTruthBox> gts = {gt(box(0, 0, 10, 10), 1)};
  const Matching m = match(dets, gts, greedy_config());
  ASSERT_EQ(m.tp.size(), 1u);
  EXPECT_EQ(m.tp[0].det_index, 1);
  ASSERT_EQ(m.fp.size(), 1u);
  EXPECT_EQ(m.fp[0], 0);
}

// ---------------------------------------------------------------------------
// Crowd policy

TEST(Match, CrowdIgnorePolicy) {
  const std::vector<Detection> dets = {
      det(box(0, 0, 10, 10), 1, 0.9, 0),   // inside the crowd region
      det(box(50, 50, 60, 60), 1, 0.8, 1), // clear false positive
  };
  const std::vector<GroundTruthBox> gts = {gt(box(0, 0, 12, 12), 1, /*crowd=*/true)};
  const Matching m = match(dets, gts, hungarian_config());
  EXPECT_TRUE(m.tp.empty());
  ASSERT_EQ(m.fp.size(), 1u);
  EXPECT_EQ(m.fp[0], 1);
  ASSERT_EQ(m.ignored_det.size(), 1u);
  EXPECT_EQ(m.ignored_det[0], 0);
  EXPECT_TRUE(m.fn.empty());  // crowd GT never counts as a miss
  ASSERT_EQ(m.ignored_gt.size(), 1u);
  EXPECT_EQ(m.ignored_gt[0], 0);
}

TEST(Match, CrowdStrictPolicyTreatsCrowdAsNormal) {
  const std::vector<Detection> dets = {det(box(0, 0, 10, 10), 1, 0.9, 0)};
  const std::vector<GroundTruthBox> gts = {gt(box(0, 0, 11, 11), 1, /*crowd=*/true)};
  MatchConfig strict = hungarian_config();
  strict.crowd = CrowdPolicy::strict;
  const Matching m = match(dets, gts, strict);
  ASSERT_EQ(m.tp.size(), 1u);
  EXPECT_TRUE(m.ignored_gt.empty());
  EXPECT_TRUE(m.ignored_det.empty());
}

TEST(Match, CrowdIgnoreOnlyAbsorbsUnmatchedDetections) {
  // A detection that can match a real GT must not be swallowed by the crowd
  // region.
  const std::vector<Detection> dets = {det(box(0, 0, 10, 10), 1, 0.9, 0)};
  const std::vector<GroundTruthBox> gts = {
      gt(box(0, 0, 10, 11), 1),
      gt(box(0, 0, 20, 20), 1, /*crowd=*/true),
  };
  const Matching m = match(dets, gts, hungarian_config());
  ASSERT_EQ(m.tp.size(), 1u);
  EXPECT_EQ(m.tp[0].gt_index, 0);
  EXPECT_TRUE(m.ignored_det.empty());
}

TEST(Match, CrowdIgnoreIsClassExact) {
  // Crowd absorption follows the same class-exact rule as matching.
  const std::vector<Detection> dets = {det(box(0, 0, 10, 10), 2, 0.9, 0)};
  const std::vector<GroundTruthBox> gts = {gt(box(0, 0, 12, 12), 1, /*crowd=*/true)};
  const Matching m = match(dets, gts, hungarian_config());
  ASSERT_EQ(m.fp.size(), 1u);
  EXPECT_TRUE(m.ignored_det.empty());
}

// ---------------------------------------------------------------------------
// Partition invariants

void check_partition(const Matching& m, std::size_t nd, std::size_t ng) {
  std::set<int> det_seen, gt_seen;
  for (const auto& p : m.tp) {
    EXPECT_TRUE(det_seen.insert(p.det_index).second);
    EXPECT_TRUE(gt_seen.insert(p.gt_index).second);
  }
  for (int i : m.fp) EXPECT_TRUE(det_seen.insert(i).second);
  for (int i : m.ignored_det) EXPECT_TRUE(det_seen.insert(i).second);
  for (int j : m.fn) EXPECT_TRUE(gt_seen.insert(j).second);
  for (int j : m.ignored_gt) EXPECT_TRUE(gt_seen.insert(j).second);
  EXPECT_EQ(det_seen.size(), nd);
  EXPECT_EQ(gt_seen.size(), ng);
  EXPECT_TRUE(std::is_sorted(m.fp.begin(), m.fp.end()));
  EXPECT_TRUE(std::is_sorted(m.fn.begin(), m.fn.end()));
  EXPECT_TRUE(std::is_sorted(m.tp.begin(), m.tp.end(),
                             [](const TpPair& a, const TpPair& b) {
                               return a.det_index < b.det_index;
                             }));
}

TEST(Match, PartitionCoversEverythingExactlyOnce) {
  std::mt19937_64 rng(101);
  for (int trial = 0; trial < 300; ++trial) {
    const Scene s = random_scene(rng, 6, 3, /*crowd_rate=*/0.2);
    for (MatchConfig cfg : {hungarian_config(), greedy_config()}) {
      const Matching m = match(s.detections, s.ground_truths, cfg);
      check_partition(m, s.detections.size(), s.ground_truths.size());
      for (const auto& p : m.tp) {
        EXPECT_GE(p.iou, cfg.tau);
        EXPECT_EQ(s.detections[p.det_index].class_id,
                  s.ground_truths[p.gt_index].class_id);
        EXPECT_DOUBLE_EQ(
            p.iou, iou(s.detections[p.det_index].box, s.ground_truths[p.gt_index].box));
      }
    }
  }
}

TEST(Match, NoCrowdMeansTpPlusFpIsAllDetections) {
  std::mt19937_64 rng(55);
  for (int trial = 0; trial < 200; ++trial) {
    const Scene s = random_scene(rng, 6, 2, /*crowd_rate=*/0.0);
    const Matching m = match(s.detections, s.ground_truths, hungarian_config());
    EXPECT_EQ(m.tp.size() + m.fp.size(), s.detections.size());
    EXPECT_EQ(m.tp.size() + m.fn.size(), s.ground_truths.size());
    EXPECT_TRUE(m.ignored_det.empty());
    EXPECT_TRUE(m.ignored_gt.empty());
  }
}

// ---------------------------------------------------------------------------
// Oracle equivalence and orderings

TEST(Match, HungarianMatchesBruteForceOracle) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const Scene s = random_scene(rng, 5, 2);
    const Matching m = match(s.detections, s.ground_truths, hungarian_config());
    const double expected = oracle_total_iou(s, 0.5);
    EXPECT_NEAR(total_matched_iou(m), expected, 1e-9)
        << "trial " << trial << " with " << s.detections.size() << " dets, "
        << s.ground_truths.size() << " gts";
  }
}

TEST(Match, GreedyNeverBeatsHungarian) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 1000; ++trial) {
    const Scene s = random_scene(rng, 6, 2);
    const double h = total_matched_iou(match(s.detections, s.ground_truths,
                                             hungarian_config()));
    const double g = total_matched_iou(match(s.detections, s.ground_truths,
                                             greedy_config()));
    EXPECT_GE(h + 1e-12, g);
  }
}

TEST(Match, RaisingTauNeverAddsTruePositives) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const Scene s = random_scene(rng, 6, 2);
    std::size_t prev = s.detections.size() + 1;
    for (double tau : {0.1, 0.3, 0.5, 0.7, 0.9}) {
      const Matching m = match(s.detections, s.ground_truths, hungarian_config(tau));
      EXPECT_LE(m.tp.size(), prev);
      prev = m.tp.size();
    }
  }
}

TEST(Match, HungarianSetsAreInputOrderInvariant) {
  // With all pairwise IoUs distinct the optimal assignment is unique, so
  // shuffling the inputs must give back the same association.
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    const Scene s = random_scene(rng, 5, 1);
    // Drop scenes where two feasible IoUs collide (vanishingly rare with
    // continuous coordinates, but cheap to verify).
    std::vector<double> ious;
    for (const auto& d : s.detections) {
      for (const auto& g : s.ground_truths) ious.push_back(iou(d.box, g.box));
    }
    std::sort(ious.begin(), ious.end());
    if (std::adjacent_find(ious.begin(), ious.end()) != ious.end()) continue;

    const Matching base = match(s.detections, s.ground_truths, hungarian_config());
    std::set<std::pair<const void*, const void*>> base_pairs;
    for (const auto& p : base.tp) {
      base_pairs.insert({&s.detections[p.det_index], &s.ground_truths[p.gt_index]});
    }

    std::vector<int> det_perm(s.detections.size()), gt_perm(s.ground_truths.size());
    std::iota(det_perm.begin(), det_perm.end(), 0);
    std::iota(gt_perm.begin(), gt_perm.end(), 0);
    std::shuffle(det_perm.begin(), det_perm.end(), rng);
    std::shuffle(gt_perm.begin(), gt_perm.end(), rng);
    std::vector<Detection> dets2;
    std::vector<GroundTruthBox> gts2;
    for (int i : det_perm) dets2.push_back(s.detections[i]);
    for (int j : gt_perm) gts2.push_back(s.ground_truths[j]);

    const Matching shuffled = match(dets2, gts2, hungarian_config());
    std::set<std::pair<const void*, const void*>> shuffled_pairs;
    for (const auto& p : shuffled.tp) {
      shuffled_pairs.insert(
          {&s.detections[det_perm[p.det_index]], &s.ground_truths[gt_perm[p.gt_index]]});
    }
    EXPECT_EQ(base_pairs, shuffled_pairs);
  }
}

TEST(Match, EqualCostTieBreaksToLexSmallestPairList) {
  // Two identical detections over two identical GT boxes: any pairing has the
  // same total, so the tie rule must pick {(0,0),(1,1)}.
  const BoundingBox b = box(0, 0, 10, 10);
  const std::vector<Detection> dets = {det(b, 1, 0.9, 0), det(b, 1, 0.9, 1)};
  const std::vector<GroundTruthBox> gts = {gt(b, 1), gt(b, 1)};
  const Matching m = match(dets, gts, hungarian_config());
  ASSERT_EQ(m.tp.size(), 2u);
  EXPECT_EQ(m.tp[0].det_index, 0);
  EXPECT_EQ(m.tp[0].gt_index, 0);
  EXPECT_EQ(m.tp[1].det_index, 1);
  EXPECT_EQ(m.tp[1].gt_index, 1);
}

TEST(Match, StructuredTiesMatchOracleTieBreak) {
  // Grids of identical boxes create many equal-cost optima; the production
  // tie-break must agree with the oracle's lexicographic rule.
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    // Up to 4 distinct positions, detections and GT drawn from the same set,
    // all class 1 — heavy duplication by construction.
    std::vector<BoundingBox> positions;
    const int npos = 1 + static_cast<int>(uniform01(rng) * 3);
    for (int i = 0; i < npos; ++i) {
      const double x = std::floor(uniform01(rng) * 3.0) * 15.0;
      const double y = std::floor(uniform01(rng) * 3.0) * 15.0;
      positions.push_back(box(x, y, x + 10, y + 10));
    }
    Scene s;
    const int nd = 1 + static_cast<int>(uniform01(rng) * 4);
    const int ng = 1 + static_cast<int>(uniform01(rng) * 4);
    for (int i = 0; i < nd; ++i) {
      const auto& p = positions[static_cast<std::size_t>(uniform01(rng) * npos)];
      s.detections.push_back(det(p, 1, 0.5, i));
    }
    for (int j = 0; j < ng; ++j) {
      const auto& p = positions[static_cast<std::size_t>(uniform01(rng) * npos)];
      s.ground_truths.push_back(gt(p, 1));
    }

    std::vector<std::vector<double>> weights(
        s.detections.size(), std::vector<double>(s.ground_truths.size(), 0.0));
    for (std::size_t r = 0; r < s.detections.size(); ++r) {
      for (std::size_t c = 0; c < s.ground_truths.size(); ++c) {
        const double v = iou(s.detections[r].box, s.ground_truths[c].box);
        if (v >= 0.5) weights[r][c] = v;
      }
    }
    const auto oracle = brute_force_assignment(weights);

    const Matching m = match(s.detections, s.ground_truths, hungarian_config());
    std::vector<std::pair<int, int>> pairs;
    for (const auto& p : m.tp) pairs.push_back({p.det_index, p.gt_index});
    std::sort(pairs.begin(), pairs.end());
    EXPECT_EQ(pairs, oracle.pairs) << "trial " << trial;
  }
}

// ---------------------------------------------------------------------------
// Error sets

TEST(ErrorSets, PerfectMatchingIsEmpty) {
  const BoundingBox b = box(0, 0, 10, 10);
  const std::vector<Detection> dets = {det(b, 1, 0.9, 0)};
  const std::vector<GroundTruthBox> gts = {gt(b, 1)};
  const Matching m = match(dets, gts, hungarian_config());
  EXPECT_TRUE(error_set(m, ErrorSetKind::fp, dets, gts).empty());
  EXPECT_TRUE(error_set(m, ErrorSetKind::fn, dets, gts).empty());
  EXPECT_TRUE(error_set(m, ErrorSetKind::all_errors, dets, gts).empty());
}

TEST(ErrorSets, NoGtMakesEveryDetectionFalsePositive) {
  const std::vector<Detection> dets = {
      det(box(0, 0, 1, 1), 1, 0.9, 0),
      det(box(2, 2, 3, 3), 2, 0.8, 1),
      det(box(4, 4, 5, 5), 1, 0.7, 2),
  };
  const Matching m = match(dets, {}, hungarian_config());
  const auto fp = error_set(m, ErrorSetKind::fp, dets, {});
  ASSERT_EQ(fp.size(), 3u);
  EXPECT_EQ(fp[0].box, dets[0].box);
  EXPECT_EQ(fp[1].class_id, 2);
  EXPECT_TRUE(error_set(m, ErrorSetKind::fn, dets, {}).empty());
}

TEST(ErrorSets, CombinedSetIsFpThenFn) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    const Scene s = random_scene(rng, 5, 2);
    const Matching m = match(s.detections, s.ground_truths, hungarian_config());
    const auto fp = error_set(m, ErrorSetKind::fp, s.detections, s.ground_truths);
    const auto fn = error_set(m, ErrorSetKind::fn, s.detections, s.ground_truths);
    const auto all = error_set(m, ErrorSetKind::all_errors, s.detections, s.ground_truths);
    ASSERT_EQ(all.size(), fp.size() + fn.size());
    for (std::size_t i = 0; i < fp.size(); ++i) {
      EXPECT_EQ(all[i].box, fp[i].box);
      EXPECT_EQ(all[i].class_id, fp[i].class_id);
    }
    for (std::size_t i = 0; i < fn.size(); ++i) {
      EXPECT_EQ(all[fp.size() + i].box, fn[i].box);
      EXPECT_EQ(all[fp.size() + i].class_id, fn[i].class_id);
    }
  }
}

}  // namespace
}  // namespace hardmine
