#pragma once

#include <vector>

#include "hardmine/dataset.hpp"

namespace hardmine {

/// Which matcher decides the detection <-> ground-truth association.
///  - hungarian: maximize the total IoU over same-class pairs at or above the
///    threshold; equal-cost optima resolve to the lexicographically smallest
///    (detection index, gt index) pair list.
///  - greedy: walk detections in descending score order and give each the
///    highest-IoU unmatched ground truth of its class (the evaluation-protocol
///    style matcher).
enum class MatchAlgorithm { hungarian, greedy };

/// How crowd-region ground truth participates.
///  - ignore: crowd boxes are unmatchable and never count as misses; an
///    unmatched detection overlapping a crowd box at or above the threshold is
///    set aside instead of counted as a false positive.
///  - strict: crowd boxes behave like ordinary ground truth.
enum class CrowdPolicy { ignore, strict };

struct MatchConfig {
  double tau = 0.5;  ///< minimum IoU for a feasible pair, in (0, 1]
  MatchAlgorithm algorithm = MatchAlgorithm::hungarian;
  CrowdPolicy crowd = CrowdPolicy::ignore;
};

struct TpPair {
  int det_index = 0;
  int gt_index = 0;
  double iou = 0.0;
};

/// Partition of one image's detections and ground truth into outcome sets.
/// Indices refer to positions in the input vectors. Every detection lands in
/// exactly one of {tp, fp, ignored_det} and every ground truth in exactly one
/// of {tp, fn, ignored_gt}; with no crowd boxes |tp| + |fp| = |detections|.
struct Matching {
  std::vector<TpPair> tp;       ///< ascending detection index
  std::vector<int> fp;          ///< unmatched detections, ascending
  std::vector<int> fn;          ///< unmatched non-crowd ground truth, ascending
  std::vector<int> ignored_gt;  ///< crowd ground truth under the ignore policy
  std::vector<int> ignored_det; ///< detections absorbed by crowd regions
};

/// Match detections against ground truth. Only same-class pairs with
/// iou >= tau are eligible. Throws ConfigError for tau outside (0, 1].
Matching match(const std::vector<Detection>& detections,
               const std::vector<GroundTruthBox>& ground_truths,
               const MatchConfig& config);

enum class ErrorSetKind { fp, fn, all_errors };

/// A box that participates in an error set, with its class.
struct ErrorElement {
  BoundingBox box;
  ClassId class_id = 0;
};

/// Materialize an error set: fp yields the unmatched detection boxes in
/// ascending detection order, fn the missed ground-truth boxes in ascending
/// ground-truth order, and all_errors their concatenation (fp first).
std::vector<ErrorElement> error_set(const Matching& matching, ErrorSetKind kind,
                                    const std::vector<Detection>& detections,
                                    const std::vector<GroundTruthBox>& ground_truths);

}  // namespace hardmine
