#include "hardmine/matching.hpp"

#include <algorithm>
#include <map>

#include "hardmine/assignment.hpp"
#include "hardmine/errors.hpp"

namespace hardmine {
namespace {

struct ClassSlice {
  std::vector<int> dets;       // detection indices, pool order
  std::vector<int> gts;        // matchable ground-truth indices, input order
  std::vector<int> crowd_gts;  // crowd boxes set aside under the ignore policy
};

// Group indices by class; within each class the original ordering survives, so
// local index order equals global index order.
std::map<ClassId, ClassSlice> slice_by_class(const std::vector<Detection>& detections,
                                             const std::vector<GroundTruthBox>& ground_truths,
                                             CrowdPolicy policy) {
  std::map<ClassId, ClassSlice> slices;
  for (int i = 0; i < static_cast<int>(detections.size()); ++i) {
    slices[detections[i].class_id].dets.push_back(i);
  }
  for (int j = 0; j < static_cast<int>(ground_truths.size()); ++j) {
    ClassSlice& slice = slices[ground_truths[j].class_id];
    if (policy == CrowdPolicy::ignore && ground_truths[j].is_crowd) {
      slice.crowd_gts.push_back(j);
    } else {
      slice.gts.push_back(j);
    }
  }
  return slices;
}

void match_hungarian(const std::vector<Detection>& detections,
                     const std::vector<GroundTruthBox>& ground_truths,
                     const ClassSlice& slice, double tau, Matching& out) {
  const int n = static_cast<int>(slice.dets.size());
  const int m = static_cast<int>(slice.gts.size());
  if (n == 0 || m == 0) return;
  std::vector<double> weights(static_cast<std::size_t>(n) * m, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      const double v = iou(detections[slice.dets[i]].box, ground_truths[slice.gts[j]].box);
      if (v >= tau) weights[static_cast<std::size_t>(i) * m + j] = v;
    }
  }
  const AssignmentResult res = max_weight_assignment(n, m, weights);
  for (int i = 0; i < n; ++i) {
    const int j = res.row_to_col[i];
    if (j < 0) continue;
    out.tp.push_back(TpPair{slice.dets[i], slice.gts[j],
                            weights[static_cast<std::size_t>(i) * m + j]});
  }
}

void match_greedy(const std::vector<Detection>& detections,
                  const std::vector<GroundTruthBox>& ground_truths,
                  const ClassSlice& slice, double tau, Matching& out) {
  std::vector<char> gt_taken(slice.gts.size(), 0);
  // The scan order is descending score with index as the tie-break, whatever
  // order the detections arrived in (canonical pools are already sorted, but
  // the contract holds for arbitrary callers too).
  std::vector<int> scan = slice.dets;
  std::stable_sort(scan.begin(), scan.end(), [&](int a, int b) {
    return detections[a].score > detections[b].score;
  });
  for (int det_index : scan) {
    int best_j = -1;
    double best_iou = 0.0;
    for (int j = 0; j < static_cast<int>(slice.gts.size()); ++j) {
      if (gt_taken[j]) continue;
      const double v = iou(detections[det_index].box, ground_truths[slice.gts[j]].box);
      if (v < tau) continue;
      if (v > best_iou) {  // strict: equal IoU keeps the earlier gt index
        best_iou = v;
        best_j = j;
      }
    }
    if (best_j >= 0) {
      gt_taken[best_j] = 1;
      out.tp.push_back(TpPair{det_index, slice.gts[best_j], best_iou});
    }
  }
}

}  // namespace

Matching match(const std::vector<Detection>& detections,
               const std::vector<GroundTruthBox>& ground_truths,
               const MatchConfig& config) {
  if (!(config.tau > 0.0 && config.tau <= 1.0)) {
    throw ConfigError("IoU threshold must lie in (0, 1], got " + std::to_string(config.tau));
  }

  Matching result;
  const auto slices = slice_by_class(detections, ground_truths, config.crowd);
  for (const auto& [class_id, slice] : slices) {
    if (config.algorithm == MatchAlgorithm::hungarian) {
      match_hungarian(detections, ground_truths, slice, config.tau, result);
    } else {
      match_greedy(detections, ground_truths, slice, config.tau, result);
    }
  }
  std::sort(result.tp.begin(), result.tp.end(),
            [](const TpPair& a, const TpPair& b) { return a.det_index < b.det_index; });

  std::vector<char> det_matched(detections.size(), 0);
  std::vector<char> gt_matched(ground_truths.size(), 0);
  for (const TpPair& pair : result.tp) {
    det_matched[pair.det_index] = 1;
    gt_matched[pair.gt_index] = 1;
  }

  // Unmatched detections become false positives unless a crowd region of the
  // same class covers them at or above the threshold (ignore policy only).
  for (int i = 0; i < static_cast<int>(detections.size()); ++i) {
    if (det_matched[i]) continue;
    bool absorbed = false;
    if (config.crowd == CrowdPolicy::ignore) {
      for (int j = 0; j < static_cast<int>(ground_truths.size()); ++j) {
        if (!ground_truths[j].is_crowd) continue;
        if (ground_truths[j].class_id != detections[i].class_id) continue;
        if (iou(detections[i].box, ground_truths[j].box) >= config.tau) {
          absorbed = true;
          break;
        }
      }
    }
    if (absorbed) {
      result.ignored_det.push_back(i);
    } else {
      result.fp.push_back(i);
    }
  }

  for (int j = 0; j < static_cast<int>(ground_truths.size()); ++j) {
    if (config.crowd == CrowdPolicy::ignore && ground_truths[j].is_crowd) {
      result.ignored_gt.push_back(j);
      continue;
    }
    if (!gt_matched[j]) result.fn.push_back(j);
  }
  return result;
}

std::vector<ErrorElement> error_set(const Matching& matching, ErrorSetKind kind,
                                    const std::vector<Detection>& detections,
                                    const std::vector<GroundTruthBox>& ground_truths) {
  std::vector<ErrorElement> out;
  if (kind == ErrorSetKind::fp || kind == ErrorSetKind::all_errors) {
    for (int i : matching.fp) {
      out.push_back(ErrorElement{detections[i].box, detections[i].class_id});
    }
  }
  if (kind == ErrorSetKind::fn || kind == ErrorSetKind::all_errors) {
    for (int j : matching.fn) {
      out.push_back(ErrorElement{ground_truths[j].box, ground_truths[j].class_id});
    }
  }
  return out;
}

}  // namespace hardmine
