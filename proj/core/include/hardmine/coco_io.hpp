#pragma once

#include <map>
#include <string>
#include <vector>

#include "hardmine/dataset.hpp"

namespace hardmine {

/// Knobs shared by the ingest entry points.
struct IngestOptions {
  double floor = 0.05;       ///< detections with score < floor are dropped at load
  bool strict = true;        ///< strict: unknown image ids are errors; lenient: warn + skip
  bool clip_boxes = false;   ///< clip boxes to the image frame when dimensions are known
  ScoreMode score_mode = ScoreMode::softmax;
};

/// Load an annotation dump: {"images": [...], "annotations": [...], "categories": [...]}.
/// The "annotations" key may be absent entirely, which marks a metadata-only
/// file (image sizes and the class schema, no labels); the returned dataset
/// then has has_annotations == false. Detection pools start empty.
Dataset load_annotations(const std::string& path, const IngestOptions& options);

/// Load a detection dump: a JSON array of
/// {"image_id", "category_id", "bbox", "score", optional "class_scores"/"logits"}.
/// Scores below the floor are dropped; each per-image pool comes back in
/// canonical order (descending score, ascending input index).
std::map<ImageId, std::vector<Detection>> load_detection_pools(const std::string& path,
                                                               const IngestOptions& options);

/// Attach detection pools to an existing dataset. Pools for unknown image ids
/// raise IngestError in strict mode and are skipped with a warning otherwise.
void attach_detections(Dataset& dataset, std::map<ImageId, std::vector<Detection>> pools,
                       const IngestOptions& options);

/// Build a dataset from detections alone (no annotation file). Image sizes are
/// unknown (0) and ground truth is absent; class names default to the decimal
/// category id.
Dataset dataset_from_detections(std::map<ImageId, std::vector<Detection>> pools,
                                const IngestOptions& options);

/// Load a class remap file: a JSON object {"source name": "target name" | null}.
ClassRemap load_class_remap(const std::string& path);

/// Serialize back to the annotation dump format. Inverse of load_annotations
/// for datasets that were loaded from one.
void save_annotations(const Dataset& dataset, const std::string& path);

/// Serialize all detection pools to the detection dump format.
void save_detections(const Dataset& dataset, const std::string& path);

}  // namespace hardmine
