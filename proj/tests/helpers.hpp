#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "hardmine/dataset.hpp"

namespace hardmine::testing {

inline BoundingBox box(double x0, double y0, double x1, double y1) {
  return BoundingBox{x0, y0, x1, y1};
}

inline Detection det(const BoundingBox& b, ClassId class_id, double score,
                     std::int64_t input_index = 0) {
  Detection d;
  d.box = b;
  d.class_id = class_id;
  d.score = score;
  d.input_index = input_index;
  return d;
}

inline GroundTruthBox gt(const BoundingBox& b, ClassId class_id, bool is_crowd = false) {
  return GroundTruthBox{b, class_id, is_crowd};
}

inline ImageRecord image(ImageId id, int width, int height, std::vector<Detection> detections,
                         std::optional<std::vector<GroundTruthBox>> ground_truths) {
  ImageRecord record;
  record.id = id;
  record.width = width;
  record.height = height;
  record.detections = std::move(detections);
  record.ground_truths = std::move(ground_truths);
  return record;
}

}  // namespace hardmine::testing
