#pragma once

#include <cstdint>

#include "hardmine/dataset.hpp"

namespace hardmine {

/// Recipe for a generated dataset with a perfectly calibrated detector: each
/// detection is correct (has a matching annotation) with probability exactly
/// equal to its score. The construction also guarantees the converse — no
/// detection can accidentally match an annotation it was not generated with —
/// by keeping every unintended same-class (detection, annotation) pair below
/// the IoU threshold `tau`.
struct SynthConfig {
  int num_images = 200;
  std::uint64_t seed = 0;
  int num_classes = 3;
  int image_width = 640;
  int image_height = 512;
  int max_boxes = 8;        ///< detections per image: uniform in [1, max_boxes]
  double miss_rate = 0.15;  ///< per-slot chance of an annotation with no detection
  double min_side = 16.0;   ///< box sides are log-uniform in [min_side, max_side]
  double max_side = 128.0;
  double overlap_rate = 0.5;  ///< chance a wrong box is planted next to an earlier box
  bool degenerate_scores = false;   ///< draw scores from {0, 1} instead of (0.06, 0.995)
  bool with_class_vectors = false;  ///< attach per-class scores + logits (softmax mode)
  double tau = 0.5;  ///< IoU threshold the non-collision guarantee is built for
};

/// Generate the dataset described by `config`. Deterministic: image ids are
/// 1..num_images and every image draws from its own seed-derived stream, so
/// the result does not depend on generation order. Annotations are always
/// attached; detection pools come out in canonical order.
Dataset make_synthetic_dataset(const SynthConfig& config);

}  // namespace hardmine
