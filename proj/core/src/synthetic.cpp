#include "hardmine/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "hardmine/errors.hpp"
#include "hardmine/rng.hpp"

namespace hardmine {
namespace {

int uniform_int(std::mt19937_64& rng, int n) {
  // n tiny here, so the negligible bias of the multiply trick is acceptable
  // and the draw stays platform-independent.
  return std::min(n - 1, static_cast<int>(uniform01(rng) * n));
}

double log_uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::exp(std::log(lo) + uniform01(rng) * (std::log(hi) - std::log(lo)));
}

struct PlacedBox {
  BoundingBox box;
  ClassId class_id = 0;
};

bool collides(const BoundingBox& candidate, ClassId class_id,
              const std::vector<PlacedBox>& others, double tau) {
  for (const PlacedBox& other : others) {
    if (other.class_id == class_id && iou(candidate, other.box) >= tau) return true;
  }
  return false;
}

BoundingBox random_box(std::mt19937_64& rng, const SynthConfig& cfg) {
  const double w = log_uniform(rng, cfg.min_side, cfg.max_side);
  const double h = log_uniform(rng, cfg.min_side, cfg.max_side);
  const double x0 = uniform01(rng) * (cfg.image_width - w);
  const double y0 = uniform01(rng) * (cfg.image_height - h);
  return BoundingBox{x0, y0, x0 + w, y0 + h};
}

// A box leaning on `anchor`: same size, shifted by 40-80% of the anchor's
// extent per axis. The shift keeps IoU with the anchor itself below ~0.25, so
// planting next to a same-class box never creates a spurious match at the
// usual thresholds, while still producing substantial raw overlap.
BoundingBox overlapping_box(std::mt19937_64& rng, const BoundingBox& anchor,
                            const SynthConfig& cfg) {
  const double w = anchor.width();
  const double h = anchor.height();
  const double sx = uniform01(rng) < 0.5 ? -1.0 : 1.0;
  const double sy = uniform01(rng) < 0.5 ? -1.0 : 1.0;
  const double dx = sx * w * (0.4 + 0.4 * uniform01(rng));
  const double dy = sy * h * (0.4 + 0.4 * uniform01(rng));
  BoundingBox box{anchor.x_min + dx, anchor.y_min + dy, anchor.x_max + dx,
                  anchor.y_max + dy};
  return clip_to_frame(box, cfg.image_width, cfg.image_height);
}

// Place a box of class `class_id` that stays below IoU tau against every
// same-class box in `avoid`. Random retries almost always succeed; the
// shrinking fallback makes termination unconditional (a small enough box
// cannot reach IoU tau against anything bigger than itself).
BoundingBox place_avoiding(std::mt19937_64& rng, const SynthConfig& cfg, ClassId class_id,
                           const std::vector<PlacedBox>& avoid,
                           const BoundingBox* anchor) {
  for (int attempt = 0; attempt < 32; ++attempt) {
    BoundingBox candidate = (anchor != nullptr && attempt < 8)
                                ? overlapping_box(rng, *anchor, cfg)
                                : random_box(rng, cfg);
    if (candidate.width() <= 0.0 || candidate.height() <= 0.0) continue;
    if (!collides(candidate, class_id, avoid, cfg.tau)) return candidate;
  }
  double w = cfg.min_side;
  double h = cfg.min_side;
  for (;;) {
    for (int attempt = 0; attempt < 8; ++attempt) {
      const double x0 = uniform01(rng) * (cfg.image_width - w);
      const double y0 = uniform01(rng) * (cfg.image_height - h);
      const BoundingBox candidate{x0, y0, x0 + w, y0 + h};
      if (!collides(candidate, class_id, avoid, cfg.tau)) return candidate;
    }
    w *= 0.5;
    h *= 0.5;
  }
}

// Annotation for a correct detection: the detection's own box, perturbed by a
// few percent. The perturbation keeps IoU with the detection above ~0.75, far
// clear of tau, while making the pair geometrically distinct.
BoundingBox jitter_copy(std::mt19937_64& rng, const BoundingBox& det,
                        const SynthConfig& cfg) {
  const double w = det.width();
  const double h = det.height();
  const double dx = (uniform01(rng) - 0.5) * 0.06 * w;
  const double dy = (uniform01(rng) - 0.5) * 0.06 * h;
  const double dw = (uniform01(rng) - 0.5) * 0.06 * w;
  const double dh = (uniform01(rng) - 0.5) * 0.06 * h;
  BoundingBox box{det.x_min + dx, det.y_min + dy, det.x_max + dx + dw,
                  det.y_max + dy + dh};
  return clip_to_frame(box, cfg.image_width, cfg.image_height);
}

// Per-class probability vector and logits with p[class] == s exactly: the
// evidence is s/(1-s)*(K-1) for the predicted class and 1 for every other, so
// the softmax of the logits reproduces the scalar score.
void attach_vectors(Detection& det, int num_classes) {
  const double s = std::clamp(det.score, 1e-9, 1.0 - 1e-9);
  std::vector<double> evidence(num_classes, 1.0);
  evidence[det.class_id - 1] = s / (1.0 - s) * static_cast<double>(num_classes - 1);
  double total = 0.0;
  for (double e : evidence) total += e;
  std::vector<double> scores(num_classes);
  std::vector<double> logits(num_classes);
  for (int c = 0; c < num_classes; ++c) {
    scores[c] = evidence[c] / total;
    logits[c] = std::log(evidence[c]);
  }
  det.class_scores = std::move(scores);
  det.logits = std::move(logits);
}

}  // namespace

Dataset make_synthetic_dataset(const SynthConfig& config) {
  if (config.num_images < 1 || config.num_classes < 1 || config.max_boxes < 1) {
    throw ConfigError("synthetic dataset needs at least one image, class and box");
  }
  if (!(config.min_side > 0.0) || !(config.max_side >= config.min_side) ||
      config.max_side > std::min(config.image_width, config.image_height)) {
    throw ConfigError("synthetic box sides must satisfy 0 < min <= max <= image size");
  }
  if (config.num_classes < 2 && config.with_class_vectors) {
    throw ConfigError("per-class vectors need at least two classes");
  }

  Dataset dataset;
  dataset.score_mode = config.with_class_vectors ? ScoreMode::softmax : ScoreMode::one_vs_all;
  dataset.has_annotations = true;
  for (int c = 1; c <= config.num_classes; ++c) {
    dataset.classes.add(c, "class_" + std::to_string(c));
  }

  dataset.images.reserve(static_cast<std::size_t>(config.num_images));
  for (int i = 1; i <= config.num_images; ++i) {
    ImageRecord image;
    image.id = i;
    image.width = config.image_width;
    image.height = config.image_height;
    image.ground_truths.emplace();

    std::mt19937_64 rng = make_stream(config.seed, static_cast<std::uint64_t>(i));
    const int slots = 1 + uniform_int(rng, config.max_boxes);

    std::vector<PlacedBox> det_boxes;    // all detection boxes so far
    std::vector<PlacedBox> gt_boxes;     // all annotation boxes so far
    std::int64_t next_index = 0;

    for (int slot = 0; slot < slots; ++slot) {
      const ClassId class_id = 1 + uniform_int(rng, config.num_classes);
      const double score = config.degenerate_scores
                               ? (uniform01(rng) < 0.5 ? 1.0 : 0.0)
                               : 0.06 + 0.935 * uniform01(rng);
      const bool correct = bernoulli(rng, score);

      Detection det;
      det.class_id = class_id;
      det.score = score;
      det.input_index = next_index++;

      if (correct) {
        // The detection must not be able to claim any existing annotation,
        // and its own annotation must not be claimable by any other
        // detection. Re-place the pair until both hold (collisions are rare,
        // so the retry budget is effectively never exhausted).
        BoundingBox gt;
        for (int attempt = 0; attempt < 16; ++attempt) {
          det.box = place_avoiding(rng, config, class_id, gt_boxes, nullptr);
          gt = jitter_copy(rng, det.box, config);
          if (!collides(gt, class_id, det_boxes, config.tau)) break;
        }
        image.ground_truths->push_back(GroundTruthBox{gt, class_id, false});
        gt_boxes.push_back(PlacedBox{gt, class_id});
      } else {
        const BoundingBox* anchor = nullptr;
        if (!det_boxes.empty() && uniform01(rng) < config.overlap_rate) {
          anchor = &det_boxes[static_cast<std::size_t>(
                                  uniform_int(rng, static_cast<int>(det_boxes.size())))]
                        .box;
        }
        det.box = place_avoiding(rng, config, class_id, gt_boxes, anchor);
      }
      if (config.with_class_vectors) attach_vectors(det, config.num_classes);
      det_boxes.push_back(PlacedBox{det.box, class_id});
      image.detections.push_back(std::move(det));
    }

    // Missed objects: annotations no detection is allowed to reach.
    for (int slot = 0; slot < slots; ++slot) {
      if (uniform01(rng) >= config.miss_rate) continue;
      const ClassId class_id = 1 + uniform_int(rng, config.num_classes);
      const BoundingBox box = place_avoiding(rng, config, class_id, det_boxes, nullptr);
      image.ground_truths->push_back(GroundTruthBox{box, class_id, false});
      gt_boxes.push_back(PlacedBox{box, class_id});
    }

    sort_pool_canonical(image.detections);
    dataset.images.push_back(std::move(image));
  }
  dataset.rebuild_index();
  return dataset;
}

}  // namespace hardmine
