#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hardmine/geometry.hpp"

namespace hardmine {

using ImageId = std::int64_t;
using ClassId = int;

/// How per-detection class probability vectors are to be interpreted.
///  - softmax:    class_scores holds a distribution over classes (sums to 1),
///                logits are the raw pre-softmax activations.
///  - one_vs_all: each detection carries only its scalar score; probability
///                vectors, when needed, are derived from that score.
enum class ScoreMode { softmax, one_vs_all };

/// One detector output box. `score` is the detector confidence in [0, 1];
/// `class_scores` / `logits` are optional per-class vectors used by the
/// uncertainty baselines. `input_index` is the position in the source dump and
/// acts as the deterministic tie-breaker for equal scores.
struct Detection {
  BoundingBox box;
  ClassId class_id = 0;
  double score = 0.0;
  std::optional<std::vector<double>> class_scores;
  std::optional<std::vector<double>> logits;
  std::int64_t input_index = 0;
};

struct GroundTruthBox {
  BoundingBox box;
  ClassId class_id = 0;
  bool is_crowd = false;
};

/// One image worth of data. `detections` is the retained detection pool:
/// already floor-filtered and held in canonical order (descending score,
/// ascending input index). `ground_truths` is absent for annotation-free runs
/// and present-but-possibly-empty for annotated images with no objects.
struct ImageRecord {
  ImageId id = 0;
  int width = 0;   // 0 means unknown (detection dumps carry no image size)
  int height = 0;
  std::vector<Detection> detections;
  std::optional<std::vector<GroundTruthBox>> ground_truths;

  bool has_dimensions() const { return width > 0 && height > 0; }
  double area() const { return static_cast<double>(width) * static_cast<double>(height); }
};

/// Bidirectional category id <-> name table.
class ClassTable {
 public:
  void add(ClassId id, std::string name);
  bool contains(ClassId id) const { return by_id_.count(id) != 0; }
  std::optional<ClassId> id_of(std::string_view name) const;
  const std::string& name_of(ClassId id) const;  // throws IngestError when unknown
  std::size_t size() const { return by_id_.size(); }
  /// Entries in ascending id order.
  const std::map<ClassId, std::string>& by_id() const { return by_id_; }

 private:
  std::map<ClassId, std::string> by_id_;
  std::map<std::string, ClassId, std::less<>> by_name_;
};

/// A set of images plus the class schema they share. Images keep their input
/// order; `rebuild_index()` must be called after the image list is mutated.
struct Dataset {
  std::vector<ImageRecord> images;
  ClassTable classes;
  ScoreMode score_mode = ScoreMode::softmax;
  bool has_annotations = false;

  void rebuild_index();
  const ImageRecord* find(ImageId id) const;
  ImageRecord* find(ImageId id);
  std::size_t size() const { return images.size(); }

 private:
  std::map<ImageId, std::size_t> index_;
};

/// Sort a detection pool into canonical order: descending score, ties broken
/// by ascending input index.
void sort_pool_canonical(std::vector<Detection>& pool);

/// Detections with score strictly above `eta`, pool order preserved.
std::vector<Detection> filter_positive(const std::vector<Detection>& pool, double eta);

/// Class renaming map, total over the source schema. A null target means the
/// class is discarded: both detections and ground truth of that class are
/// removed from the remapped dataset.
using ClassRemap = std::map<std::string, std::optional<std::string>>;

/// Rewrite a dataset into the target schema described by `remap`. Target ids
/// are assigned 1..K in order of first appearance while walking the source
/// table in ascending id order. Per-class probability vectors are carried
/// through unchanged: the uncertainty baselines consume them class-agnostically,
/// so renaming the schema must not perturb them.
Dataset apply_class_remap(const Dataset& dataset, const ClassRemap& remap);

}  // namespace hardmine
