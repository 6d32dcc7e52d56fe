#include "hardmine/dataset.hpp"

#include <algorithm>

#include "hardmine/errors.hpp"

namespace hardmine {

void ClassTable::add(ClassId id, std::string name) {
  if (by_id_.count(id) != 0) {
    throw IngestError("duplicate class id " + std::to_string(id));
  }
  if (by_name_.count(name) != 0) {
    throw IngestError("duplicate class name '" + name + "'");
  }
  by_name_.emplace(name, id);
  by_id_.emplace(id, std::move(name));
}

std::optional<ClassId> ClassTable::id_of(std::string_view name) const {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) return std::nullopt;
  return it->second;
}

const std::string& ClassTable::name_of(ClassId id) const {
  auto it = by_id_.find(id);
  if (it == by_id_.end()) {
    throw IngestError("unknown class id " + std::to_string(id));
  }
  return it->second;
}

void Dataset::rebuild_index() {
  index_.clear();
  for (std::size_t i = 0; i < images.size(); ++i) {
    auto [it, inserted] = index_.emplace(images[i].id, i);
    if (!inserted) {
      throw IngestError("duplicate image id " + std::to_string(images[i].id));
    }
  }
}

const ImageRecord* Dataset::find(ImageId id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return nullptr;
  return &images[it->second];
}

ImageRecord* Dataset::find(ImageId id) {
  auto it = index_.find(id);
  if (it == index_.end()) return nullptr;
  return &images[it->second];
}

void sort_pool_canonical(std::vector<Detection>& pool) {
  std::stable_sort(pool.begin(), pool.end(), [](const Detection& a, const Detection& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.input_index < b.input_index;
  });
}

std::vector<Detection> filter_positive(const std::vector<Detection>& pool, double eta) {
  std::vector<Detection> out;
  out.reserve(pool.size());
  for (const Detection& d : pool) {
    if (d.score > eta) out.push_back(d);
  }
  return out;
}

Dataset apply_class_remap(const Dataset& dataset, const ClassRemap& remap) {
  // Resolve every source class to a target id (or to "discard"). The remap
  // must be total over the source schema so that typos fail loudly instead of
  // silently dropping a class.
  std::map<ClassId, std::optional<ClassId>> id_map;
  ClassTable target;
  ClassId next_id = 1;
  for (const auto& [source_id, source_name] : dataset.classes.by_id()) {
    auto it = remap.find(source_name);
    if (it == remap.end()) {
      throw IngestError("class '" + source_name + "' is not covered by the remap");
    }
    if (!it->second.has_value()) {
      id_map.emplace(source_id, std::nullopt);
      continue;
    }
    const std::string& target_name = *it->second;
    std::optional<ClassId> existing = target.id_of(target_name);
    if (!existing.has_value()) {
      target.add(next_id, target_name);
      existing = next_id;
      ++next_id;
    }
    id_map.emplace(source_id, existing);
  }

  Dataset out;
  out.classes = std::move(target);
  out.score_mode = dataset.score_mode;
  out.has_annotations = dataset.has_annotations;
  out.images.reserve(dataset.images.size());
  for (const ImageRecord& image : dataset.images) {
    ImageRecord rec;
    rec.id = image.id;
    rec.width = image.width;
    rec.height = image.height;
    for (const Detection& d : image.detections) {
      auto it = id_map.find(d.class_id);
      if (it == id_map.end()) {
        throw IngestError("detection references unknown class id " +
                          std::to_string(d.class_id));
      }
      if (!it->second.has_value()) continue;  // discarded class
      Detection mapped = d;
      mapped.class_id = *it->second;
      rec.detections.push_back(std::move(mapped));
    }
    // Filtering preserves the canonical pool order of the survivors.
    if (image.ground_truths.has_value()) {
      rec.ground_truths.emplace();
      for (const GroundTruthBox& g : *image.ground_truths) {
        auto it = id_map.find(g.class_id);
        if (it == id_map.end()) {
          throw IngestError("ground truth references unknown class id " +
                            std::to_string(g.class_id));
        }
        if (!it->second.has_value()) continue;
        GroundTruthBox mapped = g;
        mapped.class_id = *it->second;
        rec.ground_truths->push_back(mapped);
      }
    }
    out.images.push_back(std::move(rec));
  }
  out.rebuild_index();
  return out;
}

}  // namespace hardmine
