#include "hardmine/coco_io.hpp"

#include <cmath>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "hardmine/errors.hpp"

namespace hardmine {
namespace {

using nlohmann::json;

json parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw IngestError("cannot open '" + path + "'");
  }
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw IngestError("'" + path + "': " + e.what());
  }
}

double require_number(const json& j, const char* key, const std::string& context) {
  if (!j.contains(key) || !j.at(key).is_number()) {
    throw IngestError(context + ": missing or non-numeric '" + key + "'");
  }
  return j.at(key).get<double>();
}

std::int64_t require_integer(const json& j, const char* key, const std::string& context) {
  if (!j.contains(key) || !j.at(key).is_number_integer()) {
    throw IngestError(context + ": missing or non-integer '" + key + "'");
  }
  return j.at(key).get<std::int64_t>();
}

BoundingBox read_bbox(const json& j, const std::string& context) {
  if (!j.contains("bbox") || !j.at("bbox").is_array() || j.at("bbox").size() != 4) {
    throw IngestError(context + ": 'bbox' must be an array of four numbers");
  }
  const json& b = j.at("bbox");
  for (const json& v : b) {
    if (!v.is_number()) throw IngestError(context + ": 'bbox' must be numeric");
  }
  const double x = b[0].get<double>();
  const double y = b[1].get<double>();
  const double w = b[2].get<double>();
  const double h = b[3].get<double>();
  if (w < 0.0 || h < 0.0) {
    throw IngestError(context + ": negative bbox extent (w=" + std::to_string(w) +
                      ", h=" + std::to_string(h) + ")");
  }
  return BoundingBox::from_xywh(x, y, w, h);
}

std::vector<double> read_vector(const json& j, const char* key, const std::string& context) {
  std::vector<double> out;
  const json& arr = j.at(key);
  if (!arr.is_array() || arr.empty()) {
    throw IngestError(context + ": '" + std::string(key) + "' must be a non-empty array");
  }
  out.reserve(arr.size());
  for (const json& v : arr) {
    if (!v.is_number()) {
      throw IngestError(context + ": '" + std::string(key) + "' must be numeric");
    }
    const double x = v.get<double>();
    if (!std::isfinite(x)) {
      throw IngestError(context + ": non-finite entry in '" + std::string(key) + "'");
    }
    out.push_back(x);
  }
  return out;
}

void validate_class_scores(const std::vector<double>& p, ScoreMode mode,
                           const std::string& context) {
  double sum = 0.0;
  for (double v : p) {
    if (v < 0.0 || v > 1.0) {
      throw IngestError(context + ": class score " + std::to_string(v) +
                        " outside [0, 1]");
    }
    sum += v;
  }
  if (mode == ScoreMode::softmax && std::abs(sum - 1.0) > 1e-6) {
    throw IngestError(context + ": class scores sum to " + std::to_string(sum) +
                      ", expected 1 within 1e-6");
  }
}

void ensure_class_known(ClassTable& table, ClassId id) {
  if (!table.contains(id)) {
    // No schema was provided for this id; register the decimal id as its name
    // so class filters can still address it.
    table.add(id, std::to_string(id));
  }
}

}  // namespace

Dataset load_annotations(const std::string& path, const IngestOptions& options) {
  const json root = parse_file(path);
  if (!root.is_object() || !root.contains("images") || !root.at("images").is_array()) {
    throw IngestError("'" + path + "': expected an object with an 'images' array");
  }

  Dataset dataset;
  dataset.score_mode = options.score_mode;

  const bool have_categories = root.contains("categories");
  if (have_categories) {
    if (!root.at("categories").is_array()) {
      throw IngestError("'" + path + "': 'categories' must be an array");
    }
    for (const json& c : root.at("categories")) {
      const std::string context = "'" + path + "' category";
      const ClassId id = static_cast<ClassId>(require_integer(c, "id", context));
      if (!c.contains("name") || !c.at("name").is_string()) {
        throw IngestError(context + " " + std::to_string(id) + ": missing 'name'");
      }
      dataset.classes.add(id, c.at("name").get<std::string>());
    }
  }

  for (const json& im : root.at("images")) {
    const std::string context = "'" + path + "' image entry";
    ImageRecord rec;
    rec.id = require_integer(im, "id", context);
    if (im.contains("width")) {
      rec.width = static_cast<int>(require_integer(im, "width", context));
    }
    if (im.contains("height")) {
      rec.height = static_cast<int>(require_integer(im, "height", context));
    }
    if (rec.width < 0 || rec.height < 0) {
      throw IngestError(context + " " + std::to_string(rec.id) + ": negative image size");
    }
    dataset.images.push_back(std::move(rec));
  }
  dataset.rebuild_index();  // throws on duplicate image ids

  // A file without an "annotations" key is metadata-only: sizes and schema but
  // no labels. A present-but-empty array means "annotated, zero objects".
  dataset.has_annotations = root.contains("annotations");
  if (dataset.has_annotations) {
    if (!root.at("annotations").is_array()) {
      throw IngestError("'" + path + "': 'annotations' must be an array");
    }
    for (ImageRecord& rec : dataset.images) {
      rec.ground_truths.emplace();
    }
    for (const json& a : root.at("annotations")) {
      const std::string context = "'" + path + "' annotation";
      const std::int64_t ann_id =
          a.contains("id") ? require_integer(a, "id", context) : -1;
      const std::string ann_context = context + " " + std::to_string(ann_id);
      const ImageId image_id = require_integer(a, "image_id", ann_context);
      ImageRecord* rec = dataset.find(image_id);
      if (rec == nullptr) {
        if (options.strict) {
          throw IngestError(ann_context + ": unknown image id " + std::to_string(image_id));
        }
        std::cerr << "warning: " << ann_context << ": unknown image id " << image_id
                  << ", skipped\n";
        continue;
      }
      GroundTruthBox gt;
      gt.box = read_bbox(a, ann_context);
      gt.class_id = static_cast<ClassId>(require_integer(a, "category_id", ann_context));
      if (have_categories && !dataset.classes.contains(gt.class_id)) {
        if (options.strict) {
          throw IngestError(ann_context + ": unknown category_id " +
                            std::to_string(gt.class_id));
        }
        std::cerr << "warning: " << ann_context << ": unknown category_id "
                  << gt.class_id << ", skipped\n";
        continue;
      }
      ensure_class_known(dataset.classes, gt.class_id);
      if (a.contains("iscrowd")) {
        const json& crowd = a.at("iscrowd");
        if (crowd.is_boolean()) {
          gt.is_crowd = crowd.get<bool>();
        } else if (crowd.is_number_integer()) {
          gt.is_crowd = crowd.get<int>() != 0;
        } else {
          throw IngestError(ann_context + ": 'iscrowd' must be 0/1");
        }
      }
      if (options.clip_boxes && rec->has_dimensions()) {
        gt.box = clip_to_frame(gt.box, rec->width, rec->height);
      }
      rec->ground_truths->push_back(gt);
    }
  }
  return dataset;
}

std::map<ImageId, std::vector<Detection>> load_detection_pools(const std::string& path,
                                                               const IngestOptions& options) {
  const json root = parse_file(path);
  if (!root.is_array()) {
    throw IngestError("'" + path + "': expected a JSON array of detections");
  }
  std::map<ImageId, std::vector<Detection>> pools;
  std::int64_t input_index = 0;
  for (std::size_t i = 0; i < root.size(); ++i) {
    const json& d = root[i];
    const std::string context = "'" + path + "' detection " + std::to_string(i);
    const ImageId image_id = require_integer(d, "image_id", context);
    Detection det;
    det.box = read_bbox(d, context);
    det.class_id = static_cast<ClassId>(require_integer(d, "category_id", context));
    det.score = require_number(d, "score", context);
    if (!(det.score >= 0.0 && det.score <= 1.0)) {
      throw IngestError(context + ": score " + std::to_string(det.score) +
                        " outside [0, 1]");
    }
    if (d.contains("class_scores")) {
      det.class_scores = read_vector(d, "class_scores", context);
      validate_class_scores(*det.class_scores, options.score_mode, context);
    }
    if (d.contains("logits")) {
      det.logits = read_vector(d, "logits", context);
    }
    det.input_index = input_index++;
    if (det.score < options.floor) continue;  // floor filter, strict less-than
    pools[image_id].push_back(std::move(det));
  }
  for (auto& [id, pool] : pools) {
    sort_pool_canonical(pool);
  }
  return pools;
}

void attach_detections(Dataset& dataset, std::map<ImageId, std::vector<Detection>> pools,
                       const IngestOptions& options) {
  for (auto& [image_id, pool] : pools) {
    ImageRecord* rec = dataset.find(image_id);
    if (rec == nullptr) {
      if (options.strict) {
        throw IngestError("detections reference unknown image id " +
                          std::to_string(image_id));
      }
      std::cerr << "warning: detections reference unknown image id " << image_id
                << ", skipped\n";
      continue;
    }
    for (Detection& det : pool) {
      if (!dataset.classes.contains(det.class_id)) {
        if (options.strict) {
          throw IngestError("image " + std::to_string(image_id) +
                            ": detection references unknown category_id " +
                            std::to_string(det.class_id));
        }
        std::cerr << "warning: image " << image_id << ": unknown category_id "
                  << det.class_id << ", detection skipped\n";
        det.score = -1.0;  // mark for removal below
        continue;
      }
      if (options.clip_boxes && rec->has_dimensions()) {
        det.box = clip_to_frame(det.box, rec->width, rec->height);
      }
    }
    std::erase_if(pool, [](const Detection& d) { return d.score < 0.0; });
    rec->detections = std::move(pool);
  }
}

Dataset dataset_from_detections(std::map<ImageId, std::vector<Detection>> pools,
                                const IngestOptions& options) {
  Dataset dataset;
  dataset.score_mode = options.score_mode;
  dataset.has_annotations = false;
  dataset.images.reserve(pools.size());
  for (auto& [image_id, pool] : pools) {
    ImageRecord rec;
    rec.id = image_id;
    for (const Detection& det : pool) {
      ensure_class_known(dataset.classes, det.class_id);
    }
    rec.detections = std::move(pool);
    dataset.images.push_back(std::move(rec));
  }
  dataset.rebuild_index();
  return dataset;
}

ClassRemap load_class_remap(const std::string& path) {
  const json root = parse_file(path);
  if (!root.is_object()) {
    throw IngestError("'" + path + "': expected an object mapping class names");
  }
  ClassRemap remap;
  for (const auto& [key, value] : root.items()) {
    if (value.is_null()) {
      remap.emplace(key, std::nullopt);
    } else if (value.is_string()) {
      remap.emplace(key, value.get<std::string>());
    } else {
      throw IngestError("'" + path + "': remap target for '" + key +
                        "' must be a string or null");
    }
  }
  return remap;
}

void save_annotations(const Dataset& dataset, const std::string& path) {
  json root = json::object();
  json images = json::array();
  for (const ImageRecord& rec : dataset.images) {
    json im{{"id", rec.id}, {"width", rec.width}, {"height", rec.height}};
    images.push_back(std::move(im));
  }
  root["images"] = std::move(images);

  json categories = json::array();
  for (const auto& [id, name] : dataset.classes.by_id()) {
    categories.push_back(json{{"id", id}, {"name", name}});
  }
  root["categories"] = std::move(categories);

  if (dataset.has_annotations) {
    json annotations = json::array();
    std::int64_t next_id = 1;
    for (const ImageRecord& rec : dataset.images) {
      if (!rec.ground_truths.has_value()) continue;
      for (const GroundTruthBox& gt : *rec.ground_truths) {
        json a{{"id", next_id++},
               {"image_id", rec.id},
               {"category_id", gt.class_id},
               {"bbox", {gt.box.x_min, gt.box.y_min, gt.box.width(), gt.box.height()}},
               {"area", gt.box.area()},
               {"iscrowd", gt.is_crowd ? 1 : 0}};
        annotations.push_back(std::move(a));
      }
    }
    root["annotations"] = std::move(annotations);
  }

  std::ofstream out(path);
  if (!out) {
    throw IngestError("cannot write '" + path + "'");
  }
  out << root.dump();
  out << '\n';
}

void save_detections(const Dataset& dataset, const std::string& path) {
  json root = json::array();
  for (const ImageRecord& rec : dataset.images) {
    for (const Detection& det : rec.detections) {
      json d{{"image_id", rec.id},
             {"category_id", det.class_id},
             {"bbox", {det.box.x_min, det.box.y_min, det.box.width(), det.box.height()}},
             {"score", det.score}};
      if (det.class_scores.has_value()) d["class_scores"] = *det.class_scores;
      if (det.logits.has_value()) d["logits"] = *det.logits;
      root.push_back(std::move(d));
    }
  }
  std::ofstream out(path);
  if (!out) {
    throw IngestError("cannot write '" + path + "'");
  }
  out << root.dump();
  out << '\n';
}

}  // namespace hardmine
