#include "hardmine/geometry.hpp"

#include <algorithm>

namespace hardmine {

double intersection_area(const BoundingBox& a, const BoundingBox& b) {
  const double w = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const double h = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  if (w <= 0.0 || h <= 0.0) return 0.0;
  return w * h;
}

double iou(const BoundingBox& a, const BoundingBox& b) {
  const double inter = intersection_area(a, b);
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0.0) return 0.0;
  return inter / uni;
}

BoundingBox clip_to_frame(const BoundingBox& b, double width, double height) {
  BoundingBox out;
  out.x_min = std::clamp(b.x_min, 0.0, width);
  out.y_min = std::clamp(b.y_min, 0.0, height);
  out.x_max = std::clamp(b.x_max, 0.0, width);
  out.y_max = std::clamp(b.y_max, 0.0, height);
  return out;
}

}  // namespace hardmine
