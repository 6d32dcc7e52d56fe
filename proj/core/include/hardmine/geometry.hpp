#pragma once

namespace hardmine {

/// Axis-aligned box in pixel coordinates, (x_min, y_min, x_max, y_max) convention.
/// Boxes are stored unclipped; clipping to the image frame is an explicit,
/// opt-in ingest step so that one policy applies everywhere downstream.
struct BoundingBox {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return width() * height(); }

  /// Convert from the (x, y, width, height) wire format used by annotation dumps.
  static BoundingBox from_xywh(double x, double y, double w, double h) {
    return BoundingBox{x, y, x + w, y + h};
  }

  bool operator==(const BoundingBox&) const = default;
};

/// Area of the overlap region; 0 when the boxes are disjoint or degenerate.
double intersection_area(const BoundingBox& a, const BoundingBox& b);

/// Intersection over union; 0 when the union has no area.
double iou(const BoundingBox& a, const BoundingBox& b);

/// Intersect a box with the [0, width] x [0, height] image frame.
BoundingBox clip_to_frame(const BoundingBox& b, double width, double height);

}  // namespace hardmine
