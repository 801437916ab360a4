#pragma once

#include <string>

namespace hazguard {

/// Axis-aligned box in normalized image coordinates, center format.
/// Invariants: 0 <= cx, cy <= 1 and 0 < w, h <= 1. Corners derived from the
/// center may poke outside the unit square; geometric operations clamp them.
struct BoundingBox {
    double cx = 0.0;
    double cy = 0.0;
    double w = 0.0;
    double h = 0.0;

    bool operator==(const BoundingBox&) const = default;
};

bool box_valid(const BoundingBox& b);

/// Throws ArgumentError with a diagnostic when the invariants do not hold.
void require_valid_box(const BoundingBox& b, const std::string& context);

/// Corner-format box clamped to the unit square.
struct ClampedCorners {
    double left, top, right, bottom;
};

ClampedCorners clamped_corners(const BoundingBox& b);

/// Pixel-space box, top-left corner format.
struct PixelBox {
    double left, top, width, height;
};

/// Converts a pixel-space box to a normalized center-format box.
/// Requires positive image dimensions and the box to lie inside the image.
BoundingBox normalize_box(double px_left, double px_top, double px_width, double px_height,
                          double img_w, double img_h);

/// Inverse of normalize_box; round-trips within 0.5 px.
PixelBox to_pixel_box(const BoundingBox& b, double img_w, double img_h);

/// Intersection-over-union of the two clamped boxes. Symmetric, 1 exactly for
/// identical boxes, 0 exactly for disjoint ones.
double iou(const BoundingBox& a, const BoundingBox& b);

}  // namespace hazguard
