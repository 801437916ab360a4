#include "hazguard/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hazguard/errors.hpp"

namespace hazguard {

namespace {

constexpr double kPixelSlack = 1e-6;  // tolerate float noise at image borders

}  // namespace

bool box_valid(const BoundingBox& b) {
    return std::isfinite(b.cx) && std::isfinite(b.cy) && std::isfinite(b.w) && std::isfinite(b.h) &&
           b.cx >= 0.0 && b.cx <= 1.0 && b.cy >= 0.0 && b.cy <= 1.0 &&
           b.w > 0.0 && b.w <= 1.0 && b.h > 0.0 && b.h <= 1.0;
}

void require_valid_box(const BoundingBox& b, const std::string& context) {
    if (!box_valid(b)) {
        std::ostringstream os;
        os << context << ": invalid bounding box (cx=" << b.cx << ", cy=" << b.cy
           << ", w=" << b.w << ", h=" << b.h << ")";
        throw ArgumentError(os.str());
    }
}

ClampedCorners clamped_corners(const BoundingBox& b) {
    return ClampedCorners{
        std::max(0.0, b.cx - b.w / 2.0),
        std::max(0.0, b.cy - b.h / 2.0),
        std::min(1.0, b.cx + b.w / 2.0),
        std::min(1.0, b.cy + b.h / 2.0),
    };
}

BoundingBox normalize_box(double px_left, double px_top, double px_width, double px_height,
                          double img_w, double img_h) {
    if (!(img_w > 0.0) || !(img_h > 0.0)) {
        std::ostringstream os;
        os << "normalize_box: non-positive image dimensions " << img_w << "x" << img_h;
        throw ArgumentError(os.str());
    }
    if (!(px_width > 0.0) || !(px_height > 0.0)) {
        std::ostringstream os;
        os << "normalize_box: non-positive box size " << px_width << "x" << px_height;
        throw ArgumentError(os.str());
    }
    if (px_left < -kPixelSlack || px_top < -kPixelSlack ||
        px_left + px_width > img_w + kPixelSlack || px_top + px_height > img_h + kPixelSlack) {
        std::ostringstream os;
        os << "normalize_box: box (" << px_left << ", " << px_top << ", " << px_width << ", "
           << px_height << ") lies outside image " << img_w << "x" << img_h;
        throw ArgumentError(os.str());
    }
    BoundingBox b;
    b.w = px_width / img_w;
    b.h = px_height / img_h;
    b.cx = (px_left + px_width / 2.0) / img_w;
    b.cy = (px_top + px_height / 2.0) / img_h;
    return b;
}

PixelBox to_pixel_box(const BoundingBox& b, double img_w, double img_h) {
    if (!(img_w > 0.0) || !(img_h > 0.0)) {
        throw ArgumentError("to_pixel_box: non-positive image dimensions");
    }
    PixelBox p;
    p.width = b.w * img_w;
    p.height = b.h * img_h;
    p.left = b.cx * img_w - p.width / 2.0;
    p.top = b.cy * img_h - p.height / 2.0;
    return p;
}

double iou(const BoundingBox& a, const BoundingBox& b) {
    require_valid_box(a, "iou");
    require_valid_box(b, "iou");

    const ClampedCorners ca = clamped_corners(a);
    const ClampedCorners cb = clamped_corners(b);

    const double ix = std::min(ca.right, cb.right) - std::max(ca.left, cb.left);
    const double iy = std::min(ca.bottom, cb.bottom) - std::max(ca.top, cb.top);
    if (ix <= 0.0 || iy <= 0.0) {
        return 0.0;
    }
    const double inter = ix * iy;
    const double area_a = (ca.right - ca.left) * (ca.bottom - ca.top);
    const double area_b = (cb.right - cb.left) * (cb.bottom - cb.top);
    return inter / (area_a + area_b - inter);
}

}  // namespace hazguard
