#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hazguard/detection.hpp"

namespace hazguard {

// Aspect-preserving resize onto a square canvas with centered padding.
struct LetterboxTransform {
    int img_w = 0;
    int img_h = 0;
    int target = 0;
    double scale = 1.0;
    double pad_x = 0.0;
    double pad_y = 0.0;

    double to_canvas_x(double x) const { return x * scale + pad_x; }
    double to_canvas_y(double y) const { return y * scale + pad_y; }
    double from_canvas_x(double x) const { return (x - pad_x) / scale; }
    double from_canvas_y(double y) const { return (y - pad_y) / scale; }

    // Canvas-pixel center box to a normalized box in original-image
    // coordinates, clamped to the image; absent when nothing remains.
    std::optional<BoundingBox> normalized_from_canvas(double cx, double cy, double w,
                                                      double h) const;
};

LetterboxTransform letterbox_transform(int img_w, int img_h, int target);

enum class DetectorKind {
    embedded_model,
    files,
    http,
};

struct DetectorConfig {
    DetectorKind kind = DetectorKind::files;
    std::filesystem::path model_path;
    std::filesystem::path files_dir;
    std::string endpoint;
    int input_size = 640;
    double score_threshold = 0.25;
    std::vector<ObjectClass> class_list;  // empty means the full taxonomy
    double timeout_seconds = 30.0;
};

// Throws ConfigError unless exactly the source matching the kind is set and
// the numeric fields are in range.
void validate_detector_config(const DetectorConfig& cfg);

struct TimedDetections {
    std::vector<Detection> detections;
    double detect_latency_ms = 0.0;
};

class Detector {
public:
    virtual ~Detector() = default;
    // image_ref names the image (relative path); the files backend resolves
    // its JSON by the stem, the others decode the bytes.
    virtual TimedDetections detect(std::span<const unsigned char> image_bytes,
                                   const std::string& image_ref) = 0;
    virtual std::string id() const = 0;
};

std::unique_ptr<Detector> make_detector(const DetectorConfig& cfg);

// Raw network output (flat floats) to thresholded, NMS-filtered detections in
// normalized original-image coordinates. The tensor holds 4 + |class_list|
// attributes per candidate: center box in canvas pixels then class scores.
// channels_first selects [attrs x candidates] over [candidates x attrs].
std::vector<Detection> decode_detector_output(std::span<const float> data,
                                              std::size_t candidates, bool channels_first,
                                              const LetterboxTransform& transform,
                                              double score_threshold,
                                              std::span<const ObjectClass> class_list,
                                              double nms_iou = 0.45);

// Ordered class names, one per line; line index = model class id.
std::vector<ObjectClass> load_class_list(const std::filesystem::path& path);

}  // namespace hazguard
