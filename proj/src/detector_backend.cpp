#include "hazguard/detector_backend.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <mutex>

#include <opencv2/core.hpp>
#include <opencv2/dnn.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "httplib.h"
#include "json.hpp"

#include "hazguard/digest.hpp"
#include "hazguard/detection_metrics.hpp"
#include "hazguard/errors.hpp"
#include "hazguard/geometry.hpp"

namespace hazguard {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

class FilesDetector : public Detector {
public:
    FilesDetector(std::filesystem::path dir, double score_threshold)
        : dir_(std::move(dir)), score_threshold_(score_threshold) {
        if (!std::filesystem::is_directory(dir_)) {
            throw ConfigError("files detector: not a directory: " + dir_.string());
        }
    }

    TimedDetections detect(std::span<const unsigned char> /*image_bytes*/,
                           const std::string& image_ref) override {
        const Clock::time_point start = Clock::now();
        const std::string stem = std::filesystem::path(image_ref).stem().string();
        const std::filesystem::path path = dir_ / (stem + ".json");
        if (!std::filesystem::exists(path)) {
            throw IoError("files detector: no detection file " + path.string() + " for '" +
                          image_ref + "'");
        }
        TimedDetections out;
        out.detections = filter_detections(load_detections(path), score_threshold_);
        out.detect_latency_ms = elapsed_ms(start);
        return out;
    }

    std::string id() const override { return "files:" + dir_.string(); }

private:
    std::filesystem::path dir_;
    double score_threshold_;
};

class HttpDetector : public Detector {
public:
    HttpDetector(std::string endpoint, double score_threshold, double timeout_seconds)
        : endpoint_(std::move(endpoint)),
          score_threshold_(score_threshold),
          timeout_seconds_(timeout_seconds) {}

    TimedDetections detect(std::span<const unsigned char> image_bytes,
                           const std::string& image_ref) override {
        const nlohmann::json request = {{"image", base64_encode(image_bytes)}};
        httplib::Client client(endpoint_);
        client.set_connection_timeout(std::chrono::duration<double>(timeout_seconds_));
        client.set_read_timeout(std::chrono::duration<double>(timeout_seconds_));

        const Clock::time_point start = Clock::now();
        const httplib::Result result =
            client.Post("/detect", request.dump(), "application/json");
        const double latency = elapsed_ms(start);
        if (!result || result->status < 200 || result->status >= 300) {
            throw EndpointError(
                "http detector: " + endpoint_ + " failed for '" + image_ref + "'" +
                (result ? " with status " + std::to_string(result->status) : ""));
        }
        TimedDetections out;
        out.detections = filter_detections(
            parse_detections(result->body, endpoint_ + " response for '" + image_ref + "'"),
            score_threshold_);
        out.detect_latency_ms = latency;
        return out;
    }

    std::string id() const override { return "http:" + endpoint_; }

private:
    std::string endpoint_;
    double score_threshold_;
    double timeout_seconds_;
};

class EmbeddedDetector : public Detector {
public:
    EmbeddedDetector(const std::filesystem::path& model_path, int input_size,
                     double score_threshold, std::vector<ObjectClass> class_list)
        : input_size_(input_size),
          score_threshold_(score_threshold),
          class_list_(std::move(class_list)),
          model_path_(model_path) {
        if (!std::filesystem::exists(model_path)) {
            throw ModelLoadError("embedded detector: no model file " + model_path.string());
        }
        try {
            net_ = cv::dnn::readNetFromONNX(model_path.string());
        } catch (const cv::Exception& e) {
            throw ModelLoadError("embedded detector: cannot load " + model_path.string() + ": " +
                                 e.what());
        }
    }

    TimedDetections detect(std::span<const unsigned char> image_bytes,
                           const std::string& image_ref) override {
        const Clock::time_point start = Clock::now();
        const cv::Mat encoded(1, static_cast<int>(image_bytes.size()), CV_8UC1,
                              const_cast<unsigned char*>(image_bytes.data()));
        const cv::Mat image = cv::imdecode(encoded, cv::IMREAD_COLOR);
        if (image.empty()) {
            throw DecodeError("embedded detector: cannot decode image '" + image_ref + "'");
        }

        const LetterboxTransform transform =
            letterbox_transform(image.cols, image.rows, input_size_);
        cv::Mat canvas(input_size_, input_size_, CV_8UC3, cv::Scalar(114, 114, 114));
        const int scaled_w = std::max(1, static_cast<int>(std::lround(image.cols * transform.scale)));
        const int scaled_h = std::max(1, static_cast<int>(std::lround(image.rows * transform.scale)));
        cv::Mat resized;
        cv::resize(image, resized, cv::Size(scaled_w, scaled_h));
        const int off_x = static_cast<int>(std::lround(transform.pad_x));
        const int off_y = static_cast<int>(std::lround(transform.pad_y));
        resized.copyTo(canvas(cv::Rect(off_x, off_y, scaled_w, scaled_h)));

        const cv::Mat blob = cv::dnn::blobFromImage(canvas, 1.0 / 255.0, cv::Size(), cv::Scalar(),
                                                    /*swapRB=*/true, /*crop=*/false);
        cv::Mat output;
        {
            // One inference at a time: cv::dnn networks are not re-entrant.
            std::lock_guard<std::mutex> lock(net_mutex_);
            net_.setInput(blob);
            output = net_.forward();
        }

        if (output.dims != 3 || output.size[0] != 1) {
            throw ModelLoadError("embedded detector: unexpected output shape from " +
                                 model_path_.string());
        }
        const std::size_t attrs = 4 + class_list_.size();
        std::size_t candidates = 0;
        bool channels_first = false;
        if (static_cast<std::size_t>(output.size[1]) == attrs) {
            channels_first = true;
            candidates = static_cast<std::size_t>(output.size[2]);
        } else if (static_cast<std::size_t>(output.size[2]) == attrs) {
            candidates = static_cast<std::size_t>(output.size[1]);
        } else {
            throw ModelLoadError("embedded detector: output attributes do not match class list");
        }
        const std::span<const float> data(output.ptr<float>(),
                                          static_cast<std::size_t>(output.total()));
        TimedDetections result;
        result.detections = decode_detector_output(data, candidates, channels_first, transform,
                                                   score_threshold_, class_list_);
        result.detect_latency_ms = elapsed_ms(start);
        return result;
    }

    std::string id() const override { return "embedded:" + model_path_.string(); }

private:
    int input_size_;
    double score_threshold_;
    std::vector<ObjectClass> class_list_;
    std::filesystem::path model_path_;
    cv::dnn::Net net_;
    std::mutex net_mutex_;
};

}  // namespace

std::optional<BoundingBox> LetterboxTransform::normalized_from_canvas(double cx, double cy,
                                                                      double w, double h) const {
    const double left = from_canvas_x(cx - w / 2.0);
    const double right = from_canvas_x(cx + w / 2.0);
    const double top = from_canvas_y(cy - h / 2.0);
    const double bottom = from_canvas_y(cy + h / 2.0);
    const double cl = std::clamp(left, 0.0, static_cast<double>(img_w));
    const double cr = std::clamp(right, 0.0, static_cast<double>(img_w));
    const double ct = std::clamp(top, 0.0, static_cast<double>(img_h));
    const double cb = std::clamp(bottom, 0.0, static_cast<double>(img_h));
    if (cr - cl <= 0.0 || cb - ct <= 0.0) return std::nullopt;
    return BoundingBox{(cl + cr) / 2.0 / img_w, (ct + cb) / 2.0 / img_h, (cr - cl) / img_w,
                       (cb - ct) / img_h};
}

LetterboxTransform letterbox_transform(int img_w, int img_h, int target) {
    if (img_w <= 0 || img_h <= 0 || target <= 0) {
        throw ArgumentError("letterbox_transform: dimensions must be positive");
    }
    LetterboxTransform out;
    out.img_w = img_w;
    out.img_h = img_h;
    out.target = target;
    out.scale = static_cast<double>(target) / std::max(img_w, img_h);
    out.pad_x = (target - img_w * out.scale) / 2.0;
    out.pad_y = (target - img_h * out.scale) / 2.0;
    return out;
}

void validate_detector_config(const DetectorConfig& cfg) {
    if (cfg.input_size <= 0) {
        throw ConfigError("detector config: input_size must be positive");
    }
    if (cfg.score_threshold < 0.0 || cfg.score_threshold > 1.0) {
        throw ConfigError("detector config: score_threshold must be in [0, 1]");
    }
    const int sources = (cfg.model_path.empty() ? 0 : 1) + (cfg.files_dir.empty() ? 0 : 1) +
                        (cfg.endpoint.empty() ? 0 : 1);
    if (sources != 1) {
        throw ConfigError("detector config: exactly one of model_path, files_dir, endpoint "
                          "must be set");
    }
    switch (cfg.kind) {
        case DetectorKind::embedded_model:
            if (cfg.model_path.empty()) {
                throw ConfigError("detector config: embedded backend needs model_path");
            }
            break;
        case DetectorKind::files:
            if (cfg.files_dir.empty()) {
                throw ConfigError("detector config: files backend needs files_dir");
            }
            break;
        case DetectorKind::http:
            if (cfg.endpoint.empty()) {
                throw ConfigError("detector config: http backend needs endpoint");
            }
            break;
    }
}

std::unique_ptr<Detector> make_detector(const DetectorConfig& cfg) {
    validate_detector_config(cfg);
    switch (cfg.kind) {
        case DetectorKind::embedded_model: {
            std::vector<ObjectClass> classes = cfg.class_list;
            if (classes.empty()) {
                const auto all = all_object_classes();
                classes.assign(all.begin(), all.end());
            }
            return std::make_unique<EmbeddedDetector>(cfg.model_path, cfg.input_size,
                                                      cfg.score_threshold, std::move(classes));
        }
        case DetectorKind::files:
            return std::make_unique<FilesDetector>(cfg.files_dir, cfg.score_threshold);
        case DetectorKind::http:
            return std::make_unique<HttpDetector>(cfg.endpoint, cfg.score_threshold,
                                                  cfg.timeout_seconds);
    }
    throw ConfigError("detector config: unknown backend kind");
}

std::vector<Detection> decode_detector_output(std::span<const float> data,
                                              std::size_t candidates, bool channels_first,
                                              const LetterboxTransform& transform,
                                              double score_threshold,
                                              std::span<const ObjectClass> class_list,
                                              double nms_iou) {
    const std::size_t attrs = 4 + class_list.size();
    if (class_list.empty()) {
        throw ArgumentError("decode_detector_output: empty class list");
    }
    if (data.size() != attrs * candidates) {
        throw ArgumentError("decode_detector_output: tensor size does not match shape");
    }
    const auto at = [&](std::size_t candidate, std::size_t attr) {
        return channels_first ? data[attr * candidates + candidate]
                              : data[candidate * attrs + attr];
    };

    std::vector<cv::Rect2d> boxes;
    std::vector<float> scores;
    std::vector<int> class_ids;
    std::vector<BoundingBox> normalized;
    for (std::size_t c = 0; c < candidates; ++c) {
        double best_score = 0.0;
        std::size_t best_class = 0;
        for (std::size_t k = 0; k < class_list.size(); ++k) {
            const double score = at(c, 4 + k);
            if (score > best_score) {
                best_score = score;
                best_class = k;
            }
        }
        if (best_score < score_threshold) continue;
        const double cx = at(c, 0);
        const double cy = at(c, 1);
        const double w = at(c, 2);
        const double h = at(c, 3);
        const std::optional<BoundingBox> box = transform.normalized_from_canvas(cx, cy, w, h);
        if (!box.has_value()) continue;
        // NMS runs in canvas coordinates so overlap matches the raw output.
        boxes.emplace_back(cx - w / 2.0, cy - h / 2.0, w, h);
        scores.push_back(static_cast<float>(std::min(best_score, 1.0)));
        class_ids.push_back(static_cast<int>(best_class));
        normalized.push_back(*box);
    }

    // Class-aware NMS: suppress within a class only.
    std::vector<Detection> out;
    for (std::size_t k = 0; k < class_list.size(); ++k) {
        std::vector<cv::Rect2d> class_boxes;
        std::vector<float> class_scores;
        std::vector<std::size_t> source;
        for (std::size_t i = 0; i < boxes.size(); ++i) {
            if (class_ids[i] == static_cast<int>(k)) {
                class_boxes.push_back(boxes[i]);
                class_scores.push_back(scores[i]);
                source.push_back(i);
            }
        }
        if (class_boxes.empty()) continue;
        std::vector<int> keep;
        cv::dnn::NMSBoxes(class_boxes, class_scores, static_cast<float>(score_threshold),
                          static_cast<float>(nms_iou), keep);
        for (int idx : keep) {
            const std::size_t i = source[static_cast<std::size_t>(idx)];
            Detection det;
            det.box = normalized[i];
            det.cls = class_list[k];
            det.score = scores[i];
            out.push_back(det);
        }
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const Detection& a, const Detection& b) { return a.score > b.score; });
    return out;
}

std::vector<ObjectClass> load_class_list(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("load_class_list: cannot open " + path.string());
    }
    std::vector<ObjectClass> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string name = line;
        if (!name.empty() && name.back() == '\r') name.pop_back();
        const std::size_t begin = name.find_first_not_of(" \t");
        if (begin == std::string::npos) continue;
        const std::size_t end = name.find_last_not_of(" \t");
        name = name.substr(begin, end - begin + 1);
        const std::optional<ObjectClass> cls = class_from_name(name);
        if (!cls.has_value()) {
            throw SchemaError("load_class_list: " + path.string(),
                              {"line " + std::to_string(lineno) + ": unknown class '" + name +
                               "'"});
        }
        out.push_back(*cls);
    }
    if (out.empty()) {
        throw SchemaError("load_class_list: " + path.string(), {"no classes listed"});
    }
    return out;
}

}  // namespace hazguard
