#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hazguard/detection.hpp"

namespace hazguard {

struct GroundTruth {
    BoundingBox box;
    ObjectClass cls;
};

struct MatchPair {
    std::size_t prediction_index;
    std::size_t ground_truth_index;
    double iou;
};

struct MatchResult {
    std::vector<MatchPair> matches;
    std::size_t true_positives = 0;
    std::size_t false_positives = 0;
    std::size_t false_negatives = 0;
};

// Greedy one-to-one matching: predictions in descending score order, each
// taking the same-class ground truth with the highest overlap at or above
// alpha. alpha must lie in (0, 1].
MatchResult match_detections(std::span<const Detection> predictions,
                             std::span<const GroundTruth> ground_truth, double alpha);

struct PrecisionRecall {
    double precision = 0.0;
    double recall = 0.0;
};

// Zero denominators yield zero rather than NaN.
PrecisionRecall precision_recall(std::size_t tp, std::size_t fp, std::size_t fn);

struct RankedFlag {
    double score;
    bool is_true_positive;
};

// 11-point interpolated average precision over recall levels {0.0, 0.1, ..., 1.0}.
// Absent when the class has no ground truth.
std::optional<double> average_precision(std::span<const RankedFlag> ranked, std::size_t total_gt);

// Mean over classes of the mean over thresholds; classes with no ground truth
// anywhere (all entries absent) are excluded.
double mean_average_precision(
    const std::vector<std::vector<std::optional<double>>>& ap_by_class_and_threshold);

struct ImageDetections {
    std::string image_ref;
    std::vector<Detection> predictions;
    std::vector<GroundTruth> ground_truth;
};

struct ClassMetrics {
    std::size_t true_positives = 0;
    std::size_t false_positives = 0;
    std::size_t false_negatives = 0;
    double precision = 0.0;
    double recall = 0.0;
    std::optional<double> ap50;
};

struct DetectionEvaluation {
    std::map<ObjectClass, ClassMetrics> per_class;
    double map_grounding = 0.0;     // thresholds 0.3, 0.4, 0.5, 0.6, 0.7
    double map50 = 0.0;             // threshold 0.5
    double map50_95 = 0.0;          // thresholds 0.50:0.05:0.95
    std::size_t images = 0;
    std::vector<std::string> warnings;
};

DetectionEvaluation evaluate_detections(std::span<const ImageDetections> images);

// Loads "<class_index> <cx> <cy> <w> <h>" lines.
std::vector<GroundTruth> load_ground_truth(const std::filesystem::path& path);

// Parses {"image": ..., "detections": [{class, cx, cy, w, h, score}]}.
std::vector<Detection> parse_detections(std::string_view json_text, const std::string& context,
                                        std::string* image_ref = nullptr);

// Loads a detection file of the same shape.
std::vector<Detection> load_detections(const std::filesystem::path& path,
                                       std::string* image_ref = nullptr);

// Pairs prediction files with label files by stem. Label files drive the
// corpus; prediction files without labels produce warnings.
std::vector<ImageDetections> load_detection_corpus(const std::filesystem::path& predictions_dir,
                                                   const std::filesystem::path& labels_dir,
                                                   std::vector<std::string>* warnings = nullptr);

}  // namespace hazguard
