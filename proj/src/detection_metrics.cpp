#include "hazguard/detection_metrics.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"

#include "hazguard/errors.hpp"
#include "hazguard/geometry.hpp"

namespace hazguard {

namespace {

constexpr std::array<double, 5> kGroundingThresholds = {0.3, 0.4, 0.5, 0.6, 0.7};

std::vector<double> coco_thresholds() {
    std::vector<double> out;
    for (int i = 0; i < 10; ++i) out.push_back(0.5 + 0.05 * i);
    return out;
}

}  // namespace

MatchResult match_detections(std::span<const Detection> predictions,
                             std::span<const GroundTruth> ground_truth, double alpha) {
    if (!(alpha > 0.0) || alpha > 1.0) {
        throw ArgumentError("match_detections: alpha must be in (0, 1], got " +
                            std::to_string(alpha));
    }

    std::vector<std::size_t> order(predictions.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return predictions[a].score > predictions[b].score;
    });

    MatchResult result;
    std::vector<bool> gt_taken(ground_truth.size(), false);
    for (std::size_t pi : order) {
        const Detection& pred = predictions[pi];
        double best_iou = 0.0;
        std::size_t best_gt = ground_truth.size();
        for (std::size_t gi = 0; gi < ground_truth.size(); ++gi) {
            if (gt_taken[gi] || ground_truth[gi].cls != pred.cls) continue;
            const double overlap = iou(pred.box, ground_truth[gi].box);
            if (overlap >= alpha && overlap > best_iou) {
                best_iou = overlap;
                best_gt = gi;
            }
        }
        if (best_gt < ground_truth.size()) {
            gt_taken[best_gt] = true;
            result.matches.push_back({pi, best_gt, best_iou});
        }
    }

    std::sort(result.matches.begin(), result.matches.end(),
              [](const MatchPair& a, const MatchPair& b) {
                  return a.prediction_index < b.prediction_index;
              });
    result.true_positives = result.matches.size();
    result.false_positives = predictions.size() - result.matches.size();
    result.false_negatives = ground_truth.size() - result.matches.size();
    return result;
}

PrecisionRecall precision_recall(std::size_t tp, std::size_t fp, std::size_t fn) {
    PrecisionRecall pr;
    if (tp + fp > 0) pr.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    if (tp + fn > 0) pr.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
    return pr;
}

std::optional<double> average_precision(std::span<const RankedFlag> ranked,
                                        std::size_t total_gt) {
    if (total_gt == 0) return std::nullopt;

    std::vector<std::size_t> order(ranked.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return ranked[a].score > ranked[b].score;
    });

    std::size_t tp = 0;
    std::vector<double> precisions;
    std::vector<double> recalls;
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
        if (ranked[order[rank]].is_true_positive) ++tp;
        precisions.push_back(static_cast<double>(tp) / static_cast<double>(rank + 1));
        recalls.push_back(static_cast<double>(tp) / static_cast<double>(total_gt));
    }
    if (tp > total_gt) {
        throw ArgumentError("average_precision: more true positives than ground truth");
    }

    double sum = 0.0;
    for (int level = 0; level <= 10; ++level) {
        const double r = level / 10.0;
        double best = 0.0;
        for (std::size_t i = 0; i < recalls.size(); ++i) {
            if (recalls[i] >= r - 1e-12) best = std::max(best, precisions[i]);
        }
        sum += best;
    }
    return sum / 11.0;
}

double mean_average_precision(
    const std::vector<std::vector<std::optional<double>>>& ap_by_class_and_threshold) {
    if (ap_by_class_and_threshold.empty()) {
        throw ArgumentError("mean_average_precision: empty table");
    }
    double class_sum = 0.0;
    std::size_t class_count = 0;
    for (const auto& row : ap_by_class_and_threshold) {
        double threshold_sum = 0.0;
        std::size_t threshold_count = 0;
        for (const std::optional<double>& ap : row) {
            if (ap.has_value()) {
                threshold_sum += *ap;
                ++threshold_count;
            }
        }
        if (threshold_count > 0) {
            class_sum += threshold_sum / static_cast<double>(threshold_count);
            ++class_count;
        }
    }
    if (class_count == 0) {
        throw ArgumentError("mean_average_precision: no class has ground truth");
    }
    return class_sum / static_cast<double>(class_count);
}

namespace {

// Ranked TP/FP flags for one class at one threshold, pooled across images.
std::vector<RankedFlag> ranked_flags_for_class(std::span<const ImageDetections> images,
                                               ObjectClass cls, double alpha,
                                               std::size_t* total_gt) {
    std::vector<RankedFlag> flags;
    *total_gt = 0;
    for (const ImageDetections& image : images) {
        std::vector<Detection> preds;
        std::vector<GroundTruth> gts;
        for (const Detection& d : image.predictions) {
            if (d.cls == cls) preds.push_back(d);
        }
        for (const GroundTruth& g : image.ground_truth) {
            if (g.cls == cls) gts.push_back(g);
        }
        *total_gt += gts.size();
        if (preds.empty()) continue;
        const MatchResult match = match_detections(preds, gts, alpha);
        std::vector<bool> is_tp(preds.size(), false);
        for (const MatchPair& pair : match.matches) is_tp[pair.prediction_index] = true;
        for (std::size_t i = 0; i < preds.size(); ++i) {
            flags.push_back({preds[i].score, is_tp[i]});
        }
    }
    return flags;
}

}  // namespace

DetectionEvaluation evaluate_detections(std::span<const ImageDetections> images) {
    if (images.empty()) {
        throw ArgumentError("evaluate_detections: empty corpus");
    }
    DetectionEvaluation eval;
    eval.images = images.size();

    std::vector<std::vector<std::optional<double>>> grounding_table;
    std::vector<std::vector<std::optional<double>>> coco_table;
    const std::vector<double> coco = coco_thresholds();

    for (ObjectClass cls : all_object_classes()) {
        std::vector<std::optional<double>> grounding_row;
        for (double alpha : kGroundingThresholds) {
            std::size_t total_gt = 0;
            const std::vector<RankedFlag> flags =
                ranked_flags_for_class(images, cls, alpha, &total_gt);
            grounding_row.push_back(average_precision(flags, total_gt));
        }
        std::vector<std::optional<double>> coco_row;
        for (double alpha : coco) {
            std::size_t total_gt = 0;
            const std::vector<RankedFlag> flags =
                ranked_flags_for_class(images, cls, alpha, &total_gt);
            coco_row.push_back(average_precision(flags, total_gt));
        }

        // Pooled counts at the 0.5 threshold for per-class precision/recall.
        std::size_t tp = 0;
        std::size_t fp = 0;
        std::size_t fn = 0;
        bool any = false;
        for (const ImageDetections& image : images) {
            std::vector<Detection> preds;
            std::vector<GroundTruth> gts;
            for (const Detection& d : image.predictions) {
                if (d.cls == cls) preds.push_back(d);
            }
            for (const GroundTruth& g : image.ground_truth) {
                if (g.cls == cls) gts.push_back(g);
            }
            if (preds.empty() && gts.empty()) continue;
            any = true;
            const MatchResult match = match_detections(preds, gts, 0.5);
            tp += match.true_positives;
            fp += match.false_positives;
            fn += match.false_negatives;
        }
        if (any) {
            ClassMetrics metrics;
            metrics.true_positives = tp;
            metrics.false_positives = fp;
            metrics.false_negatives = fn;
            const PrecisionRecall pr = precision_recall(tp, fp, fn);
            metrics.precision = pr.precision;
            metrics.recall = pr.recall;
            metrics.ap50 = grounding_row[2];
            eval.per_class[cls] = metrics;
        }

        grounding_table.push_back(std::move(grounding_row));
        coco_table.push_back(std::move(coco_row));
    }

    eval.map_grounding = mean_average_precision(grounding_table);
    std::vector<std::vector<std::optional<double>>> map50_table;
    for (const auto& row : coco_table) map50_table.push_back({row[0]});
    eval.map50 = mean_average_precision(map50_table);
    eval.map50_95 = mean_average_precision(coco_table);
    return eval;
}

std::vector<GroundTruth> load_ground_truth(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("load_ground_truth: cannot open " + path.string());
    }
    std::vector<GroundTruth> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream fields(line);
        int cls_index;
        double cx, cy, w, h;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        if (!(fields >> cls_index >> cx >> cy >> w >> h)) {
            throw SchemaError("load_ground_truth: " + path.string(),
                              {"line " + std::to_string(lineno) +
                               ": expected '<class> <cx> <cy> <w> <h>'"});
        }
        std::string extra;
        if (fields >> extra) {
            throw SchemaError("load_ground_truth: " + path.string(),
                              {"line " + std::to_string(lineno) + ": trailing fields"});
        }
        if (cls_index < 0 || cls_index >= static_cast<int>(kNumObjectClasses)) {
            throw SchemaError("load_ground_truth: " + path.string(),
                              {"line " + std::to_string(lineno) + ": class index " +
                               std::to_string(cls_index) + " out of range"});
        }
        GroundTruth gt;
        gt.box = BoundingBox{cx, cy, w, h};
        gt.cls = static_cast<ObjectClass>(cls_index);
        require_valid_box(gt.box, path.string() + ":" + std::to_string(lineno));
        out.push_back(gt);
    }
    return out;
}

std::vector<Detection> parse_detections(std::string_view json_text, const std::string& context,
                                        std::string* image_ref) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError("parse_detections: " + context, {e.what()});
    }
    if (!doc.is_object() || !doc.contains("image") || !doc.contains("detections") ||
        !doc["image"].is_string() || !doc["detections"].is_array()) {
        throw SchemaError("parse_detections: " + context,
                          {"expected {\"image\": <string>, \"detections\": [...]}"});
    }
    if (image_ref != nullptr) *image_ref = doc["image"].get<std::string>();

    std::vector<Detection> out;
    std::size_t index = 0;
    for (const nlohmann::json& entry : doc["detections"]) {
        const std::string where = "detections[" + std::to_string(index) + "]";
        ++index;
        if (!entry.is_object()) {
            throw SchemaError("parse_detections: " + context, {where + ": not an object"});
        }
        for (const char* field : {"class", "cx", "cy", "w", "h", "score"}) {
            if (!entry.contains(field)) {
                throw SchemaError("parse_detections: " + context,
                                  {where + ": missing field '" + field + "'"});
            }
        }
        if (!entry["class"].is_string()) {
            throw SchemaError("parse_detections: " + context,
                              {where + ": 'class' must be a string"});
        }
        for (const char* field : {"cx", "cy", "w", "h", "score"}) {
            if (!entry[field].is_number()) {
                throw SchemaError("parse_detections: " + context,
                                  {where + ": '" + field + "' must be a number"});
            }
        }
        Detection det;
        const std::optional<ObjectClass> cls = class_from_name(entry["class"].get<std::string>());
        if (!cls.has_value()) {
            throw SchemaError("parse_detections: " + context,
                              {where + ": unknown class '" + entry["class"].get<std::string>() +
                               "'"});
        }
        det.cls = *cls;
        det.box = BoundingBox{entry["cx"].get<double>(), entry["cy"].get<double>(),
                              entry["w"].get<double>(), entry["h"].get<double>()};
        det.score = entry["score"].get<double>();
        if (det.score < 0.0 || det.score > 1.0) {
            throw SchemaError("parse_detections: " + context,
                              {where + ": score " + std::to_string(det.score) + " outside [0, 1]"});
        }
        require_valid_box(det.box, context + " " + where);
        out.push_back(det);
    }
    return out;
}

std::vector<Detection> load_detections(const std::filesystem::path& path,
                                       std::string* image_ref) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("load_detections: cannot open " + path.string());
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_detections(buffer.str(), path.string(), image_ref);
}

std::vector<ImageDetections> load_detection_corpus(const std::filesystem::path& predictions_dir,
                                                   const std::filesystem::path& labels_dir,
                                                   std::vector<std::string>* warnings) {
    if (!std::filesystem::is_directory(predictions_dir)) {
        throw IoError("load_detection_corpus: not a directory: " + predictions_dir.string());
    }
    if (!std::filesystem::is_directory(labels_dir)) {
        throw IoError("load_detection_corpus: not a directory: " + labels_dir.string());
    }

    std::set<std::string> label_stems;
    for (const auto& entry : std::filesystem::directory_iterator(labels_dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".txt") {
            label_stems.insert(entry.path().stem().string());
        }
    }
    if (label_stems.empty()) {
        throw IoError("load_detection_corpus: no .txt label files in " + labels_dir.string());
    }

    std::set<std::string> prediction_stems;
    for (const auto& entry : std::filesystem::directory_iterator(predictions_dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json") {
            prediction_stems.insert(entry.path().stem().string());
        }
    }

    std::vector<ImageDetections> out;
    for (const std::string& stem : label_stems) {
        ImageDetections image;
        image.image_ref = stem;
        image.ground_truth = load_ground_truth(labels_dir / (stem + ".txt"));
        if (prediction_stems.contains(stem)) {
            image.predictions = load_detections(predictions_dir / (stem + ".json"));
        } else if (warnings != nullptr) {
            warnings->push_back("no prediction file for label '" + stem + "'");
        }
        out.push_back(std::move(image));
    }
    for (const std::string& stem : prediction_stems) {
        if (!label_stems.contains(stem) && warnings != nullptr) {
            warnings->push_back("prediction file '" + stem + "' has no label file");
        }
    }
    return out;
}

}  // namespace hazguard
