#include "hazguard/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>

#include "hazguard/errors.hpp"
#include "hazguard/prompt.hpp"

namespace hazguard {

namespace {

nlohmann::ordered_json assessment_to_json(const HazardAssessment& assessment) {
    nlohmann::ordered_json out;
    nlohmann::ordered_json hazards = nlohmann::ordered_json::array();
    nlohmann::ordered_json rationales = nlohmann::ordered_json::object();
    for (std::string_view key : kCategoryKeys) {
        const std::string k(key);
        if (assessment.categories.contains(k)) hazards.push_back(k);
        const auto it = assessment.rationales.find(k);
        if (it != assessment.rationales.end()) rationales[k] = it->second;
    }
    out["hazards"] = std::move(hazards);
    out["rationales"] = std::move(rationales);
    out["warnings"] = assessment.warnings;
    return out;
}

nlohmann::ordered_json counts_to_json(const std::map<std::string, LabelCounts>& counts) {
    nlohmann::ordered_json out = nlohmann::ordered_json::object();
    for (std::string_view key : kCategoryKeys) {
        const auto it = counts.find(std::string(key));
        if (it == counts.end()) continue;
        out[std::string(key)] = {{"tp", it->second.true_positives},
                                 {"fp", it->second.false_positives},
                                 {"fn", it->second.false_negatives}};
    }
    return out;
}

nlohmann::ordered_json bertscore_to_json(const BertScore& score) {
    return {{"precision", score.precision}, {"recall", score.recall}, {"f1", score.f1}};
}

std::string format_value(double v, bool percent) {
    char buf[64];
    if (percent) {
        std::snprintf(buf, sizeof(buf), "%.1f", v * 100.0);
    } else {
        std::snprintf(buf, sizeof(buf), "%.2f", v);
    }
    return buf;
}

std::string format_delta(double delta, bool percent) {
    char buf[64];
    if (percent) {
        std::snprintf(buf, sizeof(buf), "%+.1f", delta * 100.0);
    } else {
        std::snprintf(buf, sizeof(buf), "%+.2f", delta);
    }
    return buf;
}

// Reads a numeric leaf like "corpus.micro.f1"; absent → nullopt.
std::optional<double> metric_at(const nlohmann::ordered_json& doc, const std::string& path) {
    const nlohmann::ordered_json* node = &doc;
    std::size_t begin = 0;
    while (begin <= path.size()) {
        const std::size_t dot = path.find('.', begin);
        const std::string key =
            dot == std::string::npos ? path.substr(begin) : path.substr(begin, dot - begin);
        if (!node->is_object() || !node->contains(key)) return std::nullopt;
        node = &(*node)[key];
        if (dot == std::string::npos) break;
        begin = dot + 1;
    }
    if (!node->is_number()) return std::nullopt;
    return node->get<double>();
}

std::set<std::string> image_set(const nlohmann::ordered_json& doc) {
    std::set<std::string> out;
    if (!doc.contains("per_image") || !doc["per_image"].is_array()) return out;
    for (const nlohmann::ordered_json& item : doc["per_image"]) {
        if (item.is_object() && item.contains("image") && item["image"].is_string()) {
            out.insert(item["image"].get<std::string>());
        }
    }
    return out;
}

}  // namespace

nlohmann::ordered_json report_to_json(const RunReport& report) {
    nlohmann::ordered_json doc;
    doc["report_version"] = report.report_version;
    doc["config"] = report.config_echo;

    nlohmann::ordered_json per_image = nlohmann::ordered_json::array();
    for (const PerImageResult& result : report.per_image) {
        nlohmann::ordered_json item;
        item["image"] = result.image_ref;
        item["errors"] = result.errors;
        if (result.failed()) {
            item["detections"] = nullptr;
            item["entities"] = nullptr;
            item["prompt_digest"] = nullptr;
            item["assessment"] = nullptr;
            item["counts"] = nullptr;
            item["rationale_score"] = nullptr;
        } else {
            item["detections"] = result.detection_count;
            item["entities"] = result.entity_ids;
            item["prompt_digest"] = result.prompt_digest;
            item["assessment"] = assessment_to_json(result.assessment);
            item["counts"] = counts_to_json(result.counts);
            item["rationale_score"] = result.rationale_score.has_value()
                                          ? bertscore_to_json(*result.rationale_score)
                                          : nlohmann::ordered_json(nullptr);
        }
        item["timings"] = {{"detect_ms", result.timings.detect_ms},
                           {"encode_ms", result.timings.encode_ms},
                           {"vlm_ms", result.timings.vlm_ms},
                           {"parse_ms", result.timings.parse_ms},
                           {"wall_ms", result.timings.wall_ms}};
        per_image.push_back(std::move(item));
    }
    doc["per_image"] = std::move(per_image);

    nlohmann::ordered_json corpus;
    corpus["images"] = report.per_image.size();
    corpus["scored"] = report.per_image.size() - report.error_count;
    corpus["errors"] = report.error_count;
    corpus["micro"] = {{"precision", report.corpus.micro_precision},
                       {"recall", report.corpus.micro_recall},
                       {"f1", report.corpus.micro_f1}};
    corpus["macro"] = {{"precision", report.corpus.macro_precision},
                       {"recall", report.corpus.macro_recall},
                       {"f1", report.corpus.macro_f1}};
    nlohmann::ordered_json per_category = nlohmann::ordered_json::object();
    for (std::string_view key : kCategoryKeys) {
        const auto it = report.corpus.per_category.find(std::string(key));
        if (it == report.corpus.per_category.end()) continue;
        per_category[std::string(key)] = {{"tp", it->second.counts.true_positives},
                                          {"fp", it->second.counts.false_positives},
                                          {"fn", it->second.counts.false_negatives},
                                          {"precision", it->second.precision},
                                          {"recall", it->second.recall},
                                          {"f1", it->second.f1}};
    }
    corpus["per_category"] = std::move(per_category);
    if (report.rationale.has_value()) {
        corpus["bertscore"] = {{"precision", report.rationale->precision},
                               {"recall", report.rationale->recall},
                               {"f1", report.rationale->f1},
                               {"scored", report.rationale->scored},
                               {"skipped_empty", report.rationale->skipped_empty},
                               {"errors", report.rationale->errors}};
    } else {
        corpus["bertscore"] = nullptr;
    }
    doc["corpus"] = std::move(corpus);

    nlohmann::ordered_json stages = nlohmann::ordered_json::object();
    for (const auto& [name, stats] : report.stage_stats) {
        stages[name] = {{"mean_ms", stats.mean_ms},
                        {"p50_ms", stats.p50_ms},
                        {"p95_ms", stats.p95_ms}};
    }
    doc["timing"] = {{"parallelism", report.parallelism},
                     {"wall_ms", report.wall_ms},
                     {"fps", report.fps},
                     {"stages", std::move(stages)}};
    return doc;
}

nlohmann::ordered_json report_without_timing(nlohmann::ordered_json report) {
    report.erase("timing");
    if (report.contains("per_image") && report["per_image"].is_array()) {
        for (nlohmann::ordered_json& item : report["per_image"]) {
            if (item.is_object()) item.erase("timings");
        }
    }
    return report;
}

void save_report(const std::filesystem::path& path, const RunReport& report) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("save_report: cannot write " + path.string());
    }
    out << report_to_json(report).dump(2) << "\n";
}

nlohmann::ordered_json load_report_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("load_report_json: cannot open " + path.string());
    }
    try {
        return nlohmann::ordered_json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError("load_report_json: " + path.string(), {e.what()});
    }
}

CompareSummary compare_reports(const nlohmann::ordered_json& baseline,
                               const nlohmann::ordered_json& proposed) {
    const std::set<std::string> a_images = image_set(baseline);
    const std::set<std::string> b_images = image_set(proposed);
    if (a_images != b_images) {
        throw ArgumentError("compare_reports: reports cover different image sets");
    }

    struct Row {
        const char* metric;
        const char* path;
        bool percent;
    };
    static const Row kRows[] = {
        {"micro_precision", "corpus.micro.precision", true},
        {"micro_recall", "corpus.micro.recall", true},
        {"micro_f1", "corpus.micro.f1", true},
        {"macro_precision", "corpus.macro.precision", true},
        {"macro_recall", "corpus.macro.recall", true},
        {"macro_f1", "corpus.macro.f1", true},
        {"bertscore_precision", "corpus.bertscore.precision", false},
        {"bertscore_recall", "corpus.bertscore.recall", false},
        {"bertscore_f1", "corpus.bertscore.f1", false},
        {"fps", "timing.fps", false},
    };

    CompareSummary summary;
    for (const Row& row : kRows) {
        const std::optional<double> a = metric_at(baseline, row.path);
        const std::optional<double> b = metric_at(proposed, row.path);
        if (!a.has_value() || !b.has_value()) continue;
        MetricDelta delta;
        delta.metric = row.metric;
        delta.baseline = *a;
        delta.proposed = *b;
        delta.delta = *b - *a;
        delta.formatted = format_delta(delta.delta, row.percent);
        summary.rows.push_back(std::move(delta));
    }
    return summary;
}

std::string render_compare(const CompareSummary& summary) {
    std::string out;
    out += "metric               baseline  proposed  improvement\n";
    for (const MetricDelta& row : summary.rows) {
        const bool percent = row.metric.rfind("fps", 0) != 0 &&
                             row.metric.rfind("bertscore", 0) != 0;
        char line[160];
        std::snprintf(line, sizeof(line), "%-20s %9s %9s %12s\n", row.metric.c_str(),
                      format_value(row.baseline, percent).c_str(),
                      format_value(row.proposed, percent).c_str(), row.formatted.c_str());
        out += line;
    }
    return out;
}

}  // namespace hazguard
