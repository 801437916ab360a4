#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "hazguard/hazard_metrics.hpp"
#include "hazguard/parser.hpp"

namespace hazguard {

inline constexpr std::string_view kReportVersion = "1";

struct StageTimings {
    double detect_ms = 0.0;
    double encode_ms = 0.0;
    double vlm_ms = 0.0;
    double parse_ms = 0.0;
    double wall_ms = 0.0;
};

struct PerImageResult {
    std::string image_ref;
    std::size_t detection_count = 0;
    std::vector<std::string> entity_ids;
    std::string prompt_digest;
    HazardAssessment assessment;
    std::map<std::string, LabelCounts> counts;
    std::optional<BertScore> rationale_score;
    StageTimings timings;
    std::vector<std::string> errors;

    bool failed() const { return !errors.empty(); }
};

struct StageStats {
    double mean_ms = 0.0;
    double p50_ms = 0.0;
    double p95_ms = 0.0;
};

struct RunReport {
    std::string report_version = std::string(kReportVersion);
    nlohmann::ordered_json config_echo;
    std::vector<PerImageResult> per_image;
    MultiLabelReport corpus;
    std::optional<RationaleScore> rationale;
    std::size_t error_count = 0;
    std::map<std::string, StageStats> stage_stats;
    double wall_ms = 0.0;
    double fps = 0.0;
    int parallelism = 1;
};

nlohmann::ordered_json report_to_json(const RunReport& report);

// Deterministic view: drops the timing section and per-image timings.
nlohmann::ordered_json report_without_timing(nlohmann::ordered_json report);

void save_report(const std::filesystem::path& path, const RunReport& report);
nlohmann::ordered_json load_report_json(const std::filesystem::path& path);

struct MetricDelta {
    std::string metric;
    double baseline = 0.0;
    double proposed = 0.0;
    double delta = 0.0;
    std::string formatted;  // percentage points for rates, raw otherwise
};

struct CompareSummary {
    std::vector<MetricDelta> rows;
};

// Three-column deltas (baseline, proposed, improvement) between two report
// documents over the same image set; mismatched sets raise ArgumentError.
CompareSummary compare_reports(const nlohmann::ordered_json& baseline,
                               const nlohmann::ordered_json& proposed);

std::string render_compare(const CompareSummary& summary);

}  // namespace hazguard
