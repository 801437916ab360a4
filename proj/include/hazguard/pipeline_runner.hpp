#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hazguard/dataset_store.hpp"
#include "hazguard/detector_backend.hpp"
#include "hazguard/embeddings.hpp"
#include "hazguard/prompt.hpp"
#include "hazguard/report.hpp"
#include "hazguard/vlm_client.hpp"

namespace hazguard {

struct RunConfig {
    PromptMode mode = PromptMode::detection_guided;
    std::filesystem::path manifest_path;
    std::filesystem::path images_root;  // empty means the manifest's directory
    std::optional<DetectorConfig> detector;
    InferenceConfig vlm;
    PromptTemplate prompt_template;  // empty body selects the builtin for the mode
    std::vector<HazardCategory> categories;  // empty selects the defaults
    int parallelism = 1;
    std::filesystem::path output_dir;  // empty means do not persist
    bool strict_parse = false;
    std::string embeddings;  // "", "file:<path>", "endpoint:<url>", "hashed[:<dim>]"
    bool use_idf = false;
    // Baseline runs may still exercise the detector for overhead studies; its
    // output never reaches the prompt.
    bool time_detector_in_baseline = false;
};

// Full evaluation pass: detect (guided) -> identifiers -> prompt -> complete
// -> parse -> per-image counts, aggregated into corpus metrics and timing.
// Per-image failures are recorded on the report, never thrown.
RunReport run_pipeline(const RunConfig& cfg, VlmBackend& backend);

struct BenchConfig {
    RunConfig run;  // mode is ignored; bench measures both on identical inputs
    int repeats = 5;
    int warmup = 2;
};

struct BenchModeStats {
    std::map<std::string, StageStats> stages;
    double mean_image_wall_ms = 0.0;
    double fps = 0.0;
    // Relative gap between the mean per-image stage sum and the mean
    // per-image wall bracket.
    double stage_sum_vs_wall_gap = 0.0;
};

struct BenchReport {
    BenchModeStats baseline;
    BenchModeStats guided;
    double overhead_wall_ms = 0.0;  // guided minus baseline mean per-image wall
    std::map<std::string, double> overhead_by_stage_ms;
    int repeats = 0;
    int warmup = 0;
    std::size_t images = 0;
};

// Times baseline and guided passes over the same records with a fixed
// parallelism of one; warmup repeats are excluded from the statistics.
BenchReport bench(const BenchConfig& cfg, VlmBackend& backend);

nlohmann::ordered_json bench_to_json(const BenchReport& report);

}  // namespace hazguard
