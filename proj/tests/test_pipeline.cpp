#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "hazguard/dataset_store.hpp"
#include "hazguard/errors.hpp"
#include "hazguard/hazard_metrics.hpp"
#include "hazguard/pipeline_runner.hpp"
#include "hazguard/report.hpp"
#include "hazguard/vlm_client.hpp"

using namespace hazguard;
namespace fs = std::filesystem;

namespace {

const std::string kSourceDir = HAZGUARD_SOURCE_DIR;
const fs::path kFixtureRoot = fs::path(kSourceDir) / "fixtures" / "e2e";

fs::path temp_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    REQUIRE(out.good());
    out << text;
}

RunConfig fixture_config(PromptMode mode) {
    RunConfig cfg;
    cfg.mode = mode;
    cfg.manifest_path = kFixtureRoot / "manifest.jsonl";
    if (mode == PromptMode::detection_guided) {
        DetectorConfig detector;
        detector.kind = DetectorKind::files;
        detector.files_dir = kFixtureRoot / "detections";
        detector.score_threshold = 0.25;
        cfg.detector = detector;
    }
    cfg.vlm.model_name = "fixture-vlm";
    cfg.embeddings = "file:" + (kFixtureRoot / "embeddings.json").string();
    return cfg;
}

std::string deterministic_dump(const RunReport& report) {
    return report_without_timing(report_to_json(report)).dump(2);
}

}  // namespace

TEST_CASE("guided replay run is deterministic") {
    const RunConfig cfg = fixture_config(PromptMode::detection_guided);
    ReplayBackend backend(kFixtureRoot / "transcripts");

    const RunReport first = run_pipeline(cfg, backend);
    const RunReport second = run_pipeline(cfg, backend);
    CHECK(first.error_count == 0);
    REQUIRE(first.per_image.size() == 4);
    CHECK(deterministic_dump(first) == deterministic_dump(second));

    // Timing exists but is excluded from the deterministic view.
    const nlohmann::ordered_json full = report_to_json(first);
    CHECK(full.contains("timing"));
    CHECK_FALSE(report_without_timing(full).contains("timing"));
}

TEST_CASE("parallelism does not change results") {
    RunConfig cfg = fixture_config(PromptMode::detection_guided);
    ReplayBackend backend(kFixtureRoot / "transcripts");
    const RunReport serial = run_pipeline(cfg, backend);
    cfg.parallelism = 4;
    const RunReport threaded = run_pipeline(cfg, backend);
    CHECK(deterministic_dump(serial) == deterministic_dump(threaded));
}

TEST_CASE("corpus metrics equal the per-image sums") {
    const RunConfig cfg = fixture_config(PromptMode::detection_guided);
    ReplayBackend backend(kFixtureRoot / "transcripts");
    const RunReport report = run_pipeline(cfg, backend);

    std::map<std::string, LabelCounts> totals;
    for (const PerImageResult& image : report.per_image) {
        for (const auto& [key, counts] : image.counts) {
            totals[key].true_positives += counts.true_positives;
            totals[key].false_positives += counts.false_positives;
            totals[key].false_negatives += counts.false_negatives;
        }
    }
    for (const auto& [key, expected] : totals) {
        const CategoryScore& actual = report.corpus.per_category.at(key);
        CHECK(actual.counts.true_positives == expected.true_positives);
        CHECK(actual.counts.false_positives == expected.false_positives);
        CHECK(actual.counts.false_negatives == expected.false_negatives);
    }

    // Fixture ground truth: the guided responses land 4 TP, 1 FP, 0 FN.
    CHECK(report.corpus.micro_precision == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(report.corpus.micro_recall == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(report.corpus.micro_f1 == doctest::Approx(8.0 / 9.0).epsilon(1e-12));
    REQUIRE(report.rationale.has_value());
    CHECK(report.rationale->scored == 3);
    CHECK(report.rationale->skipped_empty == 1);
}

TEST_CASE("baseline run scores lower on the fixture") {
    const RunConfig cfg = fixture_config(PromptMode::baseline);
    ReplayBackend backend(kFixtureRoot / "transcripts");
    const RunReport report = run_pipeline(cfg, backend);
    CHECK(report.error_count == 0);
    CHECK(report.corpus.micro_precision == doctest::Approx(0.375).epsilon(1e-12));
    CHECK(report.corpus.micro_recall == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(report.corpus.micro_f1 == doctest::Approx(0.5).epsilon(1e-12));

    // Guided prompts differ from baseline prompts on every image.
    const RunReport guided =
        run_pipeline(fixture_config(PromptMode::detection_guided), backend);
    REQUIRE(guided.per_image.size() == report.per_image.size());
    for (std::size_t i = 0; i < guided.per_image.size(); ++i) {
        CHECK(guided.per_image[i].prompt_digest != report.per_image[i].prompt_digest);
    }
}

TEST_CASE("per-image failures are recorded, not thrown") {
    const fs::path dir = temp_dir("hazguard_pipeline_errors");
    fs::create_directories(dir / "images");
    write_file(dir / "images" / "a.png", "notapng");
    write_file(
        dir / "manifest.jsonl",
        R"({"image":"images/a.png","hazards":[],"rationales":{},"source":"public_dataset","validation":"validated"})"
        "\n"
        R"({"image":"images/missing.png","hazards":[],"rationales":{},"source":"public_dataset","validation":"validated"})"
        "\n");

    RunConfig cfg;
    cfg.mode = PromptMode::baseline;
    cfg.manifest_path = dir / "manifest.jsonl";
    cfg.vlm.model_name = "m";
    FakeBackend backend("Hazards: none");
    const RunReport report = run_pipeline(cfg, backend);
    REQUIRE(report.per_image.size() == 2);
    CHECK(report.error_count == 1);
    CHECK(report.per_image[0].errors.empty());
    CHECK_FALSE(report.per_image[1].errors.empty());
    CHECK(report.per_image[1].failed());

    // The failed image contributes nothing to the corpus counts.
    CHECK(report.corpus.micro_f1 == 0.0);
    for (const auto& [key, metrics] : report.corpus.per_category) {
        CHECK(metrics.counts.true_positives == 0);
        CHECK(metrics.counts.false_positives == 0);
        CHECK(metrics.counts.false_negatives == 0);
    }
}

TEST_CASE("replay misses are per-image errors") {
    RunConfig cfg = fixture_config(PromptMode::detection_guided);
    cfg.embeddings.clear();
    const fs::path empty = temp_dir("hazguard_empty_transcripts");
    ReplayBackend backend(empty);
    const RunReport report = run_pipeline(cfg, backend);
    CHECK(report.error_count == 4);
    for (const PerImageResult& image : report.per_image) {
        REQUIRE(image.errors.size() == 1);
        CHECK(image.errors[0].find("no transcript") != std::string::npos);
    }
}

TEST_CASE("run configuration is validated") {
    RunConfig cfg = fixture_config(PromptMode::detection_guided);
    FakeBackend backend("Hazards: none");

    RunConfig no_detector = cfg;
    no_detector.detector.reset();
    CHECK_THROWS_AS(run_pipeline(no_detector, backend), ConfigError);

    RunConfig bad_parallelism = cfg;
    bad_parallelism.parallelism = 0;
    CHECK_THROWS_AS(run_pipeline(bad_parallelism, backend), ConfigError);

    RunConfig bad_manifest = cfg;
    bad_manifest.manifest_path = "/nonexistent/manifest.jsonl";
    CHECK_THROWS_AS(run_pipeline(bad_manifest, backend), IoError);
}

TEST_CASE("fake backend keeps the vlm stage near zero") {
    RunConfig cfg = fixture_config(PromptMode::detection_guided);
    cfg.embeddings.clear();
    FakeBackend backend("Hazards: none");
    const RunReport report = run_pipeline(cfg, backend);
    CHECK(report.error_count == 0);
    CHECK(report.stage_stats.at("vlm").mean_ms < 1.0);
    CHECK(report.stage_stats.at("encode").mean_ms < 1.0);
}

TEST_CASE("report files round trip") {
    const RunConfig cfg = fixture_config(PromptMode::detection_guided);
    ReplayBackend backend(kFixtureRoot / "transcripts");
    const RunReport report = run_pipeline(cfg, backend);

    const fs::path dir = temp_dir("hazguard_report_io");
    save_report(dir / "report.json", report);
    const nlohmann::ordered_json loaded = load_report_json(dir / "report.json");
    CHECK(loaded.dump(2) == report_to_json(report).dump(2));
    CHECK_THROWS_AS(load_report_json(dir / "absent.json"), IoError);
}

TEST_CASE("comparing a report with itself yields zero deltas") {
    const RunConfig cfg = fixture_config(PromptMode::detection_guided);
    ReplayBackend backend(kFixtureRoot / "transcripts");
    const nlohmann::ordered_json doc = report_to_json(run_pipeline(cfg, backend));

    const CompareSummary summary = compare_reports(doc, doc);
    REQUIRE_FALSE(summary.rows.empty());
    for (const MetricDelta& row : summary.rows) {
        CHECK(row.delta == 0.0);
        CHECK(row.baseline == row.proposed);
    }
    const std::string rendered = render_compare(summary);
    CHECK(rendered.find("micro_f1") != std::string::npos);
}

TEST_CASE("comparing disjoint image sets is an error") {
    const RunConfig cfg = fixture_config(PromptMode::detection_guided);
    ReplayBackend backend(kFixtureRoot / "transcripts");
    nlohmann::ordered_json doc = report_to_json(run_pipeline(cfg, backend));
    nlohmann::ordered_json renamed = doc;
    renamed["per_image"][0]["image"] = "somewhere/else.png";
    CHECK_THROWS_AS(compare_reports(doc, renamed), ArgumentError);
}

TEST_CASE("bench separates stage overheads") {
    BenchConfig cfg;
    cfg.run = fixture_config(PromptMode::detection_guided);
    cfg.run.embeddings.clear();
    cfg.repeats = 3;
    cfg.warmup = 1;
    FakeBackend backend("Hazards: none");
    const BenchReport report = bench(cfg, backend);

    CHECK(report.images == 4);
    CHECK(report.repeats == 3);
    CHECK(report.guided.stages.at("detect").mean_ms > 0.0);
    CHECK(report.baseline.stages.at("detect").mean_ms == 0.0);
    CHECK(report.overhead_by_stage_ms.at("detect") > 0.0);
    CHECK(report.guided.mean_image_wall_ms > 0.0);

    const nlohmann::ordered_json doc = bench_to_json(report);
    CHECK(doc["images"] == 4);
    CHECK(doc["baseline"]["stages"].contains("vlm"));
    CHECK(doc["guided"]["stages"].contains("encode"));
    CHECK(doc.contains("overhead_wall_ms"));
    CHECK(doc["overhead_by_stage_ms"].contains("encode"));

    BenchConfig bad = cfg;
    bad.repeats = 0;
    CHECK_THROWS_AS(bench(bad, backend), ConfigError);
}
