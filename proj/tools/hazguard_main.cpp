#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "hazguard/dataset_store.hpp"
#include "hazguard/detection_metrics.hpp"
#include "hazguard/detector_backend.hpp"
#include "hazguard/embeddings.hpp"
#include "hazguard/errors.hpp"
#include "hazguard/hazard_metrics.hpp"
#include "hazguard/parser.hpp"
#include "hazguard/pipeline_runner.hpp"
#include "hazguard/prompt.hpp"
#include "hazguard/report.hpp"
#include "hazguard/vlm_client.hpp"

namespace {

using namespace hazguard;

struct DetectorCliOptions {
    std::string kind;
    std::string detections_dir;
    std::string model_path;
    std::string endpoint;
    std::string classes_file;
    int input_size = 640;
    double score_threshold = 0.25;
};

void add_detector_options(CLI::App* cmd, DetectorCliOptions& opts) {
    cmd->add_option("--detector", opts.kind, "Detector backend: files|embedded|http");
    cmd->add_option("--detections", opts.detections_dir,
                    "Directory of per-image detection JSON files (files backend)");
    cmd->add_option("--model", opts.model_path, "Serialized detector network (embedded backend)");
    cmd->add_option("--detector-endpoint", opts.endpoint, "Detection endpoint (http backend)");
    cmd->add_option("--input-size", opts.input_size, "Detector input size in pixels");
    cmd->add_option("--score-threshold", opts.score_threshold,
                    "Minimum detection confidence kept");
    cmd->add_option("--classes", opts.classes_file,
                    "Class list file, one name per line (embedded backend)");
}

std::optional<DetectorConfig> build_detector_config(const DetectorCliOptions& opts) {
    if (opts.kind.empty() && opts.detections_dir.empty() && opts.model_path.empty() &&
        opts.endpoint.empty()) {
        return std::nullopt;
    }
    DetectorConfig cfg;
    std::string kind = opts.kind;
    if (kind.empty()) {
        // Infer from whichever source was given.
        if (!opts.detections_dir.empty()) {
            kind = "files";
        } else if (!opts.model_path.empty()) {
            kind = "embedded";
        } else {
            kind = "http";
        }
    }
    if (kind == "files") {
        cfg.kind = DetectorKind::files;
    } else if (kind == "embedded") {
        cfg.kind = DetectorKind::embedded_model;
    } else if (kind == "http") {
        cfg.kind = DetectorKind::http;
    } else {
        throw ConfigError("unknown detector backend '" + kind + "'");
    }
    cfg.files_dir = opts.detections_dir;
    cfg.model_path = opts.model_path;
    cfg.endpoint = opts.endpoint;
    cfg.input_size = opts.input_size;
    cfg.score_threshold = opts.score_threshold;
    if (!opts.classes_file.empty()) {
        cfg.class_list = load_class_list(opts.classes_file);
    }
    validate_detector_config(cfg);
    return cfg;
}

struct VlmCliOptions {
    std::string endpoint;
    std::string model_name = "default";
    std::string backend = "replay";
    std::string transcripts;
    std::string fake_text = "Hazards: none";
    std::string record_dir;
    double temperature = 0.1;
    int max_tokens = 256;
    double timeout = 60.0;
    int max_retries = 2;
};

void add_vlm_options(CLI::App* cmd, VlmCliOptions& opts) {
    cmd->add_option("--endpoint", opts.endpoint, "Inference endpoint base URL")
        ->envname("HAZGUARD_ENDPOINT");
    cmd->add_option("--model-name", opts.model_name, "Model name sent with each request");
    cmd->add_option("--backend", opts.backend, "Inference backend: live|replay|fake");
    cmd->add_option("--transcripts", opts.transcripts,
                    "Transcript directory (replay backend, or --record target)");
    cmd->add_option("--fake-text", opts.fake_text, "Response text of the fake backend");
    cmd->add_option("--record", opts.record_dir,
                    "Record live responses as replay transcripts into this directory");
    cmd->add_option("--temperature", opts.temperature, "Sampling temperature");
    cmd->add_option("--max-tokens", opts.max_tokens, "Output token budget");
    cmd->add_option("--timeout", opts.timeout, "Request timeout in seconds");
    cmd->add_option("--max-retries", opts.max_retries, "Retries for transient failures");
}

InferenceConfig build_inference_config(const VlmCliOptions& opts) {
    InferenceConfig cfg;
    cfg.endpoint = opts.endpoint;
    cfg.model_name = opts.model_name;
    cfg.temperature = opts.temperature;
    cfg.max_tokens = opts.max_tokens;
    cfg.timeout_seconds = opts.timeout;
    cfg.max_retries = opts.max_retries;
    validate_inference_config(cfg);
    return cfg;
}

std::shared_ptr<VlmBackend> build_vlm_backend(const VlmCliOptions& opts) {
    if (opts.backend == "replay") {
        if (opts.transcripts.empty()) {
            throw ConfigError("replay backend requires --transcripts");
        }
        return std::make_shared<ReplayBackend>(opts.transcripts);
    }
    if (opts.backend == "live") {
        auto backend = std::make_shared<HttpVlmBackend>();
        if (!opts.record_dir.empty()) {
            backend->record_transcripts(opts.record_dir);
        }
        return backend;
    }
    if (opts.backend == "fake") {
        return std::make_shared<FakeBackend>(opts.fake_text);
    }
    throw ConfigError("unknown inference backend '" + opts.backend + "'");
}

PromptMode parse_mode(const std::string& mode) {
    if (mode == "baseline") return PromptMode::baseline;
    if (mode == "guided" || mode == "detection_guided") return PromptMode::detection_guided;
    throw ConfigError("unknown mode '" + mode + "', expected baseline|guided");
}

struct RunCliOptions {
    std::string mode = "guided";
    std::string manifest;
    std::string images_root;
    std::string template_path;
    std::string categories_path;
    std::string out_dir;
    std::string embeddings;
    int parallel = 1;
    bool strict_parse = false;
    bool use_idf = false;
    bool time_detector_in_baseline = false;
};

void add_run_options(CLI::App* cmd, RunCliOptions& opts, bool with_mode) {
    if (with_mode) {
        cmd->add_option("--mode", opts.mode, "baseline|guided");
    }
    cmd->add_option("--manifest", opts.manifest, "Evaluation manifest (JSON lines)")
        ->required();
    cmd->add_option("--images-root", opts.images_root,
                    "Base directory for image references (default: manifest directory)");
    cmd->add_option("--template", opts.template_path, "Prompt template file");
    cmd->add_option("--categories", opts.categories_path, "Category definition file");
    cmd->add_option("--out", opts.out_dir, "Output directory for report.json");
    cmd->add_option("--embeddings", opts.embeddings,
                    "Embedding provider: file:<path>|endpoint:<url>|hashed[:<dim>]");
    cmd->add_option("--parallel", opts.parallel, "Worker count");
    cmd->add_flag("--strict-parse", opts.strict_parse,
                  "Reject rationale labels missing from the Hazards line");
    cmd->add_flag("--idf", opts.use_idf, "Weight BERTScore by inverse document frequency");
    cmd->add_flag("--time-detector-in-baseline", opts.time_detector_in_baseline,
                  "Run (and time) the detector in baseline mode without using its output");
}

RunConfig build_run_config(const RunCliOptions& run_opts, const DetectorCliOptions& det_opts,
                           const VlmCliOptions& vlm_opts) {
    RunConfig cfg;
    cfg.mode = parse_mode(run_opts.mode);
    cfg.manifest_path = run_opts.manifest;
    cfg.images_root = run_opts.images_root;
    cfg.detector = build_detector_config(det_opts);
    cfg.vlm = build_inference_config(vlm_opts);
    if (!run_opts.template_path.empty()) {
        cfg.prompt_template = load_template(run_opts.template_path);
    }
    if (!run_opts.categories_path.empty()) {
        cfg.categories = load_categories(run_opts.categories_path);
    }
    cfg.parallelism = run_opts.parallel;
    cfg.output_dir = run_opts.out_dir;
    cfg.strict_parse = run_opts.strict_parse;
    cfg.embeddings = run_opts.embeddings;
    cfg.use_idf = run_opts.use_idf;
    cfg.time_detector_in_baseline = run_opts.time_detector_in_baseline;
    return cfg;
}

void print_run_summary(const RunReport& report) {
    std::printf("images: %zu  scored: %zu  errors: %zu\n", report.per_image.size(),
                report.per_image.size() - report.error_count, report.error_count);
    std::printf("micro  P %.4f  R %.4f  F1 %.4f\n", report.corpus.micro_precision,
                report.corpus.micro_recall, report.corpus.micro_f1);
    std::printf("macro  P %.4f  R %.4f  F1 %.4f\n", report.corpus.macro_precision,
                report.corpus.macro_recall, report.corpus.macro_f1);
    if (report.rationale.has_value()) {
        std::printf("bertscore  P %.4f  R %.4f  F1 %.4f  (scored %zu, skipped %zu)\n",
                    report.rationale->precision, report.rationale->recall, report.rationale->f1,
                    report.rationale->scored, report.rationale->skipped_empty);
    }
    std::printf("fps: %.3f  wall: %.1f ms\n", report.fps, report.wall_ms);
    for (const PerImageResult& result : report.per_image) {
        for (const std::string& error : result.errors) {
            std::fprintf(stderr, "error [%s]: %s\n", result.image_ref.c_str(), error.c_str());
        }
    }
}

int cmd_run(const RunCliOptions& run_opts, const DetectorCliOptions& det_opts,
            const VlmCliOptions& vlm_opts) {
    const RunConfig cfg = build_run_config(run_opts, det_opts, vlm_opts);
    const std::shared_ptr<VlmBackend> backend = build_vlm_backend(vlm_opts);
    const RunReport report = run_pipeline(cfg, *backend);
    print_run_summary(report);
    return report.error_count > 0 ? 2 : 0;
}

int cmd_bench(const RunCliOptions& run_opts, const DetectorCliOptions& det_opts,
              const VlmCliOptions& vlm_opts, int repeats, int warmup) {
    BenchConfig cfg;
    cfg.run = build_run_config(run_opts, det_opts, vlm_opts);
    cfg.repeats = repeats;
    cfg.warmup = warmup;
    const std::shared_ptr<VlmBackend> backend = build_vlm_backend(vlm_opts);
    const BenchReport report = bench(cfg, *backend);
    const nlohmann::ordered_json doc = bench_to_json(report);
    std::printf("%s\n", doc.dump(2).c_str());
    if (!run_opts.out_dir.empty()) {
        std::filesystem::create_directories(run_opts.out_dir);
        std::ofstream out(std::filesystem::path(run_opts.out_dir) / "bench.json");
        if (!out) {
            throw IoError("cannot write bench.json to " + run_opts.out_dir);
        }
        out << doc.dump(2) << "\n";
    }
    return 0;
}

int cmd_eval_detections(const std::string& predictions_dir, const std::string& labels_dir,
                        const std::string& out_file) {
    std::vector<std::string> warnings;
    const std::vector<ImageDetections> corpus =
        load_detection_corpus(predictions_dir, labels_dir, &warnings);
    const DetectionEvaluation eval = evaluate_detections(corpus);

    std::printf("%-16s %6s %6s %6s %10s %10s %10s\n", "class", "tp", "fp", "fn", "precision",
                "recall", "ap@0.5");
    for (const auto& [cls, metrics] : eval.per_class) {
        char ap_text[32];
        if (metrics.ap50.has_value()) {
            std::snprintf(ap_text, sizeof(ap_text), "%.4f", *metrics.ap50);
        } else {
            std::snprintf(ap_text, sizeof(ap_text), "-");
        }
        std::printf("%-16s %6zu %6zu %6zu %10.4f %10.4f %10s\n",
                    std::string(class_name(cls)).c_str(), metrics.true_positives,
                    metrics.false_positives, metrics.false_negatives, metrics.precision,
                    metrics.recall, ap_text);
    }
    std::printf("mAP@[0.3:0.1:0.7]: %.4f\n", eval.map_grounding);
    std::printf("mAP@0.5:           %.4f\n", eval.map50);
    std::printf("mAP@[0.5:0.05:0.95]: %.4f\n", eval.map50_95);
    for (const std::string& warning : warnings) {
        std::fprintf(stderr, "warning: %s\n", warning.c_str());
    }

    if (!out_file.empty()) {
        nlohmann::ordered_json doc;
        doc["images"] = eval.images;
        nlohmann::ordered_json per_class = nlohmann::ordered_json::object();
        for (const auto& [cls, metrics] : eval.per_class) {
            nlohmann::ordered_json entry = {{"tp", metrics.true_positives},
                                            {"fp", metrics.false_positives},
                                            {"fn", metrics.false_negatives},
                                            {"precision", metrics.precision},
                                            {"recall", metrics.recall}};
            entry["ap50"] = metrics.ap50.has_value() ? nlohmann::ordered_json(*metrics.ap50)
                                                     : nlohmann::ordered_json(nullptr);
            per_class[std::string(class_name(cls))] = std::move(entry);
        }
        doc["per_class"] = std::move(per_class);
        doc["map_grounding"] = eval.map_grounding;
        doc["map50"] = eval.map50;
        doc["map50_95"] = eval.map50_95;
        doc["warnings"] = warnings;
        std::ofstream out(out_file);
        if (!out) {
            throw IoError("cannot write " + out_file);
        }
        out << doc.dump(2) << "\n";
    }
    return 0;
}

int cmd_eval_hazards(const std::string& manifest_path, const std::string& responses_dir,
                     const std::string& embeddings, bool use_idf, bool strict,
                     const std::string& out_file) {
    const Manifest manifest = load_manifest(manifest_path);
    const std::vector<HazardRecord> records = evaluation_records(manifest);

    ParserOptions parser_options = default_parser_options();
    parser_options.strict = strict;

    std::vector<LabeledPair> pairs;
    std::vector<RationalePair> rationale_pairs;
    std::size_t missing_responses = 0;
    for (const HazardRecord& record : records) {
        const std::string stem = std::filesystem::path(record.image_ref).stem().string();
        const std::filesystem::path path =
            std::filesystem::path(responses_dir) / (stem + ".txt");
        if (!std::filesystem::exists(path)) {
            ++missing_responses;
            std::fprintf(stderr, "warning: no response file for '%s'\n",
                         record.image_ref.c_str());
            continue;
        }
        std::ifstream in(path, std::ios::binary);
        std::ostringstream buffer;
        buffer << in.rdbuf();
        const HazardAssessment assessment = parse_response(buffer.str(), parser_options);
        pairs.push_back({assessment.categories, record.hazards});
        rationale_pairs.push_back({record.image_ref, join_rationales(assessment.rationales),
                                   join_rationales(record.rationales)});
    }

    const MultiLabelReport report = aggregate_hazard_metrics(pairs);
    std::printf("images: %zu  scored: %zu  missing responses: %zu\n", records.size(),
                pairs.size(), missing_responses);
    std::printf("micro  P %.4f  R %.4f  F1 %.4f\n", report.micro_precision, report.micro_recall,
                report.micro_f1);
    std::printf("macro  P %.4f  R %.4f  F1 %.4f\n", report.macro_precision, report.macro_recall,
                report.macro_f1);
    std::printf("%-24s %4s %4s %4s %10s %10s %10s\n", "category", "tp", "fp", "fn", "precision",
                "recall", "f1");
    for (std::string_view key : kCategoryKeys) {
        const auto it = report.per_category.find(std::string(key));
        if (it == report.per_category.end()) continue;
        std::printf("%-24s %4zu %4zu %4zu %10.4f %10.4f %10.4f\n", it->first.c_str(),
                    it->second.counts.true_positives, it->second.counts.false_positives,
                    it->second.counts.false_negatives, it->second.precision, it->second.recall,
                    it->second.f1);
    }

    std::optional<RationaleScore> rationale;
    if (!embeddings.empty()) {
        const std::unique_ptr<EmbeddingProvider> provider = make_embedding_provider(embeddings);
        std::optional<IdfTable> idf;
        if (use_idf) {
            std::vector<std::vector<std::string>> reference_docs;
            for (const RationalePair& pair : rationale_pairs) {
                if (!pair.reference.empty()) {
                    reference_docs.push_back(simple_tokenize(pair.reference));
                }
            }
            idf = build_idf_table(reference_docs);
        }
        rationale = score_rationales(rationale_pairs, *provider, idf ? &*idf : nullptr);
        std::printf("bertscore  P %.4f  R %.4f  F1 %.4f  (scored %zu, skipped %zu, errors %zu)\n",
                    rationale->precision, rationale->recall, rationale->f1, rationale->scored,
                    rationale->skipped_empty, rationale->errors.size());
        for (const std::string& error : rationale->errors) {
            std::fprintf(stderr, "embedding error: %s\n", error.c_str());
        }
    }

    if (!out_file.empty()) {
        nlohmann::ordered_json doc;
        doc["images"] = records.size();
        doc["scored"] = pairs.size();
        doc["missing_responses"] = missing_responses;
        doc["micro"] = {{"precision", report.micro_precision},
                        {"recall", report.micro_recall},
                        {"f1", report.micro_f1}};
        doc["macro"] = {{"precision", report.macro_precision},
                        {"recall", report.macro_recall},
                        {"f1", report.macro_f1}};
        nlohmann::ordered_json per_category = nlohmann::ordered_json::object();
        for (std::string_view key : kCategoryKeys) {
            const auto it = report.per_category.find(std::string(key));
            if (it == report.per_category.end()) continue;
            per_category[it->first] = {{"tp", it->second.counts.true_positives},
                                       {"fp", it->second.counts.false_positives},
                                       {"fn", it->second.counts.false_negatives},
                                       {"precision", it->second.precision},
                                       {"recall", it->second.recall},
                                       {"f1", it->second.f1}};
        }
        doc["per_category"] = std::move(per_category);
        if (rationale.has_value()) {
            doc["bertscore"] = {{"precision", rationale->precision},
                                {"recall", rationale->recall},
                                {"f1", rationale->f1},
                                {"scored", rationale->scored},
                                {"skipped_empty", rationale->skipped_empty},
                                {"errors", rationale->errors}};
        } else {
            doc["bertscore"] = nullptr;
        }
        std::ofstream out(out_file);
        if (!out) {
            throw IoError("cannot write " + out_file);
        }
        out << doc.dump(2) << "\n";
    }
    return 0;
}

int cmd_annotate(const std::string& images_dir, const std::string& out_manifest,
                 const VlmCliOptions& vlm_opts, const std::string& categories_path,
                 const std::string& template_path, const std::string& source) {
    VlmCliOptions annotation_opts = vlm_opts;
    const InferenceConfig cfg = annotation_profile(build_inference_config(annotation_opts));
    const std::shared_ptr<VlmBackend> backend = build_vlm_backend(annotation_opts);
    const VlmClient client(backend, cfg);

    const std::vector<HazardCategory> categories =
        categories_path.empty() ? default_categories() : load_categories(categories_path);
    const PromptTemplate tmpl =
        template_path.empty() ? builtin_annotation_template() : load_template(template_path);
    const std::optional<RecordSource> record_source = record_source_from_name(source);
    if (!record_source.has_value()) {
        throw ConfigError("unknown source '" + source + "'");
    }

    std::vector<std::filesystem::path> images;
    for (const auto& entry : std::filesystem::directory_iterator(images_dir)) {
        if (!entry.is_regular_file()) continue;
        const std::string ext = entry.path().extension().string();
        if (ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".bmp") {
            images.push_back(entry.path());
        }
    }
    std::sort(images.begin(), images.end());
    if (images.empty()) {
        throw ConfigError("no images found in " + images_dir);
    }

    Manifest manifest;
    for (const std::filesystem::path& path : images) {
        std::ifstream in(path, std::ios::binary);
        std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                         std::istreambuf_iterator<char>());
        if (bytes.empty()) {
            throw IoError("empty image file " + path.string());
        }
        manifest.records.push_back(generate_annotation_draft(
            path.filename().string(), bytes, client, categories, tmpl, *record_source));
    }
    save_manifest(out_manifest, manifest);
    std::printf("wrote %zu draft records to %s\n", manifest.records.size(),
                out_manifest.c_str());
    return 0;
}

int cmd_validate(const std::string& manifest_path, const std::string& image_ref,
                 const std::string& verdict, const std::string& annotator,
                 const std::vector<std::string>& set_hazards,
                 const std::vector<std::string>& set_rationales) {
    Manifest manifest = load_manifest(manifest_path);
    HazardRecord* record = find_record(manifest, image_ref);
    if (record == nullptr) {
        throw ArgumentError("no record '" + image_ref + "' in " + manifest_path);
    }
    const std::optional<ValidationState> state = validation_state_from_name(verdict);
    if (!state.has_value()) {
        throw ConfigError("unknown verdict '" + verdict + "'");
    }

    RecordEdits edits;
    if (!set_hazards.empty()) {
        std::set<std::string> hazards;
        for (const std::string& entry : set_hazards) {
            std::string current;
            for (char c : entry) {
                if (c == ',') {
                    if (!current.empty()) hazards.insert(current);
                    current.clear();
                } else if (c != ' ') {
                    current += c;
                }
            }
            if (!current.empty()) hazards.insert(current);
        }
        edits.hazards = std::move(hazards);
    }
    if (!set_rationales.empty()) {
        std::map<std::string, std::string> rationales = record->rationales;
        for (const std::string& entry : set_rationales) {
            const std::size_t eq = entry.find('=');
            if (eq == std::string::npos || eq == 0) {
                throw ConfigError("--set-rationale expects key=text, got '" + entry + "'");
            }
            rationales[entry.substr(0, eq)] = entry.substr(eq + 1);
        }
        edits.rationales = std::move(rationales);
    }
    const bool has_edits = edits.hazards.has_value() || edits.rationales.has_value();

    *record = record_validation_verdict(
        *record, *state, has_edits ? std::optional<RecordEdits>(edits) : std::nullopt, annotator);
    save_manifest(manifest_path, manifest);
    std::printf("%s -> %s\n", image_ref.c_str(), verdict.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Detection-guided hazard assessment pipeline and evaluation harness"};
    app.set_config("--config", "", "Read options from a config file");
    app.require_subcommand(1);

    int rc = 0;

    RunCliOptions run_opts;
    DetectorCliOptions run_det;
    VlmCliOptions run_vlm;
    CLI::App* run_cmd_app = app.add_subcommand("run", "Run the pipeline over a manifest");
    add_run_options(run_cmd_app, run_opts, /*with_mode=*/true);
    add_detector_options(run_cmd_app, run_det);
    add_vlm_options(run_cmd_app, run_vlm);
    run_cmd_app->callback([&] { rc = cmd_run(run_opts, run_det, run_vlm); });

    RunCliOptions bench_opts;
    DetectorCliOptions bench_det;
    VlmCliOptions bench_vlm;
    int bench_repeats = 5;
    int bench_warmup = 2;
    CLI::App* bench_cmd_app =
        app.add_subcommand("bench", "Measure baseline vs guided throughput and overhead");
    add_run_options(bench_cmd_app, bench_opts, /*with_mode=*/false);
    add_detector_options(bench_cmd_app, bench_det);
    add_vlm_options(bench_cmd_app, bench_vlm);
    bench_cmd_app->add_option("--repeats", bench_repeats, "Measured repetitions");
    bench_cmd_app->add_option("--warmup", bench_warmup, "Warmup repetitions excluded from stats");
    bench_cmd_app->callback(
        [&] { rc = cmd_bench(bench_opts, bench_det, bench_vlm, bench_repeats, bench_warmup); });

    std::string compare_a;
    std::string compare_b;
    CLI::App* compare_cmd_app =
        app.add_subcommand("compare", "Diff two run reports (baseline vs proposed)");
    compare_cmd_app->add_option("baseline", compare_a, "Baseline report.json")->required();
    compare_cmd_app->add_option("proposed", compare_b, "Proposed report.json")->required();
    compare_cmd_app->callback([&] {
        const CompareSummary summary =
            compare_reports(load_report_json(compare_a), load_report_json(compare_b));
        std::printf("%s", render_compare(summary).c_str());
        rc = 0;
    });

    std::string evald_predictions;
    std::string evald_labels;
    std::string evald_out;
    CLI::App* evald_cmd_app =
        app.add_subcommand("eval-detections", "Score detection files against ground truth");
    evald_cmd_app->add_option("--predictions", evald_predictions, "Detection JSON directory")
        ->required();
    evald_cmd_app->add_option("--labels", evald_labels, "Ground-truth label directory")
        ->required();
    evald_cmd_app->add_option("--out", evald_out, "Write the evaluation as JSON");
    evald_cmd_app->callback(
        [&] { rc = cmd_eval_detections(evald_predictions, evald_labels, evald_out); });

    std::string evalh_manifest;
    std::string evalh_responses;
    std::string evalh_embeddings;
    std::string evalh_out;
    bool evalh_idf = false;
    bool evalh_strict = false;
    CLI::App* evalh_cmd_app =
        app.add_subcommand("eval-hazards", "Score stored response texts against a manifest");
    evalh_cmd_app->add_option("--manifest", evalh_manifest, "Evaluation manifest")->required();
    evalh_cmd_app->add_option("--responses", evalh_responses, "Directory of response .txt files")
        ->required();
    evalh_cmd_app->add_option("--embeddings", evalh_embeddings,
                              "Embedding provider for BERTScore");
    evalh_cmd_app->add_flag("--idf", evalh_idf, "Weight BERTScore by idf");
    evalh_cmd_app->add_flag("--strict-parse", evalh_strict, "Strict response parsing");
    evalh_cmd_app->add_option("--out", evalh_out, "Write the evaluation as JSON");
    evalh_cmd_app->callback([&] {
        rc = cmd_eval_hazards(evalh_manifest, evalh_responses, evalh_embeddings, evalh_idf,
                              evalh_strict, evalh_out);
    });

    std::string annotate_images;
    std::string annotate_out;
    std::string annotate_categories;
    std::string annotate_template;
    std::string annotate_source = "public_dataset";
    VlmCliOptions annotate_vlm;
    CLI::App* annotate_cmd_app =
        app.add_subcommand("annotate", "Generate draft hazard records for a directory of images");
    annotate_cmd_app->add_option("--images", annotate_images, "Image directory")->required();
    annotate_cmd_app->add_option("--out", annotate_out, "Output manifest path")->required();
    annotate_cmd_app->add_option("--categories", annotate_categories, "Category definition file");
    annotate_cmd_app->add_option("--template", annotate_template, "Annotation prompt template");
    annotate_cmd_app->add_option("--source", annotate_source,
                                 "Record source: historical_inspection|public_dataset");
    add_vlm_options(annotate_cmd_app, annotate_vlm);
    annotate_cmd_app->callback([&] {
        rc = cmd_annotate(annotate_images, annotate_out, annotate_vlm, annotate_categories,
                          annotate_template, annotate_source);
    });

    std::string validate_manifest;
    std::string validate_record;
    std::string validate_verdict;
    std::string validate_annotator;
    std::vector<std::string> validate_hazards;
    std::vector<std::string> validate_rationales;
    CLI::App* validate_cmd_app =
        app.add_subcommand("validate", "Record a human verdict on a draft record");
    validate_cmd_app->add_option("--manifest", validate_manifest, "Manifest path")->required();
    validate_cmd_app->add_option("--record", validate_record, "Image reference")->required();
    validate_cmd_app
        ->add_option("--verdict", validate_verdict, "validated|revised|rejected")
        ->required();
    validate_cmd_app->add_option("--annotator", validate_annotator, "Annotator identifier")
        ->required();
    validate_cmd_app->add_option("--set-hazards", validate_hazards,
                                 "Replacement hazard keys, comma separated (revised)");
    validate_cmd_app->add_option("--set-rationale", validate_rationales,
                                 "key=text rationale replacement (revised, repeatable)");
    validate_cmd_app->callback([&] {
        rc = cmd_validate(validate_manifest, validate_record, validate_verdict,
                          validate_annotator, validate_hazards, validate_rationales);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const SchemaError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        for (const std::string& diagnostic : e.diagnostics()) {
            std::fprintf(stderr, "  %s\n", diagnostic.c_str());
        }
        return 1;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "unexpected error: %s\n", e.what());
        return 1;
    }
    return rc;
}
