#include "hazguard/pipeline_runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>

#include "hazguard/digest.hpp"
#include "hazguard/errors.hpp"
#include "hazguard/parser.hpp"

namespace hazguard {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::vector<unsigned char> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open image " + path.string());
    }
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    if (bytes.empty()) {
        throw IoError("empty image file " + path.string());
    }
    return bytes;
}

struct PipelineContext {
    PromptMode mode = PromptMode::detection_guided;
    const PromptTemplate* tmpl = nullptr;
    std::span<const HazardCategory> categories;
    Detector* detector = nullptr;
    VlmBackend* backend = nullptr;
    const InferenceConfig* vlm = nullptr;
    ParserOptions parser_options;
    bool run_detector = false;
    bool use_detections = false;
};

// One record through all stages. Failures land in result.errors; the wall
// bracket spans detect through parse so stage times can be checked against it.
PerImageResult process_image(const PipelineContext& ctx, const HazardRecord& record,
                             std::span<const unsigned char> image_bytes) {
    PerImageResult result;
    result.image_ref = record.image_ref;
    try {
        const Clock::time_point wall_start = Clock::now();

        std::vector<Detection> detections;
        if (ctx.run_detector) {
            const TimedDetections timed = ctx.detector->detect(image_bytes, record.image_ref);
            result.timings.detect_ms = timed.detect_latency_ms;
            if (ctx.use_detections) detections = timed.detections;
        }

        const Clock::time_point encode_start = Clock::now();
        const std::vector<IdentifiedDetection> identified = assign_identifiers(detections);
        const PromptBundle prompt =
            build_prompt(ctx.mode, identified, ctx.categories, *ctx.tmpl);
        const std::string digest =
            request_digest(image_bytes, prompt.text, ctx.vlm->model_name);
        result.timings.encode_ms = elapsed_ms(encode_start);

        const RawResponse response = ctx.backend->complete(image_bytes, prompt.text, *ctx.vlm);
        result.timings.vlm_ms = response.latency_ms;

        const Clock::time_point parse_start = Clock::now();
        const HazardAssessment assessment = parse_response(response.text, ctx.parser_options);
        result.timings.parse_ms = elapsed_ms(parse_start);
        result.timings.wall_ms = elapsed_ms(wall_start);

        result.detection_count = detections.size();
        for (const IdentifiedDetection& id : identified) result.entity_ids.push_back(id.id);
        result.prompt_digest = digest;
        result.assessment = assessment;
        result.counts = multilabel_counts(assessment.categories, record.hazards);
    } catch (const Error& e) {
        result.errors.push_back(e.what());
    } catch (const std::exception& e) {
        result.errors.push_back(std::string("unexpected: ") + e.what());
    }
    return result;
}

struct PreparedRun {
    PromptTemplate tmpl;
    std::vector<HazardCategory> categories;
    std::unique_ptr<Detector> detector;
    std::shared_ptr<EmbeddingProvider> embeddings;
    std::vector<HazardRecord> records;
    std::filesystem::path images_root;
};

PreparedRun prepare(const RunConfig& cfg) {
    if (cfg.parallelism < 1) {
        throw ConfigError("run config: parallelism must be >= 1");
    }
    validate_inference_config(cfg.vlm);
    if (cfg.mode == PromptMode::detection_guided && !cfg.detector.has_value()) {
        throw ConfigError("run config: detection-guided mode requires a detector");
    }

    PreparedRun prepared;
    prepared.tmpl =
        cfg.prompt_template.body.empty() ? builtin_template(cfg.mode) : cfg.prompt_template;
    prepared.categories = cfg.categories.empty() ? default_categories() : cfg.categories;
    if (cfg.detector.has_value() &&
        (cfg.mode == PromptMode::detection_guided || cfg.time_detector_in_baseline)) {
        prepared.detector = make_detector(*cfg.detector);
    }
    if (!cfg.embeddings.empty()) {
        prepared.embeddings = make_embedding_provider(cfg.embeddings);
    }

    const Manifest manifest = load_manifest(cfg.manifest_path);
    prepared.records = evaluation_records(manifest);
    prepared.images_root =
        cfg.images_root.empty() ? cfg.manifest_path.parent_path() : cfg.images_root;
    return prepared;
}

PipelineContext make_context(const RunConfig& cfg, const PreparedRun& prepared,
                             VlmBackend& backend) {
    PipelineContext ctx;
    ctx.mode = cfg.mode;
    ctx.tmpl = &prepared.tmpl;
    ctx.categories = prepared.categories;
    ctx.detector = prepared.detector.get();
    ctx.backend = &backend;
    ctx.vlm = &cfg.vlm;
    ctx.parser_options.strict = cfg.strict_parse;
    ctx.parser_options.synonyms = default_synonyms();
    ctx.use_detections = cfg.mode == PromptMode::detection_guided;
    ctx.run_detector = prepared.detector != nullptr;
    return ctx;
}

StageStats stats_from_samples(std::vector<double> samples) {
    StageStats stats;
    if (samples.empty()) return stats;
    double sum = 0.0;
    for (double v : samples) sum += v;
    stats.mean_ms = sum / static_cast<double>(samples.size());
    std::sort(samples.begin(), samples.end());
    const auto nearest_rank = [&](double q) {
        const std::size_t rank = static_cast<std::size_t>(
            std::ceil(q * static_cast<double>(samples.size())));
        return samples[std::min(samples.size() - 1, rank == 0 ? 0 : rank - 1)];
    };
    stats.p50_ms = nearest_rank(0.50);
    stats.p95_ms = nearest_rank(0.95);
    return stats;
}

std::map<std::string, StageStats> collect_stage_stats(std::span<const StageTimings> timings) {
    std::map<std::string, std::vector<double>> samples;
    for (const StageTimings& t : timings) {
        samples["detect"].push_back(t.detect_ms);
        samples["encode"].push_back(t.encode_ms);
        samples["vlm"].push_back(t.vlm_ms);
        samples["parse"].push_back(t.parse_ms);
        samples["wall"].push_back(t.wall_ms);
    }
    std::map<std::string, StageStats> out;
    for (auto& [name, values] : samples) {
        out[name] = stats_from_samples(std::move(values));
    }
    return out;
}

}  // namespace

RunReport run_pipeline(const RunConfig& cfg, VlmBackend& backend) {
    PreparedRun prepared = prepare(cfg);
    const PipelineContext ctx = make_context(cfg, prepared, backend);
    const std::size_t n = prepared.records.size();

    const Clock::time_point run_start = Clock::now();

    // Image bytes load serially; a missing or empty file fails that image only.
    std::vector<std::vector<unsigned char>> bytes(n);
    std::vector<PerImageResult> results(n);
    std::vector<bool> preload_failed(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        try {
            bytes[i] = read_file_bytes(prepared.images_root / prepared.records[i].image_ref);
        } catch (const Error& e) {
            results[i].image_ref = prepared.records[i].image_ref;
            results[i].errors.push_back(e.what());
            preload_failed[i] = true;
        }
    }

    const long long count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic) num_threads(cfg.parallelism)
    for (long long i = 0; i < count; ++i) {
        const std::size_t idx = static_cast<std::size_t>(i);
        if (preload_failed[idx]) continue;
        results[idx] = process_image(ctx, prepared.records[idx], bytes[idx]);
    }

    const double wall = elapsed_ms(run_start);

    RunReport report;
    report.per_image = std::move(results);
    report.parallelism = cfg.parallelism;
    report.wall_ms = wall;
    report.fps = wall > 0.0 ? static_cast<double>(n) / (wall / 1000.0) : 0.0;

    std::vector<LabeledPair> pairs;
    std::vector<StageTimings> ok_timings;
    for (std::size_t i = 0; i < n; ++i) {
        if (report.per_image[i].failed()) {
            ++report.error_count;
            continue;
        }
        pairs.push_back({report.per_image[i].assessment.categories, prepared.records[i].hazards});
        ok_timings.push_back(report.per_image[i].timings);
    }
    report.corpus = aggregate_hazard_metrics(pairs);
    report.stage_stats = collect_stage_stats(ok_timings);

    if (prepared.embeddings) {
        RationaleScore rationale;
        std::optional<IdfTable> idf;
        if (cfg.use_idf) {
            std::vector<std::vector<std::string>> reference_docs;
            for (const HazardRecord& record : prepared.records) {
                const std::string text = join_rationales(record.rationales);
                if (!text.empty()) reference_docs.push_back(simple_tokenize(text));
            }
            idf = build_idf_table(reference_docs);
        }
        double p_sum = 0.0;
        double r_sum = 0.0;
        double f_sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            PerImageResult& result = report.per_image[i];
            if (result.failed()) continue;
            const std::string candidate = join_rationales(result.assessment.rationales);
            const std::string reference = join_rationales(prepared.records[i].rationales);
            if (simple_tokenize(candidate).empty() || simple_tokenize(reference).empty()) {
                ++rationale.skipped_empty;
                continue;
            }
            try {
                const TokenEmbeddings cand = embed_text(*prepared.embeddings, candidate);
                const TokenEmbeddings ref = embed_text(*prepared.embeddings, reference);
                const BertScore score = bertscore(cand, ref, idf ? &*idf : nullptr);
                result.rationale_score = score;
                p_sum += score.precision;
                r_sum += score.recall;
                f_sum += score.f1;
                ++rationale.scored;
            } catch (const EmbeddingError& e) {
                rationale.errors.push_back(result.image_ref + ": " + e.what());
            }
        }
        if (rationale.scored > 0) {
            rationale.precision = p_sum / static_cast<double>(rationale.scored);
            rationale.recall = r_sum / static_cast<double>(rationale.scored);
            rationale.f1 = f_sum / static_cast<double>(rationale.scored);
        }
        report.rationale = std::move(rationale);
    }

    nlohmann::ordered_json config_echo;
    config_echo["mode"] = std::string(prompt_mode_name(cfg.mode));
    config_echo["template_version"] = prepared.tmpl.version;
    config_echo["model"] = cfg.vlm.model_name;
    config_echo["vlm_backend"] = backend.id();
    config_echo["detector"] =
        prepared.detector ? nlohmann::ordered_json(prepared.detector->id())
                          : nlohmann::ordered_json(nullptr);
    config_echo["embeddings"] = prepared.embeddings
                                    ? nlohmann::ordered_json(prepared.embeddings->id())
                                    : nlohmann::ordered_json(nullptr);
    config_echo["idf"] = cfg.use_idf;
    config_echo["strict_parse"] = cfg.strict_parse;
    config_echo["manifest"] = cfg.manifest_path.string();
    report.config_echo = std::move(config_echo);

    if (!cfg.output_dir.empty()) {
        std::filesystem::create_directories(cfg.output_dir);
        save_report(cfg.output_dir / "report.json", report);
    }
    return report;
}

BenchReport bench(const BenchConfig& cfg, VlmBackend& backend) {
    if (cfg.repeats < 1) {
        throw ConfigError("bench: repeats must be >= 1");
    }
    if (cfg.warmup < 0) {
        throw ConfigError("bench: warmup must be >= 0");
    }

    RunConfig base = cfg.run;
    base.parallelism = 1;  // stage timing is only meaningful unconcurrent
    base.output_dir.clear();
    base.embeddings.clear();

    RunConfig guided_cfg = base;
    guided_cfg.mode = PromptMode::detection_guided;
    RunConfig baseline_cfg = base;
    baseline_cfg.mode = PromptMode::baseline;
    baseline_cfg.time_detector_in_baseline = false;

    PreparedRun guided = prepare(guided_cfg);
    PreparedRun baseline = prepare(baseline_cfg);
    const std::size_t n = guided.records.size();
    if (n == 0) {
        throw ConfigError("bench: manifest has no evaluation records");
    }

    // Bytes load once; bench measures the pipeline stages, not image IO.
    std::vector<std::vector<unsigned char>> bytes(n);
    for (std::size_t i = 0; i < n; ++i) {
        bytes[i] = read_file_bytes(guided.images_root / guided.records[i].image_ref);
    }

    const PipelineContext guided_ctx = make_context(guided_cfg, guided, backend);
    const PipelineContext baseline_ctx = make_context(baseline_cfg, baseline, backend);

    const auto measure = [&](const PipelineContext& ctx,
                             const PreparedRun& prepared) -> BenchModeStats {
        std::vector<StageTimings> samples;
        double measured_wall_ms = 0.0;
        std::size_t measured_images = 0;
        for (int repeat = 0; repeat < cfg.warmup + cfg.repeats; ++repeat) {
            const Clock::time_point start = Clock::now();
            std::vector<StageTimings> pass;
            for (std::size_t i = 0; i < n; ++i) {
                PerImageResult result = process_image(ctx, prepared.records[i], bytes[i]);
                if (result.failed()) {
                    throw ConfigError("bench: image '" + result.image_ref +
                                      "' failed: " + result.errors.front());
                }
                pass.push_back(result.timings);
            }
            const double wall = elapsed_ms(start);
            if (repeat >= cfg.warmup) {
                samples.insert(samples.end(), pass.begin(), pass.end());
                measured_wall_ms += wall;
                measured_images += n;
            }
        }
        BenchModeStats stats;
        stats.stages = collect_stage_stats(samples);
        stats.mean_image_wall_ms = stats.stages["wall"].mean_ms;
        stats.fps = measured_wall_ms > 0.0
                        ? static_cast<double>(measured_images) / (measured_wall_ms / 1000.0)
                        : 0.0;
        const double stage_sum = stats.stages["detect"].mean_ms + stats.stages["encode"].mean_ms +
                                 stats.stages["vlm"].mean_ms + stats.stages["parse"].mean_ms;
        if (stats.mean_image_wall_ms > 0.0) {
            stats.stage_sum_vs_wall_gap =
                std::abs(stats.mean_image_wall_ms - stage_sum) / stats.mean_image_wall_ms;
        }
        stats.stages.erase("wall");
        return stats;
    };

    BenchReport report;
    report.baseline = measure(baseline_ctx, baseline);
    report.guided = measure(guided_ctx, guided);
    report.repeats = cfg.repeats;
    report.warmup = cfg.warmup;
    report.images = n;
    report.overhead_wall_ms =
        report.guided.mean_image_wall_ms - report.baseline.mean_image_wall_ms;
    for (const char* stage : {"detect", "encode", "vlm", "parse"}) {
        report.overhead_by_stage_ms[stage] =
            report.guided.stages[stage].mean_ms - report.baseline.stages[stage].mean_ms;
    }
    return report;
}

nlohmann::ordered_json bench_to_json(const BenchReport& report) {
    const auto mode_json = [](const BenchModeStats& stats) {
        nlohmann::ordered_json stages = nlohmann::ordered_json::object();
        for (const auto& [name, s] : stats.stages) {
            stages[name] = {{"mean_ms", s.mean_ms}, {"p50_ms", s.p50_ms}, {"p95_ms", s.p95_ms}};
        }
        return nlohmann::ordered_json{{"stages", std::move(stages)},
                                      {"mean_image_wall_ms", stats.mean_image_wall_ms},
                                      {"fps", stats.fps},
                                      {"stage_sum_vs_wall_gap", stats.stage_sum_vs_wall_gap}};
    };
    nlohmann::ordered_json doc;
    doc["images"] = report.images;
    doc["repeats"] = report.repeats;
    doc["warmup"] = report.warmup;
    doc["baseline"] = mode_json(report.baseline);
    doc["guided"] = mode_json(report.guided);
    doc["overhead_wall_ms"] = report.overhead_wall_ms;
    nlohmann::ordered_json by_stage = nlohmann::ordered_json::object();
    for (const auto& [name, value] : report.overhead_by_stage_ms) {
        by_stage[name] = value;
    }
    doc["overhead_by_stage_ms"] = std::move(by_stage);
    doc["fps_delta"] = report.guided.fps - report.baseline.fps;
    return doc;
}

}  // namespace hazguard
