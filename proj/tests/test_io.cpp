#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "hazguard/dataset_store.hpp"
#include "hazguard/detection_metrics.hpp"
#include "hazguard/detector_backend.hpp"
#include "hazguard/digest.hpp"
#include "hazguard/errors.hpp"
#include "hazguard/prompt.hpp"
#include "hazguard/vlm_client.hpp"

using namespace hazguard;
namespace fs = std::filesystem;

namespace {

const std::string kSourceDir = HAZGUARD_SOURCE_DIR;

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

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

HazardRecord valid_record(const std::string& ref) {
    HazardRecord record;
    record.image_ref = ref;
    record.hazards = {"fall_hazard"};
    record.rationales = {{"fall_hazard", "worker on unguarded edge"}};
    record.source = RecordSource::public_dataset;
    record.validation = ValidationState::validated;
    return record;
}

}  // namespace

TEST_CASE("digest framing and determinism") {
    // SHA-256 of zero framed fields is the hash of the empty string.
    CHECK(sha256_hex({}) ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");

    const std::vector<std::string_view> ab_c = {"ab", "c"};
    const std::vector<std::string_view> a_bc = {"a", "bc"};
    CHECK(sha256_hex(ab_c) != sha256_hex(a_bc));  // length framing
    CHECK(sha256_hex(ab_c) == sha256_hex(ab_c));

    const std::vector<unsigned char> image = {0x89, 0x50, 0x4e, 0x47};
    const std::string digest = request_digest(image, "prompt", "model");
    CHECK(digest.size() == 64);
    CHECK(digest == request_digest(image, "prompt", "model"));
    CHECK(digest != request_digest(image, "prompt2", "model"));
    CHECK(digest != request_digest(image, "prompt", "model2"));
    std::vector<unsigned char> tweaked = image;
    tweaked[0] ^= 1;
    CHECK(digest != request_digest(tweaked, "prompt", "model"));
    CHECK_NOTHROW(request_digest({}, "prompt", "model"));
}

TEST_CASE("base64") {
    const std::vector<unsigned char> man = {'M', 'a', 'n'};
    CHECK(base64_encode(man) == "TWFu");
    const std::vector<unsigned char> bytes = {0, 1, 2};
    CHECK(base64_encode(bytes) == "AAEC");
    CHECK(base64_encode({}) == "");
    const std::vector<unsigned char> pad = {'M', 'a'};
    CHECK(base64_encode(pad) == "TWE=");
}

TEST_CASE("transcript round trip") {
    const fs::path dir = temp_dir("hazguard_transcripts");
    Transcript transcript;
    transcript.digest = "abc123";
    transcript.model = "m";
    transcript.prompt = "p";
    transcript.response = "Hazards: none";
    transcript.latency_ms = 42.5;
    transcript.token_usage = TokenUsage{10, 3};
    save_transcript(dir, transcript);

    const Transcript loaded = load_transcript(dir / "abc123.json");
    CHECK(loaded.digest == transcript.digest);
    CHECK(loaded.model == transcript.model);
    CHECK(loaded.prompt == transcript.prompt);
    CHECK(loaded.response == transcript.response);
    CHECK(loaded.latency_ms == transcript.latency_ms);
    REQUIRE(loaded.token_usage.has_value());
    CHECK(loaded.token_usage->prompt_tokens == 10);
    CHECK(loaded.token_usage->completion_tokens == 3);

    transcript.digest = "nousage";
    transcript.token_usage.reset();
    save_transcript(dir, transcript);
    CHECK_FALSE(load_transcript(dir / "nousage.json").token_usage.has_value());

    write_file(dir / "bad.json", R"({"digest": "bad"})");
    CHECK_THROWS_AS(load_transcript(dir / "bad.json"), SchemaError);
    write_file(dir / "neg.json",
               R"({"digest":"neg","model":"m","prompt":"p","response":"r","latency_ms":-1})");
    CHECK_THROWS_AS(load_transcript(dir / "neg.json"), SchemaError);
    CHECK_THROWS_AS(load_transcript(dir / "absent.json"), IoError);
}

TEST_CASE("replay backend serves stored transcripts") {
    const fs::path dir = temp_dir("hazguard_replay");
    const std::vector<unsigned char> image = {1, 2, 3};
    InferenceConfig cfg;
    cfg.model_name = "m";

    Transcript transcript;
    transcript.digest = request_digest(image, "the prompt", "m");
    transcript.model = "m";
    transcript.prompt = "the prompt";
    transcript.response = "Hazards: none";
    transcript.latency_ms = 7.0;
    save_transcript(dir, transcript);

    ReplayBackend backend(dir);
    const RawResponse response = backend.complete(image, "the prompt", cfg);
    CHECK(response.text == "Hazards: none");
    CHECK(response.latency_ms == 7.0);

    CHECK_THROWS_AS(backend.complete(image, "different prompt", cfg), ReplayMissError);
    CHECK_THROWS_AS(ReplayBackend{fs::path("/nonexistent/dir")}, ConfigError);
}

TEST_CASE("fake backend") {
    FakeBackend fixed("Hazards: none");
    InferenceConfig cfg;
    const RawResponse response = fixed.complete({}, "any", cfg);
    CHECK(response.text == "Hazards: none");
    CHECK(response.latency_ms >= 0.0);
    CHECK(response.latency_ms < 1.0);  // zero-latency double

    FakeBackend echo = FakeBackend::echoing_digest();
    const std::vector<unsigned char> image = {9};
    cfg.model_name = "m";
    const RawResponse echoed = echo.complete(image, "p", cfg);
    CHECK(echoed.text == request_digest(image, "p", "m"));
}

TEST_CASE("inference config validation") {
    InferenceConfig cfg;
    CHECK_NOTHROW(validate_inference_config(cfg));
    cfg.temperature = -0.1;
    CHECK_THROWS_AS(validate_inference_config(cfg), ConfigError);
    cfg.temperature = 0.1;
    cfg.max_tokens = 0;
    CHECK_THROWS_AS(validate_inference_config(cfg), ConfigError);
    cfg.max_tokens = 10;
    cfg.timeout_seconds = 0.0;
    CHECK_THROWS_AS(validate_inference_config(cfg), ConfigError);

    const InferenceConfig annotation = annotation_profile(InferenceConfig{});
    CHECK(annotation.temperature == 0.1);
    CHECK(annotation.max_tokens == 180);
}

TEST_CASE("manifest round trip") {
    const fs::path dir = temp_dir("hazguard_manifest");
    Manifest manifest;
    manifest.records.push_back(valid_record("images/a.png"));
    HazardRecord second = valid_record("images/b.png");
    second.hazards = {"fall_hazard", "unsafe_environment"};
    second.rationales["unsafe_environment"] = "debris on walkway";
    second.source = RecordSource::historical_inspection;
    second.validation = ValidationState::revised;
    second.history.push_back({"annotator1",
                              "2026-01-05T10:00:00Z",
                              "revised",
                              {"fall_hazard"},
                              {{"fall_hazard", "old text"}},
                              "draft"});
    manifest.records.push_back(second);
    HazardRecord draft = valid_record("images/c.png");
    draft.validation = ValidationState::draft;
    draft.warnings = {"unknown_label: 'x'"};
    manifest.records.push_back(draft);

    const fs::path path = dir / "manifest.jsonl";
    save_manifest(path, manifest);
    const Manifest loaded = load_manifest(path);
    REQUIRE(loaded.records.size() == 3);
    CHECK(loaded.records[0].image_ref == "images/a.png");
    CHECK(loaded.records[1].hazards == second.hazards);
    CHECK(loaded.records[1].rationales == second.rationales);
    CHECK(loaded.records[1].source == RecordSource::historical_inspection);
    CHECK(loaded.records[1].validation == ValidationState::revised);
    REQUIRE(loaded.records[1].history.size() == 1);
    CHECK(loaded.records[1].history[0].previous_hazards == std::set<std::string>{"fall_hazard"});
    CHECK(loaded.records[2].warnings == draft.warnings);

    // Canonical serialization: saving the loaded manifest is byte-identical.
    const fs::path path2 = dir / "manifest2.jsonl";
    save_manifest(path2, loaded);
    CHECK(read_file(path) == read_file(path2));

    const std::vector<HazardRecord> eval = evaluation_records(loaded);
    REQUIRE(eval.size() == 2);
    CHECK(eval[0].image_ref == "images/a.png");
    CHECK(eval[1].image_ref == "images/b.png");
}

TEST_CASE("manifest diagnostics carry line numbers") {
    const fs::path dir = temp_dir("hazguard_manifest_bad");
    const fs::path path = dir / "bad.jsonl";
    write_file(
        path,
        R"({"image":"a.png","hazards":["fall_hazard"],"rationales":{"fall_hazard":"ok"},"source":"public_dataset","validation":"validated"})"
        "\n"
        R"({"image":"b.png","hazards":["not_a_key"],"rationales":{},"source":"public_dataset","validation":"draft"})"
        "\n"
        R"({"image":"c.png","hazards":["fall_hazard"],"rationales":{"unsafe_environment":"stray"},"source":"public_dataset","validation":"draft"})"
        "\n"
        R"({"image":"a.png","hazards":[],"rationales":{},"source":"nope","validation":"validated"})"
        "\n");
    try {
        load_manifest(path);
        FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
        const std::vector<std::string>& diagnostics = e.diagnostics();
        REQUIRE(diagnostics.size() >= 4);
        const auto has = [&](const std::string& line, const std::string& text) {
            return std::any_of(diagnostics.begin(), diagnostics.end(),
                               [&](const std::string& d) {
                                   return d.find(line) != std::string::npos &&
                                          d.find(text) != std::string::npos;
                               });
        };
        CHECK(has("line 2", "not_a_key"));
        CHECK(has("line 3", "unsafe_environment"));
        CHECK(has("line 4", "nope"));
        CHECK(has("line 4", "duplicate image reference"));
    }

    // Validated records must carry a rationale for every hazard.
    write_file(
        path,
        R"({"image":"a.png","hazards":["fall_hazard"],"rationales":{},"source":"public_dataset","validation":"validated"})"
        "\n");
    CHECK_THROWS_AS(load_manifest(path), SchemaError);

    // Draft records may omit rationales.
    write_file(
        path,
        R"({"image":"a.png","hazards":["fall_hazard"],"rationales":{},"source":"public_dataset","validation":"draft"})"
        "\n");
    CHECK_NOTHROW(load_manifest(path));

    CHECK_THROWS_AS(load_manifest(dir / "missing.jsonl"), IoError);
}

TEST_CASE("save rejects invalid manifests") {
    const fs::path dir = temp_dir("hazguard_manifest_save");
    Manifest manifest;
    HazardRecord bad = valid_record("a.png");
    bad.hazards = {"bogus_key"};
    bad.rationales.clear();
    manifest.records.push_back(bad);
    CHECK_THROWS_AS(save_manifest(dir / "out.jsonl", manifest), SchemaError);
    CHECK_FALSE(fs::exists(dir / "out.jsonl"));
}

TEST_CASE("dataset split") {
    std::vector<int> items(10);
    for (int i = 0; i < 10; ++i) items[i] = i;

    SplitSpec spec;
    spec.seed = 5;
    const SplitResult<int> split = split_dataset(items, spec);
    CHECK(split.train.size() == 7);
    CHECK(split.val.size() == 2);
    CHECK(split.test.size() == 1);

    // Partition: nothing lost, nothing duplicated.
    std::vector<int> all;
    all.insert(all.end(), split.train.begin(), split.train.end());
    all.insert(all.end(), split.val.begin(), split.val.end());
    all.insert(all.end(), split.test.begin(), split.test.end());
    std::sort(all.begin(), all.end());
    CHECK(all == items);

    // Deterministic in the seed; different seeds shuffle differently.
    const SplitResult<int> again = split_dataset(items, spec);
    CHECK(split.train == again.train);
    CHECK(split.val == again.val);
    CHECK(split.test == again.test);
    SplitSpec other = spec;
    other.seed = 6;
    const SplitResult<int> different = split_dataset(items, other);
    CHECK(split.train != different.train);

    SplitSpec bad;
    bad.train_frac = 0.8;  // sums to 1.1
    CHECK_THROWS_AS(validate_split_spec(bad), ArgumentError);
    bad.train_frac = -0.1;
    bad.val_frac = 1.0;
    bad.test_frac = 0.1;
    CHECK_THROWS_AS(validate_split_spec(bad), ArgumentError);

    // Small-n edge cases still partition.
    const std::vector<int> one = {42};
    const SplitResult<int> tiny = split_dataset(one, spec);
    CHECK(tiny.train.size() + tiny.val.size() + tiny.test.size() == 1);
}

TEST_CASE("validation verdicts") {
    const HazardRecord draft = [] {
        HazardRecord record = valid_record("a.png");
        record.validation = ValidationState::draft;
        return record;
    }();

    const HazardRecord validated =
        record_validation_verdict(draft, ValidationState::validated, std::nullopt, "ann1",
                                  "2026-02-01T00:00:00Z");
    CHECK(validated.validation == ValidationState::validated);
    REQUIRE(validated.history.size() == 1);
    CHECK(validated.history[0].annotator_id == "ann1");
    CHECK(validated.history[0].verdict == "validated");
    CHECK(validated.history[0].previous_validation == "draft");
    CHECK(validated.history[0].previous_hazards == draft.hazards);

    RecordEdits edits;
    edits.hazards = std::set<std::string>{"unsafe_environment"};
    edits.rationales =
        std::map<std::string, std::string>{{"unsafe_environment", "debris everywhere"}};
    const HazardRecord revised = record_validation_verdict(
        draft, ValidationState::revised, edits, "ann2", "2026-02-01T00:00:00Z");
    CHECK(revised.validation == ValidationState::revised);
    CHECK(revised.hazards == std::set<std::string>{"unsafe_environment"});
    CHECK(revised.rationales.at("unsafe_environment") == "debris everywhere");
    CHECK(revised.history[0].previous_hazards == draft.hazards);

    const HazardRecord rejected = record_validation_verdict(
        draft, ValidationState::rejected, std::nullopt, "ann3", "2026-02-01T00:00:00Z");
    CHECK(rejected.validation == ValidationState::rejected);

    CHECK_THROWS_AS(
        record_validation_verdict(draft, ValidationState::draft, std::nullopt, "ann"),
        ArgumentError);
    CHECK_THROWS_AS(
        record_validation_verdict(draft, ValidationState::revised, std::nullopt, "ann"),
        ArgumentError);
    CHECK_THROWS_AS(record_validation_verdict(draft, ValidationState::validated, edits, "ann"),
                    ArgumentError);
    CHECK_THROWS_AS(
        record_validation_verdict(draft, ValidationState::validated, std::nullopt, ""),
        ArgumentError);

    // Revision edits must respect the manifest invariants.
    RecordEdits bad_edits;
    bad_edits.hazards = std::set<std::string>{"not_a_key"};
    CHECK_THROWS_AS(
        record_validation_verdict(draft, ValidationState::revised, bad_edits, "ann"),
        ArgumentError);
}

TEST_CASE("annotation draft generation") {
    auto backend = std::make_shared<FakeBackend>(
        "Hazards: fall_hazard\nExplanation:\n-fall_hazard: worker on unguarded edge");
    InferenceConfig cfg;
    cfg.model_name = "m";
    const VlmClient client(backend, annotation_profile(cfg));
    const std::vector<unsigned char> image = {1, 2, 3};

    const HazardRecord record =
        generate_annotation_draft("a.png", image, client, default_categories(),
                                  builtin_annotation_template());
    CHECK(record.validation == ValidationState::draft);
    CHECK(record.hazards == std::set<std::string>{"fall_hazard"});
    CHECK(record.rationales.at("fall_hazard") == "worker on unguarded edge");
    CHECK(record.image_ref == "a.png");

    // The annotation decoding profile is enforced.
    const VlmClient wrong_profile(backend, cfg);
    CHECK_THROWS_AS(generate_annotation_draft("a.png", image, wrong_profile,
                                              default_categories(),
                                              builtin_annotation_template()),
                    ConfigError);
}

TEST_CASE("record source and validation names") {
    CHECK(record_source_name(RecordSource::historical_inspection) == "historical_inspection");
    CHECK(record_source_from_name("public_dataset") == RecordSource::public_dataset);
    CHECK_FALSE(record_source_from_name("other").has_value());
    CHECK(validation_state_name(ValidationState::revised) == "revised");
    CHECK(validation_state_from_name("rejected") == ValidationState::rejected);
    CHECK_FALSE(validation_state_from_name("ok").has_value());
}

TEST_CASE("detection file loading") {
    const fs::path dir = temp_dir("hazguard_detections");
    write_file(dir / "good.json",
               R"({"image": "good.png", "detections": [
                    {"class": "Worker", "cx": 0.5, "cy": 0.5, "w": 0.1, "h": 0.2, "score": 0.9},
                    {"class": "dump_truck", "cx": 0.7, "cy": 0.6, "w": 0.3, "h": 0.2, "score": 0.4}
                  ]})");
    std::string image_ref;
    const std::vector<Detection> dets = load_detections(dir / "good.json", &image_ref);
    REQUIRE(dets.size() == 2);
    CHECK(image_ref == "good.png");
    CHECK(dets[0].cls == ObjectClass::Worker);
    CHECK(dets[1].cls == ObjectClass::DumpTruck);

    write_file(dir / "bad_class.json",
               R"({"image": "x.png", "detections": [
                    {"class": "forklift", "cx": 0.5, "cy": 0.5, "w": 0.1, "h": 0.2, "score": 0.9}]})");
    CHECK_THROWS_AS(load_detections(dir / "bad_class.json"), SchemaError);

    write_file(dir / "bad_score.json",
               R"({"image": "x.png", "detections": [
                    {"class": "Worker", "cx": 0.5, "cy": 0.5, "w": 0.1, "h": 0.2, "score": 1.5}]})");
    CHECK_THROWS_AS(load_detections(dir / "bad_score.json"), SchemaError);

    write_file(dir / "bad_box.json",
               R"({"image": "x.png", "detections": [
                    {"class": "Worker", "cx": 1.5, "cy": 0.5, "w": 0.1, "h": 0.2, "score": 0.9}]})");
    CHECK_THROWS_AS(load_detections(dir / "bad_box.json"), ArgumentError);

    write_file(dir / "not_json.json", "not json at all");
    CHECK_THROWS_AS(load_detections(dir / "not_json.json"), SchemaError);
}

TEST_CASE("ground truth loading") {
    const fs::path dir = temp_dir("hazguard_labels");
    write_file(dir / "good.txt", "0 0.5 0.5 0.1 0.2\n5 0.7 0.6 0.3 0.2\n\n");
    const std::vector<GroundTruth> gts = load_ground_truth(dir / "good.txt");
    REQUIRE(gts.size() == 2);
    CHECK(gts[0].cls == ObjectClass::Worker);
    CHECK(gts[1].cls == ObjectClass::Excavator);

    write_file(dir / "bad_class.txt", "99 0.5 0.5 0.1 0.2\n");
    CHECK_THROWS_AS(load_ground_truth(dir / "bad_class.txt"), SchemaError);
    write_file(dir / "short.txt", "0 0.5 0.5\n");
    CHECK_THROWS_AS(load_ground_truth(dir / "short.txt"), SchemaError);
    write_file(dir / "extra.txt", "0 0.5 0.5 0.1 0.2 0.9\n");
    CHECK_THROWS_AS(load_ground_truth(dir / "extra.txt"), SchemaError);
}

TEST_CASE("detection corpus pairing") {
    const fs::path pred_dir = temp_dir("hazguard_corpus_pred");
    const fs::path label_dir = temp_dir("hazguard_corpus_label");
    write_file(label_dir / "a.txt", "0 0.5 0.5 0.1 0.2\n");
    write_file(label_dir / "b.txt", "0 0.5 0.5 0.1 0.2\n");
    write_file(pred_dir / "a.json",
               R"({"image": "a.png", "detections": [
                    {"class": "Worker", "cx": 0.5, "cy": 0.5, "w": 0.1, "h": 0.2, "score": 0.9}]})");
    write_file(pred_dir / "orphan.json", R"({"image": "o.png", "detections": []})");

    std::vector<std::string> warnings;
    const std::vector<ImageDetections> corpus =
        load_detection_corpus(pred_dir, label_dir, &warnings);
    REQUIRE(corpus.size() == 2);
    CHECK(corpus[0].image_ref == "a");
    CHECK(corpus[0].predictions.size() == 1);
    CHECK(corpus[1].image_ref == "b");
    CHECK(corpus[1].predictions.empty());  // missing prediction file -> empty
    CHECK(warnings.size() == 2);           // missing predictions + orphan

    CHECK_THROWS_AS(load_detection_corpus(pred_dir, temp_dir("hazguard_empty_labels")),
                    IoError);
}

TEST_CASE("letterbox transform") {
    const LetterboxTransform t = letterbox_transform(1280, 640, 640);
    CHECK(t.scale == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(t.pad_x == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(t.pad_y == doctest::Approx(160.0).epsilon(1e-12));
    CHECK(t.to_canvas_x(1280.0) == doctest::Approx(640.0));
    CHECK(t.to_canvas_y(0.0) == doctest::Approx(160.0));
    CHECK(t.from_canvas_x(t.to_canvas_x(437.0)) == doctest::Approx(437.0).epsilon(1e-9));

    // Canvas-space box back to normalized image coordinates.
    const std::optional<BoundingBox> box = t.normalized_from_canvas(320.0, 320.0, 64.0, 64.0);
    REQUIRE(box.has_value());
    CHECK(box->cx == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(box->cy == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(box->w == doctest::Approx(0.1).epsilon(1e-9));
    CHECK(box->h == doctest::Approx(0.2).epsilon(1e-9));

    // A candidate entirely inside the padding band maps to nothing.
    CHECK_FALSE(t.normalized_from_canvas(320.0, 80.0, 64.0, 64.0).has_value());

    CHECK_THROWS_AS(letterbox_transform(0, 100, 640), ArgumentError);
}

TEST_CASE("detector output decoding") {
    const LetterboxTransform t = letterbox_transform(640, 640, 640);
    const std::vector<ObjectClass> classes = {ObjectClass::Worker, ObjectClass::Excavator};
    // Three candidates x (4 box + 2 class scores); boxes in canvas pixels.
    // Candidate 0: worker at center, confident. Candidate 1: duplicate of 0
    // (suppressed by NMS). Candidate 2: excavator below threshold.
    const std::vector<float> rows = {
        320.0f, 320.0f, 64.0f, 128.0f, 0.90f, 0.05f,
        322.0f, 321.0f, 64.0f, 128.0f, 0.80f, 0.04f,
        100.0f, 100.0f, 50.0f, 50.0f,  0.02f, 0.10f,
    };
    const std::vector<Detection> last =
        decode_detector_output(rows, 3, /*channels_first=*/false, t, 0.25, classes);
    REQUIRE(last.size() == 1);
    CHECK(last[0].cls == ObjectClass::Worker);
    CHECK(last[0].score == doctest::Approx(0.90).epsilon(1e-6));
    CHECK(last[0].box.cx == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(last[0].box.h == doctest::Approx(0.2).epsilon(1e-6));

    // Same tensor transposed to [attrs x candidates].
    std::vector<float> transposed(rows.size());
    for (std::size_t c = 0; c < 3; ++c) {
        for (std::size_t a = 0; a < 6; ++a) {
            transposed[a * 3 + c] = rows[c * 6 + a];
        }
    }
    const std::vector<Detection> first =
        decode_detector_output(transposed, 3, /*channels_first=*/true, t, 0.25, classes);
    REQUIRE(first.size() == 1);
    CHECK(first[0].box.cx == last[0].box.cx);
    CHECK(first[0].score == last[0].score);

    // Lowering the NMS bar keeps the near-duplicate.
    const std::vector<Detection> loose =
        decode_detector_output(rows, 3, false, t, 0.25, classes, /*nms_iou=*/0.999);
    CHECK(loose.size() == 2);

    CHECK_THROWS_AS(decode_detector_output(rows, 4, false, t, 0.25, classes), ArgumentError);
}

TEST_CASE("class list file") {
    const std::vector<ObjectClass> classes =
        load_class_list(kSourceDir + "/data/classes.txt");
    REQUIRE(classes.size() == static_cast<std::size_t>(kNumObjectClasses));
    CHECK(classes[0] == ObjectClass::Worker);
    CHECK(classes[10] == ObjectClass::BackhoeLoader);

    const fs::path dir = temp_dir("hazguard_classes");
    write_file(dir / "bad.txt", "Worker\nForklift\n");
    CHECK_THROWS_AS(load_class_list(dir / "bad.txt"), SchemaError);
}

TEST_CASE("detector config validation") {
    DetectorConfig cfg;
    cfg.kind = DetectorKind::files;
    CHECK_THROWS_AS(validate_detector_config(cfg), ConfigError);  // no source
    cfg.files_dir = "somewhere";
    CHECK_NOTHROW(validate_detector_config(cfg));
    cfg.model_path = "also_a_model";  // two sources
    CHECK_THROWS_AS(validate_detector_config(cfg), ConfigError);

    DetectorConfig http;
    http.kind = DetectorKind::http;
    http.endpoint = "http://localhost:1";
    CHECK_NOTHROW(validate_detector_config(http));
    http.input_size = 0;
    CHECK_THROWS_AS(validate_detector_config(http), ConfigError);
    http.input_size = 640;
    http.score_threshold = 1.5;
    CHECK_THROWS_AS(validate_detector_config(http), ConfigError);
}

TEST_CASE("files detector reads and filters") {
    const fs::path dir = temp_dir("hazguard_files_det");
    write_file(dir / "img.json",
               R"({"image": "img.png", "detections": [
                    {"class": "Worker", "cx": 0.5, "cy": 0.5, "w": 0.1, "h": 0.2, "score": 0.9},
                    {"class": "Worker", "cx": 0.2, "cy": 0.5, "w": 0.1, "h": 0.2, "score": 0.1}]})");
    DetectorConfig cfg;
    cfg.kind = DetectorKind::files;
    cfg.files_dir = dir;
    cfg.score_threshold = 0.25;
    const std::unique_ptr<Detector> detector = make_detector(cfg);
    const TimedDetections result = detector->detect({}, "images/img.png");
    REQUIRE(result.detections.size() == 1);
    CHECK(result.detections[0].score == 0.9);
    CHECK(result.detect_latency_ms >= 0.0);
    CHECK_THROWS_AS(detector->detect({}, "missing.png"), IoError);
}
