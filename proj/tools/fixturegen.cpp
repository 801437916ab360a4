// Regenerates the bundled end-to-end fixture: four synthetic images with
// detection files, detector ground truth, an evaluation manifest, replay
// transcripts for both prompt modes, and a token embedding cache covering
// the rationale vocabulary. Transcripts are produced with the same library
// calls the pipeline uses, so their digests match by construction.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "CLI11.hpp"
#include "json.hpp"

#include "hazguard/dataset_store.hpp"
#include "hazguard/detection.hpp"
#include "hazguard/detector_backend.hpp"
#include "hazguard/digest.hpp"
#include "hazguard/embeddings.hpp"
#include "hazguard/errors.hpp"
#include "hazguard/parser.hpp"
#include "hazguard/prompt.hpp"
#include "hazguard/vlm_client.hpp"

namespace {

using namespace hazguard;
namespace fs = std::filesystem;

struct RawDetection {
    const char* cls;
    double cx;
    double cy;
    double w;
    double h;
    double score;
};

struct FixtureImage {
    std::string name;
    std::set<std::string> hazards;
    std::map<std::string, std::string> rationales;
    std::vector<RawDetection> detections;
    std::string baseline_response;
    std::string guided_response;
};

std::vector<FixtureImage> fixture_images() {
    std::vector<FixtureImage> images(4);

    images[0].name = "img_000";
    images[0].hazards = {"caught_between_hazard", "ppe_non_compliance"};
    images[0].rationales = {
        {"caught_between_hazard",
         "A worker stands in the pinch zone between the excavator arm and the stacked material."},
        {"ppe_non_compliance", "The worker beside the excavator is not wearing a helmet."},
    };
    images[0].detections = {
        {"Worker", 0.558, 0.518, 0.080, 0.210, 0.92},
        {"Worker", 0.590, 0.514, 0.074, 0.198, 0.88},
        {"Excavator", 0.410, 0.472, 0.320, 0.360, 0.81},
        {"Dump Truck", 0.780, 0.430, 0.240, 0.260, 0.34},
        {"Worker", 0.205, 0.660, 0.060, 0.170, 0.22},
        {"Worker", 0.148, 0.645, 0.058, 0.160, 0.18},
        {"Excavator", 0.655, 0.512, 0.300, 0.330, 0.12},
        {"Mobile Crane", 0.520, 0.300, 0.280, 0.420, 0.09},
        {"Dozer", 0.330, 0.700, 0.220, 0.200, 0.07},
        {"Worker", 0.870, 0.690, 0.050, 0.150, 0.05},
    };
    images[0].baseline_response =
        "Hazards: ppe_non_compliance, fall_hazard, unsafe_environment\n"
        "Explanation:\n"
        "-ppe_non_compliance: A worker near the machine appears to lack a helmet.\n"
        "-fall_hazard: Someone could fall from the raised platform at the left.\n"
        "-unsafe_environment: Debris is scattered across the work area.\n";
    images[0].guided_response =
        "Hazards: caught_between_hazard, ppe_non_compliance\n"
        "Explanation:\n"
        "-caught_between_hazard: Worker w1 stands between excavator ex1 and the material stack"
        " with no escape route.\n"
        "-ppe_non_compliance: Worker w2 next to excavator ex1 is not wearing a helmet.\n";

    images[1].name = "img_001";
    images[1].hazards = {"caught_between_hazard"};
    images[1].rationales = {
        {"caught_between_hazard",
         "A worker is inside the swing radius of the operating excavator."},
    };
    images[1].detections = {
        {"Worker", 0.352, 0.540, 0.070, 0.200, 0.90},
        {"Excavator", 0.560, 0.480, 0.340, 0.380, 0.86},
        {"Wheel Loader", 0.820, 0.500, 0.260, 0.280, 0.31},
        {"Worker", 0.118, 0.630, 0.056, 0.150, 0.21},
        {"Grader", 0.690, 0.720, 0.240, 0.180, 0.14},
        {"Worker", 0.920, 0.640, 0.048, 0.140, 0.11},
        {"Tower Crane", 0.480, 0.220, 0.120, 0.420, 0.08},
        {"Backhoe Loader", 0.260, 0.760, 0.200, 0.190, 0.06},
    };
    images[1].baseline_response =
        "<p>Hazards: caught_between_hazard, unsafe_environment</p>"
        "<p>Explanation:</p>"
        "<ul><li>-caught_between_hazard: A person is very close to the digging machine.</li>"
        "<li>-unsafe_environment: The ground looks uneven and cluttered.</li></ul>";
    images[1].guided_response =
        "Hazards: caught_between_hazard\n"
        "Explanation:\n"
        "-caught_between_hazard: Worker w1 is inside the swing radius of excavator ex1.\n";

    images[2].name = "img_002";
    images[2].hazards = {};
    images[2].rationales = {};
    images[2].detections = {};
    images[2].baseline_response =
        "Hazards: unsafe_environment\n"
        "Explanation:\n"
        "-unsafe_environment: The site looks dusty, which may reduce visibility.\n";
    images[2].guided_response = "Hazards: none\n";

    images[3].name = "img_003";
    images[3].hazards = {"fall_hazard"};
    images[3].rationales = {
        {"fall_hazard",
         "A worker stands on the loaded bed of the dump truck without fall protection."},
    };
    images[3].detections = {
        {"Worker", 0.610, 0.330, 0.066, 0.180, 0.93},
        {"Dump Truck", 0.600, 0.560, 0.380, 0.360, 0.89},
        {"Compactor", 0.220, 0.640, 0.200, 0.190, 0.28},
        {"Worker", 0.090, 0.580, 0.052, 0.150, 0.19},
        {"Cement Truck", 0.840, 0.470, 0.260, 0.300, 0.16},
        {"Worker", 0.300, 0.520, 0.058, 0.160, 0.10},
        {"Dozer", 0.740, 0.760, 0.220, 0.180, 0.08},
    };
    images[3].baseline_response =
        "Hazards: fall_hazard, ppe_non_compliance\n"
        "Explanation:\n"
        "-fall_hazard: A person is standing high up on the truck.\n"
        "-ppe_non_compliance: The person on the truck may not have a harness.\n";
    images[3].guided_response =
        "Hazards: fall_hazard, unsafe_environment\n"
        "Explanation:\n"
        "-fall_hazard: Worker w1 stands on the loaded bed of dump truck dt1 without fall"
        " protection.\n"
        "-unsafe_environment: Loose material is piled around dump truck dt1.\n";

    return images;
}

std::vector<unsigned char> encode_image(int index) {
    cv::Mat img(64, 64, CV_8UC3);
    for (int y = 0; y < img.rows; ++y) {
        for (int x = 0; x < img.cols; ++x) {
            img.at<cv::Vec3b>(y, x) = cv::Vec3b(static_cast<unsigned char>((x * 4) % 256),
                                                static_cast<unsigned char>((y * 4) % 256),
                                                static_cast<unsigned char>((x + y + index * 37) %
                                                                            256));
        }
    }
    std::vector<unsigned char> bytes;
    if (!cv::imencode(".png", img, bytes)) {
        throw IoError("fixturegen: png encoding failed");
    }
    return bytes;
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("fixturegen: cannot write " + path.string());
    }
    out << text;
}

void write_bytes(const fs::path& path, const std::vector<unsigned char>& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("fixturegen: cannot write " + path.string());
    }
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

std::string detection_json(const FixtureImage& fixture) {
    nlohmann::ordered_json doc;
    doc["image"] = "images/" + fixture.name + ".png";
    nlohmann::ordered_json entries = nlohmann::ordered_json::array();
    for (const RawDetection& det : fixture.detections) {
        entries.push_back({{"class", det.cls},
                           {"cx", det.cx},
                           {"cy", det.cy},
                           {"w", det.w},
                           {"h", det.h},
                           {"score", det.score}});
    }
    doc["detections"] = std::move(entries);
    return doc.dump(2) + "\n";
}

std::string label_lines(const FixtureImage& fixture) {
    // Ground truth mirrors the confident detections with a small offset so
    // matching is non-trivial but stays above common overlap thresholds.
    std::string out;
    for (const RawDetection& det : fixture.detections) {
        if (det.score < 0.5) continue;
        const std::optional<ObjectClass> cls = class_from_name(det.cls);
        char line[160];
        std::snprintf(line, sizeof(line), "%d %.3f %.3f %.3f %.3f\n",
                      static_cast<int>(*cls), det.cx + 0.004, det.cy - 0.003, det.w, det.h);
        out += line;
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Regenerate the bundled end-to-end fixture"};
    std::string out_dir = "fixtures/e2e";
    std::string model_name = "fixture-vlm";
    app.add_option("--out", out_dir, "Fixture directory to (re)create");
    app.add_option("--model-name", model_name, "Model name recorded in the transcripts");
    CLI11_PARSE(app, argc, argv);

    try {
        const fs::path root(out_dir);
        fs::create_directories(root / "images");
        fs::create_directories(root / "detections");
        fs::create_directories(root / "labels");
        fs::create_directories(root / "transcripts");

        const std::vector<FixtureImage> fixtures = fixture_images();
        std::vector<std::vector<unsigned char>> image_bytes;

        Manifest manifest;
        for (std::size_t i = 0; i < fixtures.size(); ++i) {
            const FixtureImage& fixture = fixtures[i];
            image_bytes.push_back(encode_image(static_cast<int>(i)));
            write_bytes(root / "images" / (fixture.name + ".png"), image_bytes.back());
            write_file(root / "detections" / (fixture.name + ".json"), detection_json(fixture));
            write_file(root / "labels" / (fixture.name + ".txt"), label_lines(fixture));

            HazardRecord record;
            record.image_ref = "images/" + fixture.name + ".png";
            record.hazards = fixture.hazards;
            record.rationales = fixture.rationales;
            record.source = RecordSource::public_dataset;
            record.validation = ValidationState::validated;
            manifest.records.push_back(std::move(record));
        }
        save_manifest(root / "manifest.jsonl", manifest);

        // Transcripts: same detector, templates and digest computation as the
        // pipeline, so replay lookups hit by construction.
        DetectorConfig det_cfg;
        det_cfg.kind = DetectorKind::files;
        det_cfg.files_dir = (root / "detections").string();
        det_cfg.score_threshold = 0.25;
        validate_detector_config(det_cfg);
        const std::unique_ptr<Detector> detector = make_detector(det_cfg);

        const std::vector<HazardCategory> categories = default_categories();
        const PromptTemplate baseline_tmpl = builtin_template(PromptMode::baseline);
        const PromptTemplate guided_tmpl = builtin_template(PromptMode::detection_guided);

        std::size_t transcripts = 0;
        for (std::size_t i = 0; i < fixtures.size(); ++i) {
            const FixtureImage& fixture = fixtures[i];
            const std::vector<unsigned char>& bytes = image_bytes[i];
            const std::string image_ref = "images/" + fixture.name + ".png";

            const PromptBundle baseline_prompt =
                build_prompt(PromptMode::baseline, {}, categories, baseline_tmpl);
            const TimedDetections detections = detector->detect(bytes, image_ref);
            const std::vector<IdentifiedDetection> ids =
                assign_identifiers(detections.detections);
            const PromptBundle guided_prompt =
                build_prompt(PromptMode::detection_guided, ids, categories, guided_tmpl);

            const struct {
                const PromptBundle* prompt;
                const std::string* response;
            } rows[2] = {{&baseline_prompt, &fixture.baseline_response},
                         {&guided_prompt, &fixture.guided_response}};
            for (const auto& row : rows) {
                Transcript transcript;
                transcript.digest = request_digest(bytes, row.prompt->text, model_name);
                transcript.model = model_name;
                transcript.prompt = row.prompt->text;
                transcript.response = *row.response;
                transcript.latency_ms = 118.0 + 7.0 * static_cast<double>(i);
                transcript.token_usage = TokenUsage{420 + 30 * i, 60 + 5 * i};
                save_transcript(root / "transcripts", transcript);
                ++transcripts;
            }
        }

        // Embedding cache covering every token that rationale scoring can
        // look up for this fixture (responses and reference rationales).
        std::set<std::string> vocabulary;
        auto add_tokens = [&vocabulary](const std::string& text) {
            for (std::string& token : simple_tokenize(text)) {
                vocabulary.insert(std::move(token));
            }
        };
        for (const FixtureImage& fixture : fixtures) {
            add_tokens(fixture.baseline_response);
            add_tokens(fixture.guided_response);
            for (const auto& [key, text] : fixture.rationales) {
                add_tokens(key);
                add_tokens(text);
            }
        }

        HashedProvider provider(16);
        const std::vector<std::string> tokens(vocabulary.begin(), vocabulary.end());
        const TokenEmbeddings embedded = provider.embed_tokens(tokens);
        nlohmann::ordered_json cache;
        cache["dim"] = embedded.dim;
        nlohmann::ordered_json rows = nlohmann::ordered_json::object();
        for (std::size_t t = 0; t < tokens.size(); ++t) {
            const double* row = embedded.row(t);
            rows[tokens[t]] = std::vector<double>(row, row + embedded.dim);
        }
        cache["tokens"] = std::move(rows);
        write_file(root / "embeddings.json", cache.dump(2) + "\n");

        std::printf("fixture written to %s: %zu images, %zu transcripts, %zu cached tokens\n",
                    root.string().c_str(), fixtures.size(), transcripts, tokens.size());
    } catch (const std::exception& e) {
        std::fprintf(stderr, "fixturegen failed: %s\n", e.what());
        return 1;
    }
    return 0;
}
