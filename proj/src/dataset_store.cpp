#include "hazguard/dataset_store.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <random>

#include "json.hpp"

#include "hazguard/errors.hpp"
#include "hazguard/parser.hpp"

namespace hazguard {

namespace {

std::string iso_utc_now() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm utc{};
    gmtime_r(&now, &utc);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &utc);
    return buf;
}

// Invariant checks shared by loading and verdict application. Returns
// diagnostics rather than throwing so a whole file can be reported at once.
void check_record(const HazardRecord& record, const std::string& context,
                  std::vector<std::string>& diagnostics) {
    if (record.image_ref.empty()) {
        diagnostics.push_back(context + ": empty image reference");
    }
    for (const std::string& hazard : record.hazards) {
        if (!is_canonical_category(hazard)) {
            diagnostics.push_back(context + ": hazard '" + hazard +
                                  "' is not in the category vocabulary");
        }
    }
    for (const auto& [key, text] : record.rationales) {
        if (!record.hazards.contains(key)) {
            diagnostics.push_back(context + ": rationale for '" + key +
                                  "' which is not a listed hazard");
        }
        if (text.empty()) {
            diagnostics.push_back(context + ": empty rationale for '" + key + "'");
        }
    }
    if (record.validation == ValidationState::validated ||
        record.validation == ValidationState::revised) {
        for (const std::string& hazard : record.hazards) {
            if (!record.rationales.contains(hazard)) {
                diagnostics.push_back(context + ": " +
                                      std::string(validation_state_name(record.validation)) +
                                      " record lacks a rationale for '" + hazard + "'");
            }
        }
    }
}

nlohmann::ordered_json record_to_json(const HazardRecord& record) {
    nlohmann::ordered_json doc;
    doc["image"] = record.image_ref;
    nlohmann::ordered_json hazards = nlohmann::ordered_json::array();
    nlohmann::ordered_json rationales = nlohmann::ordered_json::object();
    for (std::string_view key : kCategoryKeys) {
        const std::string k(key);
        if (record.hazards.contains(k)) hazards.push_back(k);
        const auto it = record.rationales.find(k);
        if (it != record.rationales.end()) rationales[k] = it->second;
    }
    doc["hazards"] = std::move(hazards);
    doc["rationales"] = std::move(rationales);
    doc["source"] = std::string(record_source_name(record.source));
    doc["validation"] = std::string(validation_state_name(record.validation));
    if (!record.warnings.empty()) {
        doc["warnings"] = record.warnings;
    }
    if (!record.history.empty()) {
        nlohmann::ordered_json history = nlohmann::ordered_json::array();
        for (const HistoryEntry& entry : record.history) {
            nlohmann::ordered_json previous;
            nlohmann::ordered_json prev_hazards = nlohmann::ordered_json::array();
            nlohmann::ordered_json prev_rationales = nlohmann::ordered_json::object();
            for (std::string_view key : kCategoryKeys) {
                const std::string k(key);
                if (entry.previous_hazards.contains(k)) prev_hazards.push_back(k);
                const auto it = entry.previous_rationales.find(k);
                if (it != entry.previous_rationales.end()) prev_rationales[k] = it->second;
            }
            previous["hazards"] = std::move(prev_hazards);
            previous["rationales"] = std::move(prev_rationales);
            previous["validation"] = entry.previous_validation;
            history.push_back(nlohmann::ordered_json{{"annotator_id", entry.annotator_id},
                                                     {"timestamp", entry.timestamp},
                                                     {"verdict", entry.verdict},
                                                     {"previous", std::move(previous)}});
        }
        doc["history"] = std::move(history);
    }
    return doc;
}

HazardRecord record_from_json(const nlohmann::json& doc, const std::string& context,
                              std::vector<std::string>& diagnostics) {
    HazardRecord record;
    if (!doc.is_object()) {
        diagnostics.push_back(context + ": not a JSON object");
        return record;
    }
    for (const char* field : {"image", "hazards", "rationales", "source", "validation"}) {
        if (!doc.contains(field)) {
            diagnostics.push_back(context + ": missing field '" + std::string(field) + "'");
            return record;
        }
    }
    if (!doc["image"].is_string() || !doc["hazards"].is_array() ||
        !doc["rationales"].is_object() || !doc["source"].is_string() ||
        !doc["validation"].is_string()) {
        diagnostics.push_back(context + ": mistyped field");
        return record;
    }
    record.image_ref = doc["image"].get<std::string>();
    for (const nlohmann::json& hazard : doc["hazards"]) {
        if (!hazard.is_string()) {
            diagnostics.push_back(context + ": non-string hazard entry");
            continue;
        }
        if (!record.hazards.insert(hazard.get<std::string>()).second) {
            diagnostics.push_back(context + ": duplicate hazard '" + hazard.get<std::string>() +
                                  "'");
        }
    }
    for (const auto& [key, text] : doc["rationales"].items()) {
        if (!text.is_string()) {
            diagnostics.push_back(context + ": non-string rationale for '" + key + "'");
            continue;
        }
        record.rationales[key] = text.get<std::string>();
    }
    const std::optional<RecordSource> source =
        record_source_from_name(doc["source"].get<std::string>());
    if (!source.has_value()) {
        diagnostics.push_back(context + ": unknown source '" + doc["source"].get<std::string>() +
                              "'");
    } else {
        record.source = *source;
    }
    const std::optional<ValidationState> validation =
        validation_state_from_name(doc["validation"].get<std::string>());
    if (!validation.has_value()) {
        diagnostics.push_back(context + ": unknown validation state '" +
                              doc["validation"].get<std::string>() + "'");
    } else {
        record.validation = *validation;
    }
    if (doc.contains("warnings")) {
        if (!doc["warnings"].is_array()) {
            diagnostics.push_back(context + ": 'warnings' must be an array");
        } else {
            for (const nlohmann::json& w : doc["warnings"]) {
                if (w.is_string()) record.warnings.push_back(w.get<std::string>());
            }
        }
    }
    if (doc.contains("history")) {
        if (!doc["history"].is_array()) {
            diagnostics.push_back(context + ": 'history' must be an array");
        } else {
            for (const nlohmann::json& item : doc["history"]) {
                if (!item.is_object() || !item.contains("annotator_id") ||
                    !item.contains("timestamp") || !item.contains("verdict") ||
                    !item.contains("previous") || !item["previous"].is_object()) {
                    diagnostics.push_back(context + ": malformed history entry");
                    continue;
                }
                HistoryEntry entry;
                entry.annotator_id = item["annotator_id"].get<std::string>();
                entry.timestamp = item["timestamp"].get<std::string>();
                entry.verdict = item["verdict"].get<std::string>();
                const nlohmann::json& previous = item["previous"];
                if (previous.contains("hazards") && previous["hazards"].is_array()) {
                    for (const nlohmann::json& hazard : previous["hazards"]) {
                        if (hazard.is_string()) {
                            entry.previous_hazards.insert(hazard.get<std::string>());
                        }
                    }
                }
                if (previous.contains("rationales") && previous["rationales"].is_object()) {
                    for (const auto& [key, text] : previous["rationales"].items()) {
                        if (text.is_string()) {
                            entry.previous_rationales[key] = text.get<std::string>();
                        }
                    }
                }
                entry.previous_validation = previous.value("validation", "");
                record.history.push_back(std::move(entry));
            }
        }
    }
    return record;
}

}  // namespace

std::string_view record_source_name(RecordSource source) {
    switch (source) {
        case RecordSource::historical_inspection:
            return "historical_inspection";
        case RecordSource::public_dataset:
            return "public_dataset";
    }
    return "public_dataset";
}

std::optional<RecordSource> record_source_from_name(std::string_view name) {
    if (name == "historical_inspection") return RecordSource::historical_inspection;
    if (name == "public_dataset") return RecordSource::public_dataset;
    return std::nullopt;
}

std::string_view validation_state_name(ValidationState state) {
    switch (state) {
        case ValidationState::draft:
            return "draft";
        case ValidationState::validated:
            return "validated";
        case ValidationState::revised:
            return "revised";
        case ValidationState::rejected:
            return "rejected";
    }
    return "draft";
}

std::optional<ValidationState> validation_state_from_name(std::string_view name) {
    if (name == "draft") return ValidationState::draft;
    if (name == "validated") return ValidationState::validated;
    if (name == "revised") return ValidationState::revised;
    if (name == "rejected") return ValidationState::rejected;
    return std::nullopt;
}

Manifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("load_manifest: cannot open " + path.string());
    }
    Manifest manifest;
    std::vector<std::string> diagnostics;
    std::set<std::string> seen_refs;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::string context = "line " + std::to_string(lineno);
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            diagnostics.push_back(context + ": " + e.what());
            continue;
        }
        HazardRecord record = record_from_json(doc, context, diagnostics);
        check_record(record, context + " (" + record.image_ref + ")", diagnostics);
        if (!record.image_ref.empty() && !seen_refs.insert(record.image_ref).second) {
            diagnostics.push_back(context + ": duplicate image reference '" + record.image_ref +
                                  "'");
        }
        manifest.records.push_back(std::move(record));
    }
    if (!diagnostics.empty()) {
        throw SchemaError("load_manifest: " + path.string(), diagnostics);
    }
    return manifest;
}

void save_manifest(const std::filesystem::path& path, const Manifest& manifest) {
    std::vector<std::string> diagnostics;
    std::set<std::string> seen_refs;
    for (const HazardRecord& record : manifest.records) {
        check_record(record, record.image_ref, diagnostics);
        if (!record.image_ref.empty() && !seen_refs.insert(record.image_ref).second) {
            diagnostics.push_back("duplicate image reference '" + record.image_ref + "'");
        }
    }
    if (!diagnostics.empty()) {
        throw SchemaError("save_manifest: " + path.string(), diagnostics);
    }
    std::ofstream out(path);
    if (!out) {
        throw IoError("save_manifest: cannot write " + path.string());
    }
    for (const HazardRecord& record : manifest.records) {
        out << record_to_json(record).dump() << "\n";
    }
}

std::vector<HazardRecord> evaluation_records(const Manifest& manifest) {
    std::vector<HazardRecord> out;
    for (const HazardRecord& record : manifest.records) {
        if (record.validation == ValidationState::validated ||
            record.validation == ValidationState::revised) {
            out.push_back(record);
        }
    }
    return out;
}

HazardRecord* find_record(Manifest& manifest, std::string_view image_ref) {
    for (HazardRecord& record : manifest.records) {
        if (record.image_ref == image_ref) return &record;
    }
    return nullptr;
}

void validate_split_spec(const SplitSpec& spec) {
    if (spec.train_frac < 0.0 || spec.val_frac < 0.0 || spec.test_frac < 0.0) {
        throw ArgumentError("split spec: fractions must be non-negative");
    }
    const double sum = spec.train_frac + spec.val_frac + spec.test_frac;
    if (std::abs(sum - 1.0) > 1e-9) {
        throw ArgumentError("split spec: fractions sum to " + std::to_string(sum) +
                            ", expected 1");
    }
}

namespace detail {

void shuffle_indices(std::vector<std::size_t>& indices, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    for (std::size_t i = indices.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(indices[i - 1], indices[j]);
    }
}

void split_sizes(std::size_t n, const SplitSpec& spec, std::size_t* n_train, std::size_t* n_val) {
    const double dn = static_cast<double>(n);
    const long long first = std::llround(spec.train_frac * dn);
    const long long second = std::llround((spec.train_frac + spec.val_frac) * dn);
    *n_train = static_cast<std::size_t>(std::clamp(first, 0ll, static_cast<long long>(n)));
    const long long cut = std::clamp(second, static_cast<long long>(*n_train),
                                     static_cast<long long>(n));
    *n_val = static_cast<std::size_t>(cut) - *n_train;
}

}  // namespace detail

HazardRecord generate_annotation_draft(const std::string& image_ref,
                                       std::span<const unsigned char> image_bytes,
                                       const VlmClient& client,
                                       std::span<const HazardCategory> categories,
                                       const PromptTemplate& annotation_template,
                                       RecordSource source) {
    const InferenceConfig& cfg = client.config();
    if (cfg.temperature != 0.1 || cfg.max_tokens != 180) {
        throw ConfigError("generate_annotation_draft: client must use the annotation profile "
                          "(temperature 0.1, max_tokens 180)");
    }
    const PromptBundle bundle =
        build_prompt(PromptMode::baseline, {}, categories, annotation_template);
    const RawResponse response = client.complete(image_bytes, bundle);
    const HazardAssessment assessment = parse_response(response.text, default_parser_options());

    HazardRecord record;
    record.image_ref = image_ref;
    record.hazards = assessment.categories;
    record.rationales = assessment.rationales;
    record.source = source;
    record.validation = ValidationState::draft;
    record.warnings = assessment.warnings;
    return record;
}

HazardRecord record_validation_verdict(const HazardRecord& record, ValidationState verdict,
                                       const std::optional<RecordEdits>& edits,
                                       const std::string& annotator_id, std::string timestamp) {
    if (verdict == ValidationState::draft) {
        throw ArgumentError("record_validation_verdict: cannot set a record back to draft");
    }
    if (annotator_id.empty()) {
        throw ArgumentError("record_validation_verdict: annotator_id required");
    }
    const bool has_edits =
        edits.has_value() && (edits->hazards.has_value() || edits->rationales.has_value());
    if (verdict == ValidationState::revised && !has_edits) {
        throw ArgumentError("record_validation_verdict: revised verdict requires edits");
    }
    if (verdict != ValidationState::revised && has_edits) {
        throw ArgumentError("record_validation_verdict: edits are only allowed with revised");
    }

    HazardRecord updated = record;
    HistoryEntry entry;
    entry.annotator_id = annotator_id;
    entry.timestamp = timestamp.empty() ? iso_utc_now() : std::move(timestamp);
    entry.verdict = std::string(validation_state_name(verdict));
    entry.previous_hazards = record.hazards;
    entry.previous_rationales = record.rationales;
    entry.previous_validation = std::string(validation_state_name(record.validation));
    updated.history.push_back(std::move(entry));

    if (verdict == ValidationState::revised) {
        if (edits->hazards.has_value()) updated.hazards = *edits->hazards;
        if (edits->rationales.has_value()) updated.rationales = *edits->rationales;
    }
    updated.validation = verdict;

    if (verdict != ValidationState::rejected) {
        std::vector<std::string> diagnostics;
        check_record(updated, updated.image_ref, diagnostics);
        if (!diagnostics.empty()) {
            throw ArgumentError("record_validation_verdict: " + diagnostics.front());
        }
    }
    return updated;
}

}  // namespace hazguard
