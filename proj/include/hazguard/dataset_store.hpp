#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "hazguard/prompt.hpp"
#include "hazguard/vlm_client.hpp"

namespace hazguard {

enum class RecordSource {
    historical_inspection,
    public_dataset,
};

enum class ValidationState {
    draft,
    validated,
    revised,
    rejected,
};

std::string_view record_source_name(RecordSource source);
std::optional<RecordSource> record_source_from_name(std::string_view name);
std::string_view validation_state_name(ValidationState state);
std::optional<ValidationState> validation_state_from_name(std::string_view name);

struct HistoryEntry {
    std::string annotator_id;
    std::string timestamp;
    std::string verdict;
    std::set<std::string> previous_hazards;
    std::map<std::string, std::string> previous_rationales;
    std::string previous_validation;
};

struct HazardRecord {
    std::string image_ref;
    std::set<std::string> hazards;
    std::map<std::string, std::string> rationales;
    RecordSource source = RecordSource::public_dataset;
    ValidationState validation = ValidationState::draft;
    std::vector<std::string> warnings;
    std::vector<HistoryEntry> history;
};

struct Manifest {
    std::string version = "1";
    std::vector<HazardRecord> records;
};

// One JSON record per line. Violations across the whole file are collected
// into a single SchemaError with line-numbered diagnostics.
Manifest load_manifest(const std::filesystem::path& path);
void save_manifest(const std::filesystem::path& path, const Manifest& manifest);

// Records usable as ground truth: validated or revised only.
std::vector<HazardRecord> evaluation_records(const Manifest& manifest);

HazardRecord* find_record(Manifest& manifest, std::string_view image_ref);

struct SplitSpec {
    double train_frac = 0.7;
    double val_frac = 0.2;
    double test_frac = 0.1;
    std::uint64_t seed = 0;
};

void validate_split_spec(const SplitSpec& spec);

namespace detail {
// Fisher-Yates with an explicit generator so splits are stable across
// standard libraries.
void shuffle_indices(std::vector<std::size_t>& indices, std::uint64_t seed);
void split_sizes(std::size_t n, const SplitSpec& spec, std::size_t* n_train, std::size_t* n_val);
}  // namespace detail

template <typename T>
struct SplitResult {
    std::vector<T> train;
    std::vector<T> val;
    std::vector<T> test;
};

template <typename T>
SplitResult<T> split_dataset(const std::vector<T>& items, const SplitSpec& spec) {
    validate_split_spec(spec);
    std::vector<std::size_t> indices(items.size());
    for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = i;
    detail::shuffle_indices(indices, spec.seed);

    std::size_t n_train = 0;
    std::size_t n_val = 0;
    detail::split_sizes(items.size(), spec, &n_train, &n_val);

    SplitResult<T> out;
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (i < n_train) {
            out.train.push_back(items[indices[i]]);
        } else if (i < n_train + n_val) {
            out.val.push_back(items[indices[i]]);
        } else {
            out.test.push_back(items[indices[i]]);
        }
    }
    return out;
}

// Submits the annotation prompt for one image and stores the parsed result as
// a draft record. The client must carry the annotation decoding profile
// (temperature 0.1, max_tokens 180).
HazardRecord generate_annotation_draft(const std::string& image_ref,
                                       std::span<const unsigned char> image_bytes,
                                       const VlmClient& client,
                                       std::span<const HazardCategory> categories,
                                       const PromptTemplate& annotation_template,
                                       RecordSource source = RecordSource::public_dataset);

struct RecordEdits {
    std::optional<std::set<std::string>> hazards;
    std::optional<std::map<std::string, std::string>> rationales;
};

// Applies a human verdict, preserving the previous fields in the record's
// history. A revised verdict requires edits; validated and rejected forbid
// them. Empty timestamp means "now" (UTC, ISO 8601).
HazardRecord record_validation_verdict(const HazardRecord& record, ValidationState verdict,
                                       const std::optional<RecordEdits>& edits,
                                       const std::string& annotator_id,
                                       std::string timestamp = "");

}  // namespace hazguard
