#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hazguard {

// Structured form of a model response: which hazard categories were reported
// and the per-category rationale text, if any.
struct HazardAssessment {
    std::set<std::string> categories;
    std::map<std::string, std::string> rationales;
    std::vector<std::string> warnings;
};

struct ParserOptions {
    // Strict mode rejects rationale labels that were not listed on the
    // Hazards line; lenient mode adds them with a warning.
    bool strict = false;
    std::map<std::string, std::string> synonyms;
};

std::map<std::string, std::string> default_synonyms();
std::map<std::string, std::string> load_synonyms(const std::filesystem::path& path);

// Lowercases, trims, strips wrapping punctuation, folds spaces and hyphens to
// underscores, and applies the synonym table. Returns the canonical key when
// the result is one, otherwise the folded surface form.
std::string canonicalize_label(std::string_view raw,
                               const std::map<std::string, std::string>& synonyms);

ParserOptions default_parser_options();

HazardAssessment parse_response(std::string_view text, const ParserOptions& options);

// Entity identifiers (w1, ex2, ...) mentioned in free text, deduplicated in
// first-appearance order. Matches whole tokens only.
std::vector<std::string> extract_entity_mentions(std::string_view text,
                                                 std::span<const std::string> known_ids);

// Canonical textual form of an assessment; parse_response(render_assessment(a))
// reproduces the categories and rationales.
std::string render_assessment(const HazardAssessment& assessment);

}  // namespace hazguard
