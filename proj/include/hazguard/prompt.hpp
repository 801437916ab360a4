#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hazguard/detection.hpp"

namespace hazguard {

/// Canonical hazard category keys, in canonical order.
inline constexpr std::array<std::string_view, 4> kCategoryKeys{
    "ppe_non_compliance",
    "fall_hazard",
    "caught_between_hazard",
    "unsafe_environment",
};

bool is_canonical_category(std::string_view key);

/// Index of a canonical key in kCategoryKeys, or -1.
int category_order(std::string_view key);

struct HazardCategory {
    std::string key;
    std::string definition;
};

/// The built-in definitions for the four categories.
std::vector<HazardCategory> default_categories();

/// Loads "key: definition" lines. Requires exactly the four canonical keys,
/// each once, with non-empty definitions.
std::vector<HazardCategory> load_categories(const std::filesystem::path& path);

enum class PromptMode { baseline, detection_guided };

std::string_view prompt_mode_name(PromptMode mode);

struct PromptTemplate {
    std::string version;  // e.g. "guided.v1"
    std::string body;     // text with {ENTITIES} / {CATEGORIES} / {OUTPUT_FORMAT}
};

/// Reads a template file; version is the file name without extension.
PromptTemplate load_template(const std::filesystem::path& path);

/// Built-in templates, identical to the bundled data files.
PromptTemplate builtin_template(PromptMode mode);
PromptTemplate builtin_annotation_template();

struct PromptBundle {
    PromptMode mode = PromptMode::baseline;
    std::string text;
    std::string template_version;
    int entity_count = 0;
};

/// Response-format instructions shared between prompts and the parser.
std::string output_format_instructions();

/// Sentence substituted for {ENTITIES} when nothing was detected.
inline constexpr std::string_view kNoEntitiesSentence = "No workers or machinery detected.";

/// Renders identified detections as prompt text: one clause per entity,
/// grouped by class ("Worker w1: center=0.558,0.518, w2: center=0.590,0.514"),
/// groups joined by "; ". Coordinates use 3 decimals.
std::string encode_detections(std::span<const IdentifiedDetection> ids);

/// Instantiates the template. Placeholders must match the mode: baseline
/// templates carry {CATEGORIES} and {OUTPUT_FORMAT}; detection-guided ones
/// additionally carry {ENTITIES}, each exactly once.
PromptBundle build_prompt(PromptMode mode, std::span<const IdentifiedDetection> ids,
                          std::span<const HazardCategory> categories,
                          const PromptTemplate& tmpl);

}  // namespace hazguard
