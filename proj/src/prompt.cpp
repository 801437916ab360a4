#include "hazguard/prompt.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "hazguard/errors.hpp"

namespace hazguard {

namespace {

constexpr std::string_view kEntitiesPh = "{ENTITIES}";
constexpr std::string_view kCategoriesPh = "{CATEGORIES}";
constexpr std::string_view kOutputFormatPh = "{OUTPUT_FORMAT}";

constexpr std::string_view kBaselineBody =
    "You are a construction site safety inspector reviewing a single site photo.\n"
    "\n"
    "Assess the scene for safety hazards around workers, using only these hazard categories:\n"
    "{CATEGORIES}\n"
    "\n"
    "{OUTPUT_FORMAT}\n";

constexpr std::string_view kGuidedBody =
    "You are a construction site safety inspector reviewing a single site photo.\n"
    "\n"
    "Detected entities, with normalized center coordinates (x,y from the top-left corner):\n"
    "{ENTITIES}\n"
    "Refer to entities by their identifiers when explaining a hazard.\n"
    "\n"
    "Assess the scene for safety hazards around workers, using only these hazard categories:\n"
    "{CATEGORIES}\n"
    "\n"
    "{OUTPUT_FORMAT}\n";

constexpr std::string_view kAnnotationBody =
    "You are a construction safety expert preparing ground-truth annotations for a site photo.\n"
    "\n"
    "Label every hazard visible in the image, using only these hazard categories:\n"
    "{CATEGORIES}\n"
    "\n"
    "Keep each rationale short, specific, and grounded in what is visible.\n"
    "\n"
    "{OUTPUT_FORMAT}\n";

std::size_t count_occurrences(std::string_view haystack, std::string_view needle) {
    std::size_t count = 0;
    std::size_t pos = haystack.find(needle);
    while (pos != std::string_view::npos) {
        ++count;
        pos = haystack.find(needle, pos + needle.size());
    }
    return count;
}

std::string replace_once(std::string text, std::string_view placeholder, std::string_view value) {
    const std::size_t pos = text.find(placeholder);
    if (pos != std::string::npos) {
        text.replace(pos, placeholder.size(), value);
    }
    return text;
}

std::string format_coord(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return buf;
}

std::string trim(std::string_view s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

}  // namespace

bool is_canonical_category(std::string_view key) {
    return category_order(key) >= 0;
}

int category_order(std::string_view key) {
    for (std::size_t i = 0; i < kCategoryKeys.size(); ++i) {
        if (kCategoryKeys[i] == key) return static_cast<int>(i);
    }
    return -1;
}

std::vector<HazardCategory> default_categories() {
    return {
        {"ppe_non_compliance",
         "Look for workers not wearing appropriate personal protective equipment."},
        {"fall_hazard",
         "Look for workers near risks of falling, including at elevated work areas, near open "
         "excavations, on temporary structures (ladders, lifts, scaffolding) without safety "
         "harness."},
        {"caught_between_hazard",
         "Risks of workers being struck by, caught, crushed, or pinned by or between machinery, "
         "moving objects, structures, confined spaces, or trenches."},
        {"unsafe_environment",
         "Look for unsafe site conditions such as exposed rebar, uneven terrain, debris or "
         "waste, open electrical wires, standing water, poor lighting etc."},
    };
}

std::vector<HazardCategory> load_categories(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("load_categories: cannot open " + path.string());
    }
    std::map<std::string, std::string> seen;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        const std::size_t colon = stripped.find(':');
        if (colon == std::string::npos) {
            throw SchemaError("load_categories: " + path.string(),
                              {"line " + std::to_string(lineno) + ": expected 'key: definition'"});
        }
        const std::string key = trim(stripped.substr(0, colon));
        const std::string def = trim(stripped.substr(colon + 1));
        if (!is_canonical_category(key)) {
            throw SchemaError("load_categories: " + path.string(),
                              {"line " + std::to_string(lineno) + ": unknown category key '" +
                               key + "'"});
        }
        if (def.empty()) {
            throw SchemaError("load_categories: " + path.string(),
                              {"line " + std::to_string(lineno) + ": empty definition for '" +
                               key + "'"});
        }
        if (!seen.emplace(key, def).second) {
            throw SchemaError("load_categories: " + path.string(),
                              {"line " + std::to_string(lineno) + ": duplicate key '" + key + "'"});
        }
    }
    if (seen.size() != kCategoryKeys.size()) {
        std::vector<std::string> missing;
        for (std::string_view key : kCategoryKeys) {
            if (!seen.contains(std::string(key))) {
                missing.push_back("missing category '" + std::string(key) + "'");
            }
        }
        throw SchemaError("load_categories: " + path.string(), missing);
    }
    std::vector<HazardCategory> out;
    for (std::string_view key : kCategoryKeys) {
        out.push_back({std::string(key), seen.at(std::string(key))});
    }
    return out;
}

std::string_view prompt_mode_name(PromptMode mode) {
    return mode == PromptMode::baseline ? "baseline" : "detection_guided";
}

PromptTemplate load_template(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("load_template: cannot open " + path.string());
    }
    std::ostringstream body;
    body << in.rdbuf();
    return PromptTemplate{path.stem().string(), body.str()};
}

PromptTemplate builtin_template(PromptMode mode) {
    if (mode == PromptMode::baseline) {
        return PromptTemplate{"baseline.v1", std::string(kBaselineBody)};
    }
    return PromptTemplate{"guided.v1", std::string(kGuidedBody)};
}

PromptTemplate builtin_annotation_template() {
    return PromptTemplate{"annotation.v1", std::string(kAnnotationBody)};
}

std::string output_format_instructions() {
    return "Respond in exactly this format, with no extra commentary:\n"
           "Hazards: <comma-separated category keys from the list above, or none>\n"
           "Explanation:\n"
           "-<category_key>: <one or two sentences explaining the hazard>\n"
           "Repeat the explanation line once per reported hazard.";
}

std::string encode_detections(std::span<const IdentifiedDetection> ids) {
    if (ids.empty()) {
        return std::string(kNoEntitiesSentence);
    }
    // Group clauses by class, preserving the identifier order produced by
    // assign_identifiers (class order, then index).
    std::vector<std::pair<ObjectClass, std::vector<const IdentifiedDetection*>>> groups;
    for (const IdentifiedDetection& id : ids) {
        if (groups.empty() || groups.back().first != id.detection.cls) {
            groups.push_back({id.detection.cls, {}});
        }
        groups.back().second.push_back(&id);
    }

    std::string out;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        if (g > 0) out += "; ";
        out += class_name(groups[g].first);
        for (std::size_t i = 0; i < groups[g].second.size(); ++i) {
            const IdentifiedDetection& id = *groups[g].second[i];
            if (i > 0) out += ",";
            out += " " + id.id + ": center=" + format_coord(id.detection.box.cx) + "," +
                   format_coord(id.detection.box.cy);
        }
    }
    return out;
}

PromptBundle build_prompt(PromptMode mode, std::span<const IdentifiedDetection> ids,
                          std::span<const HazardCategory> categories,
                          const PromptTemplate& tmpl) {
    const std::size_t n_entities = count_occurrences(tmpl.body, kEntitiesPh);
    const std::size_t n_categories = count_occurrences(tmpl.body, kCategoriesPh);
    const std::size_t n_format = count_occurrences(tmpl.body, kOutputFormatPh);

    if (n_categories != 1 || n_format != 1) {
        throw ConfigError("build_prompt: template '" + tmpl.version +
                          "' must contain {CATEGORIES} and {OUTPUT_FORMAT} exactly once");
    }
    if (mode == PromptMode::baseline && n_entities != 0) {
        throw ConfigError("build_prompt: baseline template '" + tmpl.version +
                          "' must not contain {ENTITIES}");
    }
    if (mode == PromptMode::detection_guided && n_entities != 1) {
        throw ConfigError("build_prompt: detection-guided template '" + tmpl.version +
                          "' must contain {ENTITIES} exactly once");
    }

    std::set<std::string_view> keys;
    std::string category_text;
    for (std::size_t i = 0; i < categories.size(); ++i) {
        if (!is_canonical_category(categories[i].key)) {
            throw ConfigError("build_prompt: non-canonical category key '" + categories[i].key +
                              "'");
        }
        if (!keys.insert(categories[i].key).second) {
            throw ConfigError("build_prompt: duplicate category key '" + categories[i].key + "'");
        }
        if (i > 0) category_text += "\n";
        category_text += "- " + categories[i].key + ": " + categories[i].definition;
    }
    if (keys.size() != kCategoryKeys.size()) {
        throw ConfigError("build_prompt: expected all four hazard categories");
    }

    std::string text = tmpl.body;
    if (mode == PromptMode::detection_guided) {
        text = replace_once(std::move(text), kEntitiesPh, encode_detections(ids));
    }
    text = replace_once(std::move(text), kCategoriesPh, category_text);
    text = replace_once(std::move(text), kOutputFormatPh, output_format_instructions());

    PromptBundle bundle;
    bundle.mode = mode;
    bundle.text = std::move(text);
    bundle.template_version = tmpl.version;
    bundle.entity_count = mode == PromptMode::detection_guided ? static_cast<int>(ids.size()) : 0;
    return bundle;
}

}  // namespace hazguard
