#include "hazguard/parser.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "hazguard/errors.hpp"
#include "hazguard/prompt.hpp"

namespace hazguard {

namespace {

// Labels a model may use to say "no hazards"; only honored when they are the
// sole content of the Hazards line.
const std::set<std::string>& negative_labels() {
    static const std::set<std::string> kNegative = {
        "none", "no_hazard", "no_hazards", "none_identified", "no_hazards_identified",
    };
    return kNegative;
}

bool is_ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_';
}

std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string trim(std::string_view s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

bool tag_name_in(std::string_view name, std::initializer_list<std::string_view> names) {
    for (std::string_view candidate : names) {
        if (name == candidate) return true;
    }
    return false;
}

// Replaces block-level HTML-ish tags with newlines and drops any other tags,
// so decorated responses reduce to the plain-text grammar.
std::string strip_markup(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        if (text[i] != '<') {
            out += text[i];
            ++i;
            continue;
        }
        const std::size_t close = text.find('>', i);
        if (close == std::string_view::npos) {
            out += text[i];
            ++i;
            continue;
        }
        std::string_view inner = text.substr(i + 1, close - i - 1);
        if (!inner.empty() && inner.front() == '/') inner.remove_prefix(1);
        std::size_t name_end = 0;
        while (name_end < inner.size() &&
               std::isalnum(static_cast<unsigned char>(inner[name_end])) != 0) {
            ++name_end;
        }
        const std::string name = to_lower(inner.substr(0, name_end));
        if (name.empty()) {
            // Not a tag (e.g. "a < b"); keep the literal character.
            out += text[i];
            ++i;
            continue;
        }
        if (tag_name_in(name, {"p", "ul", "ol", "li", "div", "br"})) {
            out += '\n';
        }
        i = close + 1;
    }
    return out;
}

// True when the line is a section header such as "Hazards:" (tolerating
// leading quote/emphasis characters); on match, rest holds the remainder
// after the colon.
bool match_header(std::string_view line, std::string_view word, std::string* rest) {
    std::size_t i = 0;
    while (i < line.size() &&
           (std::isspace(static_cast<unsigned char>(line[i])) != 0 || line[i] == '>' ||
            line[i] == '#' || line[i] == '*' || line[i] == '_')) {
        ++i;
    }
    if (line.size() - i < word.size()) return false;
    for (std::size_t j = 0; j < word.size(); ++j) {
        if (std::tolower(static_cast<unsigned char>(line[i + j])) != word[j]) return false;
    }
    i += word.size();
    while (i < line.size() &&
           (std::isspace(static_cast<unsigned char>(line[i])) != 0 || line[i] == '*' ||
            line[i] == '_')) {
        ++i;
    }
    if (i >= line.size() || line[i] != ':') return false;
    if (rest != nullptr) *rest = std::string(line.substr(i + 1));
    return true;
}

// True when the line starts a rationale bullet; on match fills label (text
// before the colon) and rest (text after it). The leading dash is optional so
// bare "label: text" lines under Explanation: still parse.
bool match_bullet(std::string_view line, std::string* label, std::string* rest) {
    std::size_t i = line.find_first_not_of(" \t");
    if (i == std::string_view::npos) return false;
    if (line[i] == '-' || line[i] == '*' || line.substr(i).starts_with("\xe2\x80\xa2")) {
        i += line[i] == '-' || line[i] == '*' ? 1 : 3;
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    }
    const std::size_t colon = line.find(':', i);
    if (colon == std::string_view::npos || colon == i) return false;
    if (colon - i > 64) return false;
    *label = std::string(line.substr(i, colon - i));
    *rest = std::string(line.substr(colon + 1));
    return true;
}

std::vector<std::string> split_labels(std::string_view line) {
    std::vector<std::string> out;
    std::string current;
    for (char c : line) {
        if (c == ',' || c == ';') {
            if (!trim(current).empty()) out.push_back(trim(current));
            current.clear();
        } else {
            current += c;
        }
    }
    if (!trim(current).empty()) out.push_back(trim(current));
    return out;
}

// Splits a line whenever a new category bullet starts mid-line ("... vest.
// -fall_hazard: ..."): a dash or star after whitespace whose pre-colon text
// canonicalizes to a category key. Prose hyphens never qualify.
std::vector<std::string> split_bullet_segments(const std::string& line,
                                               const std::map<std::string, std::string>& synonyms) {
    std::vector<std::size_t> boundaries;
    for (std::size_t p = 0; p < line.size(); ++p) {
        if (line[p] != '-' && line[p] != '*') continue;
        if (p > 0 && std::isspace(static_cast<unsigned char>(line[p - 1])) == 0) continue;
        const std::size_t colon = line.find(':', p + 1);
        if (colon == std::string::npos || colon == p + 1 || colon - p - 1 > 64) continue;
        const std::string key =
            canonicalize_label(std::string_view(line).substr(p + 1, colon - p - 1), synonyms);
        if (is_canonical_category(key)) {
            boundaries.push_back(p);
        }
    }
    if (boundaries.empty()) {
        return {line};
    }
    std::vector<std::string> segments;
    if (boundaries.front() > 0) {
        segments.push_back(line.substr(0, boundaries.front()));
    }
    for (std::size_t b = 0; b < boundaries.size(); ++b) {
        const std::size_t end = b + 1 < boundaries.size() ? boundaries[b + 1] : line.size();
        segments.push_back(line.substr(boundaries[b], end - boundaries[b]));
    }
    return segments;
}

}  // namespace

std::map<std::string, std::string> default_synonyms() {
    return {
        {"ppe", "ppe_non_compliance"},
        {"ppe_violation", "ppe_non_compliance"},
        {"ppe_noncompliance", "ppe_non_compliance"},
        {"missing_ppe", "ppe_non_compliance"},
        {"no_ppe", "ppe_non_compliance"},
        {"ppe_non_compliant", "ppe_non_compliance"},
        {"personal_protective_equipment", "ppe_non_compliance"},
        {"fall", "fall_hazard"},
        {"falling_hazard", "fall_hazard"},
        {"fall_risk", "fall_hazard"},
        {"fall_hazards", "fall_hazard"},
        {"caught_between", "caught_between_hazard"},
        {"caught_in_between", "caught_between_hazard"},
        {"caught_in_between_hazard", "caught_between_hazard"},
        {"struck_by", "caught_between_hazard"},
        {"struck_by_hazard", "caught_between_hazard"},
        {"crush_hazard", "caught_between_hazard"},
        {"caught_between_hazards", "caught_between_hazard"},
        {"unsafe_conditions", "unsafe_environment"},
        {"unsafe_site_conditions", "unsafe_environment"},
        {"environmental_hazard", "unsafe_environment"},
        {"unsafe_environments", "unsafe_environment"},
        {"housekeeping", "unsafe_environment"},
    };
}

std::map<std::string, std::string> load_synonyms(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("load_synonyms: cannot open " + path.string());
    }
    std::map<std::string, std::string> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        const std::size_t arrow = stripped.find("->");
        if (arrow == std::string::npos) {
            throw SchemaError("load_synonyms: " + path.string(),
                              {"line " + std::to_string(lineno) + ": expected 'surface -> key'"});
        }
        const std::string surface =
            canonicalize_label(trim(stripped.substr(0, arrow)), {});
        const std::string key = trim(stripped.substr(arrow + 2));
        if (!is_canonical_category(key)) {
            throw SchemaError("load_synonyms: " + path.string(),
                              {"line " + std::to_string(lineno) + ": target '" + key +
                               "' is not a category key"});
        }
        if (surface.empty()) {
            throw SchemaError("load_synonyms: " + path.string(),
                              {"line " + std::to_string(lineno) + ": empty surface form"});
        }
        out[surface] = key;
    }
    return out;
}

std::string canonicalize_label(std::string_view raw,
                               const std::map<std::string, std::string>& synonyms) {
    std::string folded;
    folded.reserve(raw.size());
    for (char ch : to_lower(trim(raw))) {
        if (ch == ' ' || ch == '\t' || ch == '-') {
            if (!folded.empty() && folded.back() != '_') folded += '_';
        } else if (is_ident_char(ch)) {
            folded += ch;
        }
        // Other punctuation (quotes, parens, trailing periods) is dropped.
    }
    while (!folded.empty() && folded.back() == '_') folded.pop_back();
    while (!folded.empty() && folded.front() == '_') folded.erase(folded.begin());
    const auto it = synonyms.find(folded);
    if (it != synonyms.end()) return it->second;
    return folded;
}

ParserOptions default_parser_options() {
    ParserOptions options;
    options.synonyms = default_synonyms();
    return options;
}

HazardAssessment parse_response(std::string_view text, const ParserOptions& options) {
    HazardAssessment out;
    const std::string plain = strip_markup(text);

    std::vector<std::string> lines;
    {
        std::string current;
        for (char c : plain) {
            if (c == '\n') {
                lines.push_back(current);
                current.clear();
            } else if (c != '\r') {
                current += c;
            }
        }
        lines.push_back(current);
    }

    bool saw_hazards_header = false;
    bool in_explanation = false;
    std::string pending_label;

    auto flush_rationale = [&](const std::string& label, const std::string& text_piece) {
        std::string& slot = out.rationales[label];
        if (!slot.empty() && !text_piece.empty()) slot += " ";
        slot += text_piece;
    };

    for (const std::string& line : lines) {
        std::string rest;
        if (!saw_hazards_header && match_header(line, "hazards", &rest)) {
            saw_hazards_header = true;
            const std::vector<std::string> labels = split_labels(rest);
            std::vector<std::string> canonical;
            for (const std::string& label : labels) {
                canonical.push_back(canonicalize_label(label, options.synonyms));
            }
            if (canonical.size() == 1 && negative_labels().contains(canonical[0])) {
                continue;
            }
            for (std::size_t i = 0; i < canonical.size(); ++i) {
                if (is_canonical_category(canonical[i])) {
                    out.categories.insert(canonical[i]);
                } else if (negative_labels().contains(canonical[i])) {
                    out.warnings.push_back("negative_label_mixed_with_hazards: '" + labels[i] +
                                           "'");
                } else {
                    out.warnings.push_back("unknown_label: '" + labels[i] + "'");
                }
            }
            continue;
        }
        std::string content = line;
        if (match_header(line, "explanation", &rest)) {
            in_explanation = true;
            pending_label.clear();
            if (trim(rest).empty()) continue;
            content = rest;  // header and first bullet share a line
        }
        if (!in_explanation) continue;

        for (const std::string& segment : split_bullet_segments(content, options.synonyms)) {
            std::string label;
            if (match_bullet(segment, &label, &rest)) {
                const std::string key = canonicalize_label(label, options.synonyms);
                if (is_canonical_category(key)) {
                    if (!out.categories.contains(key)) {
                        if (options.strict) {
                            out.warnings.push_back("rationale_for_unreported_label: '" + label +
                                                   "'");
                            pending_label.clear();
                            continue;
                        }
                        out.categories.insert(key);
                        out.warnings.push_back("rationale_only_label: '" + label + "'");
                    }
                    pending_label = key;
                    flush_rationale(key, trim(rest));
                } else {
                    out.warnings.push_back("unknown_rationale_label: '" + label + "'");
                    pending_label.clear();
                }
                continue;
            }
            // Continuation of the previous bullet's rationale.
            const std::string continuation = trim(segment);
            if (!continuation.empty() && !pending_label.empty()) {
                flush_rationale(pending_label, continuation);
            }
        }
    }

    if (!saw_hazards_header) {
        out.warnings.push_back("missing_header");
        out.categories.clear();
        out.rationales.clear();
        return out;
    }

    // Rationales only make sense for reported categories.
    for (auto it = out.rationales.begin(); it != out.rationales.end();) {
        if (!out.categories.contains(it->first) || trim(it->second).empty()) {
            it = out.rationales.erase(it);
        } else {
            ++it;
        }
    }
    return out;
}

std::vector<std::string> extract_entity_mentions(std::string_view text,
                                                 std::span<const std::string> known_ids) {
    std::set<std::string_view> wanted(known_ids.begin(), known_ids.end());
    std::vector<std::string> out;
    std::set<std::string> seen;
    std::size_t i = 0;
    while (i < text.size()) {
        if (!is_ident_char(text[i])) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < text.size() && is_ident_char(text[j])) ++j;
        const std::string token = to_lower(text.substr(i, j - i));
        if (wanted.contains(token) && seen.insert(token).second) {
            out.push_back(token);
        }
        i = j;
    }
    return out;
}

std::string render_assessment(const HazardAssessment& assessment) {
    std::string out = "Hazards: ";
    if (assessment.categories.empty()) {
        out += "none";
    } else {
        bool first = true;
        for (std::string_view key : kCategoryKeys) {
            if (!assessment.categories.contains(std::string(key))) continue;
            if (!first) out += ", ";
            out += key;
            first = false;
        }
    }
    out += "\n";

    bool any_rationale = false;
    for (std::string_view key : kCategoryKeys) {
        const auto it = assessment.rationales.find(std::string(key));
        if (it == assessment.rationales.end()) continue;
        if (!assessment.categories.contains(std::string(key))) continue;
        if (!any_rationale) {
            out += "Explanation:\n";
            any_rationale = true;
        }
        out += "-" + it->first + ": " + it->second + "\n";
    }
    return out;
}

}  // namespace hazguard
