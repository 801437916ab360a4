#include "hazguard/hazard_metrics.hpp"

#include <algorithm>

#include "hazguard/errors.hpp"
#include "hazguard/kernels.hpp"
#include "hazguard/prompt.hpp"

namespace hazguard {

std::map<std::string, LabelCounts> multilabel_counts(const std::set<std::string>& predicted,
                                                     const std::set<std::string>& reference) {
    std::map<std::string, LabelCounts> out;
    for (std::string_view key : kCategoryKeys) {
        const std::string k(key);
        LabelCounts counts;
        const bool p = predicted.contains(k);
        const bool r = reference.contains(k);
        if (p && r) counts.true_positives = 1;
        if (p && !r) counts.false_positives = 1;
        if (!p && r) counts.false_negatives = 1;
        out[k] = counts;
    }
    for (const std::string& label : predicted) {
        if (!is_canonical_category(label)) {
            throw ArgumentError("multilabel_counts: non-canonical predicted label '" + label +
                                "'");
        }
    }
    for (const std::string& label : reference) {
        if (!is_canonical_category(label)) {
            throw ArgumentError("multilabel_counts: non-canonical reference label '" + label +
                                "'");
        }
    }
    return out;
}

double f1(double precision, double recall) {
    const double denom = precision + recall;
    if (denom <= 0.0) return 0.0;
    return 2.0 * precision * recall / denom;
}

MultiLabelReport aggregate_hazard_metrics(std::span<const LabeledPair> pairs) {
    MultiLabelReport report;
    report.images = pairs.size();
    if (pairs.empty()) {
        report.empty_corpus = true;
        for (std::string_view key : kCategoryKeys) {
            report.per_category[std::string(key)] = CategoryScore{};
        }
        return report;
    }

    std::map<std::string, LabelCounts> totals;
    for (std::string_view key : kCategoryKeys) totals[std::string(key)] = LabelCounts{};
    for (const LabeledPair& pair : pairs) {
        for (const auto& [key, counts] : multilabel_counts(pair.predicted, pair.reference)) {
            totals[key].true_positives += counts.true_positives;
            totals[key].false_positives += counts.false_positives;
            totals[key].false_negatives += counts.false_negatives;
        }
    }

    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    double macro_p = 0.0;
    double macro_r = 0.0;
    double macro_f = 0.0;
    for (const auto& [key, counts] : totals) {
        CategoryScore score;
        score.counts = counts;
        const std::size_t p_denom = counts.true_positives + counts.false_positives;
        const std::size_t r_denom = counts.true_positives + counts.false_negatives;
        if (p_denom > 0) {
            score.precision =
                static_cast<double>(counts.true_positives) / static_cast<double>(p_denom);
        }
        if (r_denom > 0) {
            score.recall =
                static_cast<double>(counts.true_positives) / static_cast<double>(r_denom);
        }
        score.f1 = f1(score.precision, score.recall);
        report.per_category[key] = score;

        tp += counts.true_positives;
        fp += counts.false_positives;
        fn += counts.false_negatives;
        macro_p += score.precision;
        macro_r += score.recall;
        macro_f += score.f1;
    }

    if (tp + fp > 0) report.micro_precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    if (tp + fn > 0) report.micro_recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
    report.micro_f1 = f1(report.micro_precision, report.micro_recall);

    const double n = static_cast<double>(kCategoryKeys.size());
    report.macro_precision = macro_p / n;
    report.macro_recall = macro_r / n;
    report.macro_f1 = macro_f / n;
    return report;
}

namespace {

double weighted_mean(const std::vector<double>& values, const TokenEmbeddings& side,
                     const IdfTable* idf) {
    if (idf == nullptr) {
        double sum = 0.0;
        for (double v : values) sum += v;
        return sum / static_cast<double>(values.size());
    }
    double sum = 0.0;
    double weight_sum = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double w = idf->weight(side.tokens[i]);
        sum += w * values[i];
        weight_sum += w;
    }
    if (weight_sum <= 0.0) {
        // Every token is in every document; fall back to uniform weights.
        return weighted_mean(values, side, nullptr);
    }
    return sum / weight_sum;
}

}  // namespace

BertScore bertscore(const TokenEmbeddings& candidate, const TokenEmbeddings& reference,
                    const IdfTable* idf) {
    if (candidate.size() == 0 || reference.size() == 0) {
        throw ArgumentError("bertscore: both sides need at least one token");
    }
    if (candidate.dim != reference.dim) {
        throw ArgumentError("bertscore: dimension mismatch (" + std::to_string(candidate.dim) +
                            " vs " + std::to_string(reference.dim) + ")");
    }

    const std::vector<double> precision_maxima = max_similarity(
        candidate.data, candidate.size(), reference.data, reference.size(), candidate.dim);
    const std::vector<double> recall_maxima = max_similarity(
        reference.data, reference.size(), candidate.data, candidate.size(), candidate.dim);

    BertScore score;
    score.precision = weighted_mean(precision_maxima, candidate, idf);
    score.recall = weighted_mean(recall_maxima, reference, idf);
    if (score.precision + score.recall > 0.0) {
        score.f1 = 2.0 * score.precision * score.recall / (score.precision + score.recall);
    }
    return score;
}

std::string join_rationales(const std::map<std::string, std::string>& rationales) {
    std::string out;
    for (std::string_view key : kCategoryKeys) {
        const auto it = rationales.find(std::string(key));
        if (it == rationales.end() || it->second.empty()) continue;
        if (!out.empty()) out += " ";
        out += it->second;
    }
    return out;
}

RationaleScore score_rationales(std::span<const RationalePair> pairs,
                                EmbeddingProvider& provider, const IdfTable* idf) {
    RationaleScore out;
    double p_sum = 0.0;
    double r_sum = 0.0;
    double f_sum = 0.0;
    for (const RationalePair& pair : pairs) {
        if (simple_tokenize(pair.candidate).empty() || simple_tokenize(pair.reference).empty()) {
            ++out.skipped_empty;
            continue;
        }
        try {
            const TokenEmbeddings candidate = embed_text(provider, pair.candidate);
            const TokenEmbeddings reference = embed_text(provider, pair.reference);
            const BertScore score = bertscore(candidate, reference, idf);
            p_sum += score.precision;
            r_sum += score.recall;
            f_sum += score.f1;
            ++out.scored;
        } catch (const EmbeddingError& e) {
            out.errors.push_back(pair.image_ref + ": " + e.what());
        }
    }
    if (out.scored > 0) {
        out.precision = p_sum / static_cast<double>(out.scored);
        out.recall = r_sum / static_cast<double>(out.scored);
        out.f1 = f_sum / static_cast<double>(out.scored);
    }
    return out;
}

}  // namespace hazguard
