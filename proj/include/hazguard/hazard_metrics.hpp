#pragma once

#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "hazguard/embeddings.hpp"

namespace hazguard {

struct LabelCounts {
    std::size_t true_positives = 0;
    std::size_t false_positives = 0;
    std::size_t false_negatives = 0;
};

// Per-category counts for one image; every canonical category gets an entry.
std::map<std::string, LabelCounts> multilabel_counts(const std::set<std::string>& predicted,
                                                     const std::set<std::string>& reference);

// Harmonic mean; zero when both inputs are zero.
double f1(double precision, double recall);

struct CategoryScore {
    LabelCounts counts;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct LabeledPair {
    std::set<std::string> predicted;
    std::set<std::string> reference;
};

struct MultiLabelReport {
    std::map<std::string, CategoryScore> per_category;
    double micro_precision = 0.0;
    double micro_recall = 0.0;
    double micro_f1 = 0.0;
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double macro_f1 = 0.0;
    std::size_t images = 0;
    bool empty_corpus = false;
};

// Micro scores pool counts across categories and images; macro scores average
// the per-category values over the four canonical categories.
MultiLabelReport aggregate_hazard_metrics(std::span<const LabeledPair> pairs);

struct BertScore {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

// Greedy token-level similarity: each candidate token takes its best match in
// the reference (precision side) and vice versa (recall side). Rows must be
// unit vectors, which TokenEmbeddings providers guarantee. Optional idf table
// replaces the uniform token weighting.
BertScore bertscore(const TokenEmbeddings& candidate, const TokenEmbeddings& reference,
                    const IdfTable* idf = nullptr);

// Rationale texts joined " " in canonical category order.
std::string join_rationales(const std::map<std::string, std::string>& rationales);

struct RationalePair {
    std::string image_ref;
    std::string candidate;
    std::string reference;
};

struct RationaleScore {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t scored = 0;
    std::size_t skipped_empty = 0;
    std::vector<std::string> errors;
};

// Corpus means over image-level scores; pairs with an empty side are counted
// in skipped_empty, embedding failures are recorded per image and skipped.
RationaleScore score_rationales(std::span<const RationalePair> pairs,
                                EmbeddingProvider& provider, const IdfTable* idf = nullptr);

}  // namespace hazguard
