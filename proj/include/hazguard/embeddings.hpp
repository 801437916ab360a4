#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace hazguard {

// Token embeddings as a flat row-major matrix; rows are L2-normalized.
struct TokenEmbeddings {
    std::vector<std::string> tokens;
    std::size_t dim = 0;
    std::vector<double> data;

    std::size_t size() const { return tokens.size(); }
    const double* row(std::size_t i) const { return data.data() + i * dim; }
};

// Lowercased alphanumeric runs; entity identifiers like "w1" stay whole.
std::vector<std::string> simple_tokenize(std::string_view text);

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual TokenEmbeddings embed_tokens(const std::vector<std::string>& tokens) = 0;
    virtual std::string id() const = 0;
};

// Tokenizes, then embeds. Throws ArgumentError when the text has no tokens.
TokenEmbeddings embed_text(EmbeddingProvider& provider, std::string_view text);

// Embeddings read from a JSON file {"dim": D, "tokens": {token: [..]}}.
// Unknown tokens raise EmbeddingError; vectors are normalized on load.
class FileCacheProvider : public EmbeddingProvider {
public:
    explicit FileCacheProvider(const std::filesystem::path& path);
    TokenEmbeddings embed_tokens(const std::vector<std::string>& tokens) override;
    std::string id() const override;

private:
    std::filesystem::path path_;
    std::size_t dim_ = 0;
    std::vector<std::string> vocab_;
    std::vector<double> vectors_;
    TokenEmbeddings lookup(const std::vector<std::string>& tokens) const;
};

// Deterministic pseudo-embeddings seeded from the token bytes. No semantic
// content; for benchmarks and smoke runs where only shape matters.
class HashedProvider : public EmbeddingProvider {
public:
    explicit HashedProvider(std::size_t dim = 64);
    TokenEmbeddings embed_tokens(const std::vector<std::string>& tokens) override;
    std::string id() const override;

private:
    std::size_t dim_;
};

// POSTs {"text": ...} to <base_url>/embed_tokens and expects
// {"tokens": [...], "vectors": [[...], ...]}.
class HttpEmbeddingProvider : public EmbeddingProvider {
public:
    explicit HttpEmbeddingProvider(std::string base_url, int timeout_seconds = 30);
    TokenEmbeddings embed_tokens(const std::vector<std::string>& tokens) override;
    std::string id() const override;

private:
    std::string base_url_;
    int timeout_seconds_;
};

// "file:<path>", "endpoint:<url>", or "hashed[:<dim>]".
std::unique_ptr<EmbeddingProvider> make_embedding_provider(std::string_view config);

// Document-frequency table for optional idf weighting of similarity scores.
struct IdfTable {
    std::size_t documents = 0;
    std::vector<std::pair<std::string, std::size_t>> frequencies;

    double weight(std::string_view token) const;
};

IdfTable build_idf_table(const std::vector<std::vector<std::string>>& tokenized_documents);

}  // namespace hazguard
