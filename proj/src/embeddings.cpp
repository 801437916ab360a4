#include "hazguard/embeddings.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <random>
#include <set>

#include "httplib.h"
#include "json.hpp"

#include "hazguard/errors.hpp"

namespace hazguard {

namespace {

void normalize_rows(std::vector<double>& data, std::size_t rows, std::size_t dim,
                    const std::vector<std::string>& tokens, const std::string& source) {
    for (std::size_t i = 0; i < rows; ++i) {
        double norm_sq = 0.0;
        for (std::size_t k = 0; k < dim; ++k) {
            const double v = data[i * dim + k];
            norm_sq += v * v;
        }
        if (!(norm_sq > 0.0) || !std::isfinite(norm_sq)) {
            throw EmbeddingError(source + ": token '" + tokens[i] +
                                 "' has a zero or non-finite vector");
        }
        const double inv = 1.0 / std::sqrt(norm_sq);
        for (std::size_t k = 0; k < dim; ++k) data[i * dim + k] *= inv;
    }
}

}  // namespace

std::vector<std::string> simple_tokenize(std::string_view text) {
    std::vector<std::string> out;
    std::string current;
    for (char c : text) {
        if (std::isalnum(static_cast<unsigned char>(c)) != 0) {
            current += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        } else if (!current.empty()) {
            out.push_back(current);
            current.clear();
        }
    }
    if (!current.empty()) out.push_back(current);
    return out;
}

TokenEmbeddings embed_text(EmbeddingProvider& provider, std::string_view text) {
    const std::vector<std::string> tokens = simple_tokenize(text);
    if (tokens.empty()) {
        throw ArgumentError("embed_text: no tokens in text");
    }
    return provider.embed_tokens(tokens);
}

FileCacheProvider::FileCacheProvider(const std::filesystem::path& path) : path_(path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("FileCacheProvider: cannot open " + path.string());
    }
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError("FileCacheProvider: " + path.string(), {e.what()});
    }
    if (!doc.is_object() || !doc.contains("dim") || !doc.contains("tokens") ||
        !doc["dim"].is_number_unsigned() || !doc["tokens"].is_object()) {
        throw SchemaError("FileCacheProvider: " + path.string(),
                          {"expected {\"dim\": <int>, \"tokens\": {token: [..]}}"});
    }
    dim_ = doc["dim"].get<std::size_t>();
    if (dim_ == 0) {
        throw SchemaError("FileCacheProvider: " + path.string(), {"dim must be positive"});
    }
    for (const auto& [token, vec] : doc["tokens"].items()) {
        if (!vec.is_array() || vec.size() != dim_) {
            throw SchemaError("FileCacheProvider: " + path.string(),
                              {"token '" + token + "' has " + std::to_string(vec.size()) +
                               " components, expected " + std::to_string(dim_)});
        }
        vocab_.push_back(token);
        for (const nlohmann::json& v : vec) {
            if (!v.is_number()) {
                throw SchemaError("FileCacheProvider: " + path.string(),
                                  {"token '" + token + "' has a non-numeric component"});
            }
            vectors_.push_back(v.get<double>());
        }
    }
    normalize_rows(vectors_, vocab_.size(), dim_, vocab_, "FileCacheProvider " + path.string());
}

TokenEmbeddings FileCacheProvider::lookup(const std::vector<std::string>& tokens) const {
    TokenEmbeddings out;
    out.tokens = tokens;
    out.dim = dim_;
    out.data.reserve(tokens.size() * dim_);
    for (const std::string& token : tokens) {
        const auto it = std::find(vocab_.begin(), vocab_.end(), token);
        if (it == vocab_.end()) {
            throw EmbeddingError("FileCacheProvider " + path_.string() +
                                 ": no embedding for token '" + token + "'");
        }
        const std::size_t row = static_cast<std::size_t>(it - vocab_.begin());
        out.data.insert(out.data.end(), vectors_.begin() + row * dim_,
                        vectors_.begin() + (row + 1) * dim_);
    }
    return out;
}

TokenEmbeddings FileCacheProvider::embed_tokens(const std::vector<std::string>& tokens) {
    return lookup(tokens);
}

std::string FileCacheProvider::id() const {
    return "file:" + path_.string();
}

HashedProvider::HashedProvider(std::size_t dim) : dim_(dim) {
    if (dim_ == 0) {
        throw ArgumentError("HashedProvider: dim must be positive");
    }
}

TokenEmbeddings HashedProvider::embed_tokens(const std::vector<std::string>& tokens) {
    TokenEmbeddings out;
    out.tokens = tokens;
    out.dim = dim_;
    out.data.reserve(tokens.size() * dim_);
    for (const std::string& token : tokens) {
        // FNV-1a over the token bytes seeds a per-token generator, so equal
        // tokens always get equal vectors.
        std::uint64_t seed = 1469598103934665603ull;
        for (unsigned char c : token) {
            seed ^= c;
            seed *= 1099511628211ull;
        }
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> gauss(0.0, 1.0);
        for (std::size_t k = 0; k < dim_; ++k) out.data.push_back(gauss(rng));
    }
    normalize_rows(out.data, tokens.size(), dim_, tokens, "HashedProvider");
    return out;
}

std::string HashedProvider::id() const {
    return "hashed:" + std::to_string(dim_);
}

HttpEmbeddingProvider::HttpEmbeddingProvider(std::string base_url, int timeout_seconds)
    : base_url_(std::move(base_url)), timeout_seconds_(timeout_seconds) {}

TokenEmbeddings HttpEmbeddingProvider::embed_tokens(const std::vector<std::string>& tokens) {
    std::string joined;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i > 0) joined += " ";
        joined += tokens[i];
    }
    nlohmann::json request = {{"text", joined}};

    httplib::Client client(base_url_);
    client.set_connection_timeout(timeout_seconds_);
    client.set_read_timeout(timeout_seconds_);
    const httplib::Result result =
        client.Post("/embed_tokens", request.dump(), "application/json");
    if (!result || result->status != 200) {
        throw EmbeddingError("HttpEmbeddingProvider " + base_url_ + ": request failed" +
                             (result ? " with status " + std::to_string(result->status) : ""));
    }

    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(result->body);
    } catch (const nlohmann::json::exception& e) {
        throw EmbeddingError("HttpEmbeddingProvider " + base_url_ + ": bad response: " +
                             e.what());
    }
    if (!doc.is_object() || !doc.contains("tokens") || !doc.contains("vectors") ||
        !doc["tokens"].is_array() || !doc["vectors"].is_array() ||
        doc["tokens"].size() != doc["vectors"].size() || doc["tokens"].empty()) {
        throw EmbeddingError("HttpEmbeddingProvider " + base_url_ +
                             ": expected parallel tokens and vectors arrays");
    }

    TokenEmbeddings out;
    out.dim = doc["vectors"][0].size();
    if (out.dim == 0) {
        throw EmbeddingError("HttpEmbeddingProvider " + base_url_ + ": empty vectors");
    }
    for (std::size_t i = 0; i < doc["tokens"].size(); ++i) {
        if (!doc["tokens"][i].is_string() || !doc["vectors"][i].is_array() ||
            doc["vectors"][i].size() != out.dim) {
            throw EmbeddingError("HttpEmbeddingProvider " + base_url_ +
                                 ": ragged or mistyped response row " + std::to_string(i));
        }
        out.tokens.push_back(doc["tokens"][i].get<std::string>());
        for (const nlohmann::json& v : doc["vectors"][i]) {
            out.data.push_back(v.get<double>());
        }
    }
    normalize_rows(out.data, out.tokens.size(), out.dim, out.tokens,
                   "HttpEmbeddingProvider " + base_url_);
    return out;
}

std::string HttpEmbeddingProvider::id() const {
    return "endpoint:" + base_url_;
}

std::unique_ptr<EmbeddingProvider> make_embedding_provider(std::string_view config) {
    if (config.starts_with("file:")) {
        return std::make_unique<FileCacheProvider>(std::filesystem::path(config.substr(5)));
    }
    if (config.starts_with("endpoint:")) {
        return std::make_unique<HttpEmbeddingProvider>(std::string(config.substr(9)));
    }
    if (config == "hashed") {
        return std::make_unique<HashedProvider>();
    }
    if (config.starts_with("hashed:")) {
        const std::string dim_text(config.substr(7));
        std::size_t pos = 0;
        int dim = 0;
        try {
            dim = std::stoi(dim_text, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        if (pos != dim_text.size() || dim <= 0) {
            throw ConfigError("make_embedding_provider: bad hashed dim '" + dim_text + "'");
        }
        return std::make_unique<HashedProvider>(static_cast<std::size_t>(dim));
    }
    throw ConfigError("make_embedding_provider: expected file:<path>, endpoint:<url>, or "
                      "hashed[:<dim>], got '" +
                      std::string(config) + "'");
}

double IdfTable::weight(std::string_view token) const {
    std::size_t df = 0;
    for (const auto& [t, count] : frequencies) {
        if (t == token) {
            df = count;
            break;
        }
    }
    // Smoothed so unseen tokens still get a finite positive weight.
    return std::log((static_cast<double>(documents) + 1.0) / (static_cast<double>(df) + 1.0));
}

IdfTable build_idf_table(const std::vector<std::vector<std::string>>& tokenized_documents) {
    IdfTable table;
    table.documents = tokenized_documents.size();
    std::map<std::string, std::size_t> counts;
    for (const std::vector<std::string>& doc : tokenized_documents) {
        std::set<std::string> unique(doc.begin(), doc.end());
        for (const std::string& token : unique) ++counts[token];
    }
    table.frequencies.assign(counts.begin(), counts.end());
    return table;
}

}  // namespace hazguard
