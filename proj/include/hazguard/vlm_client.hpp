#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>

#include "hazguard/prompt.hpp"

namespace hazguard {

struct TokenUsage {
    std::size_t prompt_tokens = 0;
    std::size_t completion_tokens = 0;
};

struct InferenceConfig {
    std::string endpoint;
    std::string model_name;
    double temperature = 0.1;
    int max_tokens = 256;
    double timeout_seconds = 60.0;
    int max_retries = 2;
    std::string auth_env = "HAZGUARD_API_KEY";
};

// Throws ConfigError when temperature, max_tokens or timeout are out of range.
void validate_inference_config(const InferenceConfig& cfg);

// Decoding profile for ground-truth draft generation.
InferenceConfig annotation_profile(const InferenceConfig& base);

struct RawResponse {
    std::string text;
    double latency_ms = 0.0;
    std::optional<TokenUsage> token_usage;
    std::string backend_id;
};

class VlmBackend {
public:
    virtual ~VlmBackend() = default;
    virtual RawResponse complete(std::span<const unsigned char> image, const std::string& prompt,
                                 const InferenceConfig& cfg) = 0;
    virtual std::string id() const = 0;
};

// Serves stored transcripts from <dir>/<request digest>.json; a request with
// no transcript raises ReplayMissError naming the digest.
class ReplayBackend : public VlmBackend {
public:
    explicit ReplayBackend(std::filesystem::path transcripts_dir);
    RawResponse complete(std::span<const unsigned char> image, const std::string& prompt,
                         const InferenceConfig& cfg) override;
    std::string id() const override;

private:
    std::filesystem::path dir_;
};

// Chat-style completion endpoint; bearer token read from cfg.auth_env when
// set. Failures are retried with exponential backoff up to cfg.max_retries,
// then raised as EndpointError. With a record directory set, successful
// responses are written as replay transcripts.
class HttpVlmBackend : public VlmBackend {
public:
    HttpVlmBackend() = default;
    RawResponse complete(std::span<const unsigned char> image, const std::string& prompt,
                         const InferenceConfig& cfg) override;
    std::string id() const override;
    void record_transcripts(std::filesystem::path dir);

private:
    std::filesystem::path record_dir_;
};

// Test and benchmark double: answers instantly with a fixed text, or with the
// request digest when echo_digest is set.
class FakeBackend : public VlmBackend {
public:
    explicit FakeBackend(std::string fixed_text);
    static FakeBackend echoing_digest();
    RawResponse complete(std::span<const unsigned char> image, const std::string& prompt,
                         const InferenceConfig& cfg) override;
    std::string id() const override;

private:
    FakeBackend() = default;
    std::string fixed_text_;
    bool echo_digest_ = false;
};

// Binds a backend to a config and checks preconditions once per call.
class VlmClient {
public:
    VlmClient(std::shared_ptr<VlmBackend> backend, InferenceConfig cfg);
    RawResponse complete(std::span<const unsigned char> image, const PromptBundle& prompt) const;
    const InferenceConfig& config() const { return cfg_; }
    VlmBackend& backend() const { return *backend_; }

private:
    std::shared_ptr<VlmBackend> backend_;
    InferenceConfig cfg_;
};

// Transcript file helpers shared by the replay backend and fixture tooling.
struct Transcript {
    std::string digest;
    std::string model;
    std::string prompt;
    std::string response;
    double latency_ms = 0.0;
    std::optional<TokenUsage> token_usage;
};

Transcript load_transcript(const std::filesystem::path& path);
void save_transcript(const std::filesystem::path& dir, const Transcript& transcript);

}  // namespace hazguard
