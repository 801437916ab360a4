#include "hazguard/vlm_client.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <thread>

#include "httplib.h"
#include "json.hpp"

#include "hazguard/digest.hpp"
#include "hazguard/errors.hpp"

namespace hazguard {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

nlohmann::json build_request(std::span<const unsigned char> image, const std::string& prompt,
                             const InferenceConfig& cfg) {
    return nlohmann::json{
        {"model", cfg.model_name},
        {"temperature", cfg.temperature},
        {"max_tokens", cfg.max_tokens},
        {"messages",
         nlohmann::json::array(
             {nlohmann::json{{"role", "user"},
                             {"content", nlohmann::json::array(
                                             {nlohmann::json{{"type", "text"}, {"text", prompt}},
                                              nlohmann::json{{"type", "image"},
                                                             {"data", base64_encode(image)}}})}}})},
    };
}

// First choice's message content; tolerates both a plain string and a list of
// typed content parts.
std::string extract_text(const nlohmann::json& doc) {
    if (!doc.is_object() || !doc.contains("choices") || !doc["choices"].is_array() ||
        doc["choices"].empty()) {
        throw EndpointError("response has no choices");
    }
    const nlohmann::json& message = doc["choices"][0].value("message", nlohmann::json());
    if (!message.is_object() || !message.contains("content")) {
        throw EndpointError("response choice has no message content");
    }
    const nlohmann::json& content = message["content"];
    if (content.is_string()) return content.get<std::string>();
    if (content.is_array()) {
        std::string out;
        for (const nlohmann::json& part : content) {
            if (part.is_object() && part.value("type", "") == "text" && part.contains("text") &&
                part["text"].is_string()) {
                out += part["text"].get<std::string>();
            }
        }
        return out;
    }
    throw EndpointError("response message content has unexpected type");
}

std::optional<TokenUsage> extract_usage(const nlohmann::json& doc) {
    if (!doc.is_object() || !doc.contains("usage") || !doc["usage"].is_object()) {
        return std::nullopt;
    }
    const nlohmann::json& usage = doc["usage"];
    if (!usage.contains("prompt_tokens") || !usage.contains("completion_tokens") ||
        !usage["prompt_tokens"].is_number_unsigned() ||
        !usage["completion_tokens"].is_number_unsigned()) {
        return std::nullopt;
    }
    return TokenUsage{usage["prompt_tokens"].get<std::size_t>(),
                      usage["completion_tokens"].get<std::size_t>()};
}

}  // namespace

void validate_inference_config(const InferenceConfig& cfg) {
    if (cfg.temperature < 0.0) {
        throw ConfigError("inference config: temperature must be >= 0");
    }
    if (cfg.max_tokens < 1) {
        throw ConfigError("inference config: max_tokens must be >= 1");
    }
    if (!(cfg.timeout_seconds > 0.0)) {
        throw ConfigError("inference config: timeout must be positive");
    }
    if (cfg.max_retries < 0) {
        throw ConfigError("inference config: max_retries must be >= 0");
    }
}

InferenceConfig annotation_profile(const InferenceConfig& base) {
    InferenceConfig cfg = base;
    cfg.temperature = 0.1;
    cfg.max_tokens = 180;
    return cfg;
}

ReplayBackend::ReplayBackend(std::filesystem::path transcripts_dir)
    : dir_(std::move(transcripts_dir)) {
    if (!std::filesystem::is_directory(dir_)) {
        throw ConfigError("ReplayBackend: not a directory: " + dir_.string());
    }
}

RawResponse ReplayBackend::complete(std::span<const unsigned char> image,
                                    const std::string& prompt, const InferenceConfig& cfg) {
    const std::string digest = request_digest(image, prompt, cfg.model_name);
    const std::filesystem::path path = dir_ / (digest + ".json");
    if (!std::filesystem::exists(path)) {
        throw ReplayMissError("no transcript " + digest + ".json in " + dir_.string());
    }
    const Transcript transcript = load_transcript(path);
    if (transcript.digest != digest) {
        throw ReplayMissError("transcript " + path.string() + " declares digest " +
                              transcript.digest + ", expected " + digest);
    }
    RawResponse response;
    response.text = transcript.response;
    response.latency_ms = transcript.latency_ms;
    response.token_usage = transcript.token_usage;
    response.backend_id = id();
    return response;
}

std::string ReplayBackend::id() const {
    return "replay:" + dir_.string();
}

RawResponse HttpVlmBackend::complete(std::span<const unsigned char> image,
                                     const std::string& prompt, const InferenceConfig& cfg) {
    validate_inference_config(cfg);
    if (cfg.endpoint.empty()) {
        throw ConfigError("HttpVlmBackend: endpoint not set");
    }
    const nlohmann::json request = build_request(image, prompt, cfg);
    const std::string body = request.dump();

    httplib::Headers headers;
    if (const char* key = std::getenv(cfg.auth_env.c_str()); key != nullptr && *key != '\0') {
        headers.emplace("Authorization", std::string("Bearer ") + key);
    }

    std::string last_error;
    for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
        if (attempt > 0) {
            // 100 ms, 200 ms, 400 ms, ... capped at 2 s.
            const auto delay = std::chrono::milliseconds(
                std::min<long long>(100ll << (attempt - 1), 2000ll));
            std::this_thread::sleep_for(delay);
        }
        httplib::Client client(cfg.endpoint);
        client.set_connection_timeout(std::chrono::duration<double>(cfg.timeout_seconds));
        client.set_read_timeout(std::chrono::duration<double>(cfg.timeout_seconds));
        client.set_write_timeout(std::chrono::duration<double>(cfg.timeout_seconds));

        const Clock::time_point start = Clock::now();
        const httplib::Result result =
            client.Post("/v1/chat/completions", headers, body, "application/json");
        const double latency = elapsed_ms(start);

        if (!result) {
            last_error = "transport error: " + httplib::to_string(result.error());
            continue;
        }
        if (result->status < 200 || result->status >= 300) {
            last_error = "status " + std::to_string(result->status);
            continue;
        }

        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(result->body);
        } catch (const nlohmann::json::exception& e) {
            throw EndpointError("HttpVlmBackend: unparseable response body: " +
                                std::string(e.what()));
        }
        RawResponse response;
        response.text = extract_text(doc);
        response.latency_ms = latency;
        response.token_usage = extract_usage(doc);
        response.backend_id = id();

        if (!record_dir_.empty()) {
            Transcript transcript;
            transcript.digest = request_digest(image, prompt, cfg.model_name);
            transcript.model = cfg.model_name;
            transcript.prompt = prompt;
            transcript.response = response.text;
            transcript.latency_ms = response.latency_ms;
            transcript.token_usage = response.token_usage;
            save_transcript(record_dir_, transcript);
        }
        return response;
    }
    throw EndpointError("HttpVlmBackend: " + cfg.endpoint + " failed after " +
                        std::to_string(cfg.max_retries + 1) + " attempts (" + last_error + ")");
}

std::string HttpVlmBackend::id() const {
    return "live";
}

void HttpVlmBackend::record_transcripts(std::filesystem::path dir) {
    std::filesystem::create_directories(dir);
    record_dir_ = std::move(dir);
}

FakeBackend::FakeBackend(std::string fixed_text) : fixed_text_(std::move(fixed_text)) {}

FakeBackend FakeBackend::echoing_digest() {
    FakeBackend backend;
    backend.echo_digest_ = true;
    return backend;
}

RawResponse FakeBackend::complete(std::span<const unsigned char> image, const std::string& prompt,
                                  const InferenceConfig& cfg) {
    const Clock::time_point start = Clock::now();
    RawResponse response;
    response.text = echo_digest_ ? request_digest(image, prompt, cfg.model_name) : fixed_text_;
    response.latency_ms = elapsed_ms(start);
    response.backend_id = id();
    return response;
}

std::string FakeBackend::id() const {
    return echo_digest_ ? "fake:echo" : "fake";
}

VlmClient::VlmClient(std::shared_ptr<VlmBackend> backend, InferenceConfig cfg)
    : backend_(std::move(backend)), cfg_(std::move(cfg)) {
    if (!backend_) {
        throw ConfigError("VlmClient: null backend");
    }
    validate_inference_config(cfg_);
}

RawResponse VlmClient::complete(std::span<const unsigned char> image,
                                const PromptBundle& prompt) const {
    if (image.empty()) {
        throw ArgumentError("VlmClient::complete: empty image");
    }
    return backend_->complete(image, prompt.text, cfg_);
}

Transcript load_transcript(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("load_transcript: cannot open " + path.string());
    }
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError("load_transcript: " + path.string(), {e.what()});
    }
    for (const char* field : {"digest", "model", "response", "latency_ms"}) {
        if (!doc.contains(field)) {
            throw SchemaError("load_transcript: " + path.string(),
                              {std::string("missing field '") + field + "'"});
        }
    }
    if (!doc["digest"].is_string() || !doc["model"].is_string() ||
        !doc["response"].is_string() || !doc["latency_ms"].is_number()) {
        throw SchemaError("load_transcript: " + path.string(), {"mistyped field"});
    }
    Transcript out;
    out.digest = doc["digest"].get<std::string>();
    out.model = doc["model"].get<std::string>();
    out.prompt = doc.value("prompt", "");
    out.response = doc["response"].get<std::string>();
    out.latency_ms = doc["latency_ms"].get<double>();
    if (out.latency_ms < 0.0) {
        throw SchemaError("load_transcript: " + path.string(), {"negative latency"});
    }
    if (doc.contains("token_usage") && doc["token_usage"].is_object()) {
        const nlohmann::json& usage = doc["token_usage"];
        if (usage.contains("prompt_tokens") && usage.contains("completion_tokens")) {
            out.token_usage = TokenUsage{usage["prompt_tokens"].get<std::size_t>(),
                                         usage["completion_tokens"].get<std::size_t>()};
        }
    }
    return out;
}

void save_transcript(const std::filesystem::path& dir, const Transcript& transcript) {
    std::filesystem::create_directories(dir);
    nlohmann::ordered_json doc;
    doc["digest"] = transcript.digest;
    doc["model"] = transcript.model;
    doc["prompt"] = transcript.prompt;
    doc["response"] = transcript.response;
    doc["latency_ms"] = transcript.latency_ms;
    if (transcript.token_usage.has_value()) {
        doc["token_usage"] = {{"prompt_tokens", transcript.token_usage->prompt_tokens},
                              {"completion_tokens", transcript.token_usage->completion_tokens}};
    }
    std::ofstream out(dir / (transcript.digest + ".json"));
    if (!out) {
        throw IoError("save_transcript: cannot write to " + dir.string());
    }
    out << doc.dump(2) << "\n";
}

}  // namespace hazguard
