#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace hazguard {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad value passed to an operation (violated precondition).
class ArgumentError : public Error {
public:
    using Error::Error;
};

/// Inconsistent or incomplete run/backend configuration. CLI exit code 1.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Filesystem-level failure (missing file, unreadable content).
class IoError : public Error {
public:
    using Error::Error;
};

/// Structured input failed validation; carries one diagnostic per violation.
class SchemaError : public Error {
public:
    SchemaError(const std::string& what, std::vector<std::string> diagnostics)
        : Error(what), diagnostics_(std::move(diagnostics)) {}

    const std::vector<std::string>& diagnostics() const { return diagnostics_; }

private:
    std::vector<std::string> diagnostics_;
};

/// Remote endpoint failed after all retries were exhausted.
class EndpointError : public Error {
public:
    using Error::Error;
};

/// Replay store has no transcript for the request digest.
class ReplayMissError : public Error {
public:
    using Error::Error;
};

/// Embedding provider could not produce vectors for a text.
class EmbeddingError : public Error {
public:
    using Error::Error;
};

/// Image bytes could not be decoded.
class DecodeError : public Error {
public:
    using Error::Error;
};

/// Serialized detector network could not be loaded.
class ModelLoadError : public Error {
public:
    using Error::Error;
};

}  // namespace hazguard
