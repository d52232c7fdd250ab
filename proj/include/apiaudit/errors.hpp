#pragma once

#include <stdexcept>
#include <string>

namespace apiaudit {

struct AuditError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Network-level failure after retries are exhausted.
struct TransportError : AuditError {
    TransportError(const std::string& what, int attempts)
        : AuditError(what), attempts(attempts) {}
    int attempts = 0;
};

// Non-2xx HTTP response.
struct ProtocolError : AuditError {
    ProtocolError(const std::string& what, int status, std::string body_excerpt)
        : AuditError(what), status(status), body_excerpt(std::move(body_excerpt)) {}
    int status = 0;
    std::string body_excerpt;
};

// 2xx response whose body does not carry the expected chat-completion shape.
struct MalformedResponseError : AuditError {
    using AuditError::AuditError;
};

// Malformed line in a JSONL store; line numbers are 1-based.
struct TraceParseError : AuditError {
    TraceParseError(const std::string& what, std::size_t line)
        : AuditError(what), line(line) {}
    std::size_t line = 0;
};

struct ConfigError : AuditError {
    using AuditError::AuditError;
};

}  // namespace apiaudit
