#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace apiaudit::wire {

enum class EndpointRole { official, shadow };

/// One OpenAI-compatible chat endpoint under audit.
struct EndpointSpec {
    std::string id;
    std::string base_url;       // e.g. http://127.0.0.1:8080/scenario/s1
    std::string claimed_model;  // identity the provider advertises
    std::string api_model_id;   // model string sent on the wire
    std::string auth_ref;       // name of a secret source, never the secret
    EndpointRole role = EndpointRole::shadow;
    double price_in = 0.0;   // USD per 1M prompt tokens
    double price_out = 0.0;  // USD per 1M completion tokens
    std::optional<double> temperature;
    std::optional<int> seed;
};

enum class UsageSource { reported, estimated };

/// One request/response observation with locally measured latency.
struct ChatExchange {
    std::string request_text;
    std::string response_text;
    double latency_s = 0.0;
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;
    UsageSource usage_source = UsageSource::reported;
    std::string timestamp;  // UTC, ISO 8601
    int http_status = 0;
};

std::string to_string(EndpointRole role);
EndpointRole role_from_string(std::string_view s);
std::string to_string(UsageSource src);
UsageSource usage_source_from_string(std::string_view s);

void to_json(nlohmann::json& j, const EndpointSpec& e);
void from_json(const nlohmann::json& j, EndpointSpec& e);

/// Whitespace-token fallback used when the provider omits a usage block.
std::int64_t whitespace_token_count(std::string_view text);

std::string utc_timestamp_now();

/// Holds every secret the run may touch so persisted bytes can be scrubbed.
/// Secrets are resolved from APIAUDIT_KEY_<auth_ref> environment variables.
class SecretRegistry {
public:
    /// Resolves and remembers the secret for auth_ref. Empty auth_ref means
    /// an unauthenticated endpoint and yields an empty token.
    std::string resolve(const std::string& auth_ref);

    /// Registers a literal secret (used by tests and config-loaded keys).
    void add(std::string secret);

    /// Replaces every occurrence of a registered secret with a fixed mask.
    std::string scrub(std::string text) const;

    const std::vector<std::string>& secrets() const { return secrets_; }

    static constexpr const char* kMask = "[REDACTED]";

private:
    std::vector<std::string> secrets_;
};

struct RequestOverrides {
    std::optional<double> temperature;
    std::optional<int> seed;
};

/// Chat-completion client. Shareable across threads; each call is independent.
class ChatClient {
public:
    struct Options {
        int max_attempts = 3;            // transport errors and 429 only
        double backoff_base_s = 1.0;     // 1s, 2s, 4s by default
        double timeout_s = 120.0;
    };

    explicit ChatClient(SecretRegistry secrets);
    ChatClient(SecretRegistry secrets, Options options);

    /// POSTs {base_url}/chat/completions and returns the observed exchange.
    /// Latency is wall clock from request start to last byte, re-measured on
    /// every retry; only the served attempt's latency is recorded.
    ChatExchange send_chat(const EndpointSpec& endpoint, const std::string& prompt,
                           const RequestOverrides& overrides = {}) const;

    /// Masks registered secrets out of both text fields.
    ChatExchange redact(ChatExchange exchange) const;

    const SecretRegistry& secrets() const { return secrets_; }

private:
    SecretRegistry secrets_;
    Options options_;
};

}  // namespace apiaudit::wire
