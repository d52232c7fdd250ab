#include "apiaudit/wire.hpp"

#include <cstdlib>
#include <ctime>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "apiaudit/errors.hpp"

namespace apiaudit::wire {

using nlohmann::json;

std::string to_string(EndpointRole role) {
    return role == EndpointRole::official ? "official" : "shadow";
}

EndpointRole role_from_string(std::string_view s) {
    if (s == "official") return EndpointRole::official;
    if (s == "shadow") return EndpointRole::shadow;
    throw ConfigError("unknown endpoint role: " + std::string(s));
}

std::string to_string(UsageSource src) {
    return src == UsageSource::reported ? "reported" : "estimated";
}

UsageSource usage_source_from_string(std::string_view s) {
    if (s == "reported") return UsageSource::reported;
    if (s == "estimated") return UsageSource::estimated;
    throw ConfigError("unknown usage source: " + std::string(s));
}

void to_json(json& j, const EndpointSpec& e) {
    j = json{{"id", e.id},
             {"base_url", e.base_url},
             {"claimed_model", e.claimed_model},
             {"api_model_id", e.api_model_id},
             {"auth_ref", e.auth_ref},
             {"role", to_string(e.role)},
             {"price_in", e.price_in},
             {"price_out", e.price_out}};
    if (e.temperature) j["temperature"] = *e.temperature;
    if (e.seed) j["seed"] = *e.seed;
}

void from_json(const json& j, EndpointSpec& e) {
    j.at("id").get_to(e.id);
    j.at("base_url").get_to(e.base_url);
    j.at("claimed_model").get_to(e.claimed_model);
    e.api_model_id = j.value("api_model_id", e.claimed_model);
    e.auth_ref = j.value("auth_ref", std::string{});
    e.role = role_from_string(j.value("role", std::string{"shadow"}));
    e.price_in = j.value("price_in", 0.0);
    e.price_out = j.value("price_out", 0.0);
    if (j.contains("temperature")) e.temperature = j.at("temperature").get<double>();
    if (j.contains("seed")) e.seed = j.at("seed").get<int>();
}

std::int64_t whitespace_token_count(std::string_view text) {
    std::int64_t count = 0;
    bool in_token = false;
    for (char c : text) {
        bool ws = c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
        if (!ws && !in_token) ++count;
        in_token = !ws;
    }
    return count;
}

std::string utc_timestamp_now() {
    std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string SecretRegistry::resolve(const std::string& auth_ref) {
    if (auth_ref.empty()) return {};
    const char* value = std::getenv(("APIAUDIT_KEY_" + auth_ref).c_str());
    if (value == nullptr || *value == '\0')
        throw ConfigError("no secret available for auth_ref '" + auth_ref +
                          "' (set APIAUDIT_KEY_" + auth_ref + ")");
    add(value);
    return value;
}

void SecretRegistry::add(std::string secret) {
    if (secret.empty()) return;
    for (const auto& s : secrets_)
        if (s == secret) return;
    secrets_.push_back(std::move(secret));
}

std::string SecretRegistry::scrub(std::string text) const {
    for (const auto& secret : secrets_) {
        std::size_t pos = 0;
        while ((pos = text.find(secret, pos)) != std::string::npos) {
            text.replace(pos, secret.size(), kMask);
            pos += std::char_traits<char>::length(kMask);
        }
    }
    return text;
}

ChatClient::ChatClient(SecretRegistry secrets) : ChatClient(std::move(secrets), Options{}) {}

ChatClient::ChatClient(SecretRegistry secrets, Options options)
    : secrets_(std::move(secrets)), options_(options) {}

namespace {

struct SplitUrl {
    std::string host_port;  // scheme://host:port
    std::string path;       // leading path, possibly empty
};

SplitUrl split_base_url(const std::string& base_url) {
    auto scheme_end = base_url.find("://");
    if (scheme_end == std::string::npos)
        throw ConfigError("base_url missing scheme: " + base_url);
    auto path_start = base_url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {base_url, ""};
    std::string path = base_url.substr(path_start);
    while (!path.empty() && path.back() == '/') path.pop_back();
    return {base_url.substr(0, path_start), path};
}

}  // namespace

ChatExchange ChatClient::send_chat(const EndpointSpec& endpoint, const std::string& prompt,
                                   const RequestOverrides& overrides) const {
    SecretRegistry secrets = secrets_;
    const std::string token = secrets.resolve(endpoint.auth_ref);

    auto [host_port, path_prefix] = split_base_url(endpoint.base_url);

    json body{{"model", endpoint.api_model_id.empty() ? endpoint.claimed_model
                                                      : endpoint.api_model_id},
              {"messages", json::array({{{"role", "user"}, {"content", prompt}}})}};
    auto temperature = overrides.temperature ? overrides.temperature : endpoint.temperature;
    auto seed = overrides.seed ? overrides.seed : endpoint.seed;
    if (temperature) body["temperature"] = *temperature;
    if (seed) body["seed"] = *seed;
    const std::string payload = body.dump();

    std::string last_transport_error;
    for (int attempt = 1; attempt <= options_.max_attempts; ++attempt) {
        httplib::Client client(host_port);
        client.set_connection_timeout(std::chrono::duration<double>(options_.timeout_s));
        client.set_read_timeout(std::chrono::duration<double>(options_.timeout_s));
        httplib::Headers headers;
        if (!token.empty()) headers.emplace("Authorization", "Bearer " + token);

        const auto start = std::chrono::steady_clock::now();
        auto res = client.Post(path_prefix + "/chat/completions", headers, payload,
                               "application/json");
        const double latency =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

        const bool retryable = !res || res->status == 429;
        if (retryable && attempt < options_.max_attempts) {
            double backoff = options_.backoff_base_s * double(1 << (attempt - 1));
            std::this_thread::sleep_for(std::chrono::duration<double>(backoff));
            if (!res) last_transport_error = httplib::to_string(res.error());
            continue;
        }
        if (!res) {
            last_transport_error = httplib::to_string(res.error());
            throw TransportError("transport failure talking to " + endpoint.id + ": " +
                                     last_transport_error,
                                 attempt);
        }
        if (res->status < 200 || res->status >= 300) {
            throw ProtocolError("endpoint " + endpoint.id + " returned HTTP " +
                                    std::to_string(res->status),
                                res->status, secrets.scrub(res->body.substr(0, 512)));
        }

        json parsed;
        try {
            parsed = json::parse(res->body);
        } catch (const json::exception& e) {
            throw MalformedResponseError("unparseable response body from " + endpoint.id +
                                         ": " + e.what());
        }
        if (!parsed.contains("choices") || !parsed["choices"].is_array() ||
            parsed["choices"].empty()) {
            throw MalformedResponseError("response from " + endpoint.id +
                                         " has no choices");
        }

        ChatExchange exchange;
        exchange.request_text = prompt;
        exchange.response_text =
            parsed["choices"][0].value("message", json::object()).value("content", "");
        exchange.latency_s = latency;
        exchange.http_status = res->status;
        exchange.timestamp = utc_timestamp_now();
        if (parsed.contains("usage") && parsed["usage"].contains("prompt_tokens") &&
            parsed["usage"].contains("completion_tokens")) {
            exchange.prompt_tokens = parsed["usage"]["prompt_tokens"].get<std::int64_t>();
            exchange.completion_tokens =
                parsed["usage"]["completion_tokens"].get<std::int64_t>();
            exchange.usage_source = UsageSource::reported;
        } else {
            exchange.prompt_tokens = whitespace_token_count(prompt);
            exchange.completion_tokens = whitespace_token_count(exchange.response_text);
            exchange.usage_source = UsageSource::estimated;
        }
        exchange.request_text = secrets.scrub(std::move(exchange.request_text));
        exchange.response_text = secrets.scrub(std::move(exchange.response_text));
        return exchange;
    }
    throw TransportError("transport failure talking to " + endpoint.id + ": " +
                             last_transport_error,
                         options_.max_attempts);
}

ChatExchange ChatClient::redact(ChatExchange exchange) const {
    exchange.request_text = secrets_.scrub(std::move(exchange.request_text));
    exchange.response_text = secrets_.scrub(std::move(exchange.response_text));
    return exchange;
}

}  // namespace apiaudit::wire
