#include "apiaudit/trace.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "apiaudit/errors.hpp"

namespace apiaudit::trace {

using nlohmann::json;

void ProbeSet::validate() const {
    if (prompts.empty()) throw ConfigError("probe set '" + id + "' has no prompts");
    std::set<std::string> seen(prompts.begin(), prompts.end());
    if (seen.size() != prompts.size())
        throw ConfigError("probe set '" + id + "' contains duplicate prompts");
}

ProbeSet ProbeSet::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open probe set file: " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    std::string content = buffer.str();

    ProbeSet set;
    set.id = path.stem().string();
    auto first = content.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && content[first] == '[') {
        for (const auto& item : json::parse(content))
            set.prompts.push_back(item.get<std::string>());
    } else {
        std::istringstream lines(content);
        std::string line;
        while (std::getline(lines, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (!line.empty()) set.prompts.push_back(line);
        }
    }
    set.validate();
    return set;
}

std::string ProbeSet::content_hash() const {
    // FNV-1a over prompts with separators; stable across platforms.
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](std::string_view s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 1099511628211ull;
        }
        h ^= 0x1f;
        h *= 1099511628211ull;
    };
    for (const auto& p : prompts) mix(p);
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void to_json(json& j, const ProbeTrace& t) {
    j = json{{"probe_id", t.probe_id},
             {"endpoint_id", t.endpoint_id},
             {"session", t.session},
             {"request_text", t.exchange.request_text},
             {"response_text", t.exchange.response_text},
             {"latency_s", t.exchange.latency_s},
             {"prompt_tokens", t.exchange.prompt_tokens},
             {"completion_tokens", t.exchange.completion_tokens},
             {"usage_source", wire::to_string(t.exchange.usage_source)},
             {"timestamp", t.exchange.timestamp},
             {"http_status", t.exchange.http_status}};
    if (t.error) j["error"] = *t.error;
}

void from_json(const json& j, ProbeTrace& t) {
    j.at("probe_id").get_to(t.probe_id);
    j.at("endpoint_id").get_to(t.endpoint_id);
    j.at("session").get_to(t.session);
    j.at("request_text").get_to(t.exchange.request_text);
    j.at("response_text").get_to(t.exchange.response_text);
    j.at("latency_s").get_to(t.exchange.latency_s);
    j.at("prompt_tokens").get_to(t.exchange.prompt_tokens);
    j.at("completion_tokens").get_to(t.exchange.completion_tokens);
    t.exchange.usage_source =
        wire::usage_source_from_string(j.at("usage_source").get<std::string>());
    j.at("timestamp").get_to(t.exchange.timestamp);
    j.at("http_status").get_to(t.exchange.http_status);
    if (j.contains("error") && !j["error"].is_null())
        t.error = j["error"].get<std::string>();
    else
        t.error.reset();
}

void TraceStore::append(const ProbeTrace& record) {
    std::ofstream out(path_, std::ios::app);
    if (!out) throw AuditError("cannot open trace store for append: " + path_.string());
    out << json(record).dump() << '\n';
}

void TraceStore::append_all(const std::vector<ProbeTrace>& records) {
    std::ofstream out(path_, std::ios::app);
    if (!out) throw AuditError("cannot open trace store for append: " + path_.string());
    for (const auto& r : records) out << json(r).dump() << '\n';
}

std::vector<ProbeTrace> TraceStore::load_all() const {
    std::ifstream in(path_);
    if (!in) throw AuditError("cannot open trace store: " + path_.string());
    std::vector<ProbeTrace> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            records.push_back(json::parse(line).get<ProbeTrace>());
        } catch (const json::exception& e) {
            throw TraceParseError("malformed trace record at line " +
                                      std::to_string(line_no) + ": " + e.what(),
                                  line_no);
        }
    }
    return records;
}

std::vector<ProbeTrace> TraceStore::load_filtered(const std::string& endpoint_id,
                                                  std::optional<int> session) const {
    std::vector<ProbeTrace> out;
    for (auto& r : load_all()) {
        if (r.endpoint_id != endpoint_id) continue;
        if (session && r.session != *session) continue;
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<ProbeTrace> collect(const wire::ChatClient& client,
                                const wire::EndpointSpec& endpoint, const ProbeSet& probes,
                                const CollectOptions& options, TraceStore* store) {
    if (options.sessions < 1) throw ConfigError("sessions must be >= 1");
    probes.validate();

    std::vector<ProbeTrace> traces;
    traces.reserve(probes.prompts.size() * std::size_t(options.sessions));
    for (int session = 1; session <= options.sessions; ++session) {
        if (session > 1 && options.session_delay_s > 0)
            std::this_thread::sleep_for(
                std::chrono::duration<double>(options.session_delay_s));
        for (int probe_id = 0; probe_id < int(probes.prompts.size()); ++probe_id) {
            ProbeTrace record;
            record.probe_id = probe_id;
            record.endpoint_id = endpoint.id;
            record.session = session;
            try {
                record.exchange = client.send_chat(endpoint, probes.prompts[probe_id]);
            } catch (const AuditError& e) {
                record.exchange.request_text = probes.prompts[probe_id];
                record.exchange.timestamp = wire::utc_timestamp_now();
                record.error = e.what();
            }
            if (store != nullptr) store->append(record);
            traces.push_back(std::move(record));
        }
        // A first session with zero successes means the endpoint is not
        // reachable at all; abort with the partial store intact.
        if (session == 1 &&
            std::all_of(traces.begin(), traces.end(),
                        [](const ProbeTrace& t) { return t.is_gap(); }))
            throw TransportError("endpoint " + endpoint.id +
                                     " entirely unreachable; aborting collection",
                                 int(traces.size()));
    }
    return traces;
}

}  // namespace apiaudit::trace
