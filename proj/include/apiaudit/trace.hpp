#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "apiaudit/wire.hpp"

namespace apiaudit::trace {

/// Ordered, distinct probe prompts. Fingerprint use wants at least 24.
struct ProbeSet {
    std::string id;
    std::vector<std::string> prompts;
    int min_count_hint = 24;

    void validate() const;  // non-empty, distinct prompts

    /// Loads prompts from a plain-text file (one per line) or a JSON list.
    static ProbeSet load(const std::filesystem::path& path);

    /// Stable content hash, echoed into reports.
    std::string content_hash() const;
};

/// One probe observation, or a gap record when every retry failed.
struct ProbeTrace {
    int probe_id = 0;
    std::string endpoint_id;
    int session = 1;
    wire::ChatExchange exchange;
    std::optional<std::string> error;  // present => gap record

    bool is_gap() const { return error.has_value(); }
};

void to_json(nlohmann::json& j, const ProbeTrace& t);
void from_json(const nlohmann::json& j, ProbeTrace& t);

/// Append-only JSONL store. Single writer; concurrent readers allowed.
class TraceStore {
public:
    explicit TraceStore(std::filesystem::path path) : path_(std::move(path)) {}

    void append(const ProbeTrace& record);
    void append_all(const std::vector<ProbeTrace>& records);

    /// Replays the whole file. Malformed lines raise TraceParseError naming
    /// the 1-based line number.
    std::vector<ProbeTrace> load_all() const;

    std::vector<ProbeTrace> load_filtered(const std::string& endpoint_id,
                                          std::optional<int> session = std::nullopt) const;

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

struct CollectOptions {
    int sessions = 3;
    double session_delay_s = 0.0;  // spacing between sessions
};

/// Runs every probe for every session in order. Failed probes become gap
/// records rather than being dropped. If store is non-null each record is
/// appended as it is produced, so an aborted run leaves a partial store.
std::vector<ProbeTrace> collect(const wire::ChatClient& client,
                                const wire::EndpointSpec& endpoint, const ProbeSet& probes,
                                const CollectOptions& options, TraceStore* store = nullptr);

}  // namespace apiaudit::trace
