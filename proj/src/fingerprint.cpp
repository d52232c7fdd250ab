#include "apiaudit/fingerprint.hpp"

#include <cmath>
#include <fstream>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "apiaudit/errors.hpp"

namespace apiaudit::fingerprint {

using nlohmann::json;

namespace {

// FNV-1a; std::hash is not guaranteed stable across platforms.
std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace

Embedding embed(std::string_view text) {
    Embedding v = Embedding::Zero(kEmbeddingDim);
    if (text.size() < 3) {
        if (text.empty()) return v;  // zero sentinel
        v[fnv1a(text) % kEmbeddingDim] += 1.0;
    } else {
        for (std::size_t i = 0; i + 3 <= text.size(); ++i)
            v[fnv1a(text.substr(i, 3)) % kEmbeddingDim] += 1.0;
    }
    double norm = v.norm();
    if (norm > 0) v /= norm;
    return v;
}

Embedding TrigramEmbeddingProvider::embed(std::string_view text) const {
    return fingerprint::embed(text);
}

HttpEmbeddingProvider::HttpEmbeddingProvider(std::string base_url)
    : base_url_(std::move(base_url)) {}

Embedding HttpEmbeddingProvider::embed(std::string_view text) const {
    auto scheme_end = base_url_.find("://");
    auto path_start = base_url_.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
    std::string host = path_start == std::string::npos ? base_url_ : base_url_.substr(0, path_start);
    std::string path = path_start == std::string::npos ? "" : base_url_.substr(path_start);
    httplib::Client client(host);
    json body{{"texts", json::array({std::string(text)})}};
    auto res = client.Post(path + "/embed", body.dump(), "application/json");
    if (!res || res->status != 200)
        throw AuditError("embedding service unavailable at " + base_url_);
    auto vec = json::parse(res->body).at("vectors").at(0);
    Embedding v = Embedding::Zero(kEmbeddingDim);
    if (int(vec.size()) != kEmbeddingDim)
        throw AuditError("embedding service returned wrong dimension");
    for (int i = 0; i < kEmbeddingDim; ++i) v[i] = vec[i].get<double>();
    double norm = v.norm();
    if (norm > 0) v /= norm;
    return v;
}

ProbeEmbeddings embed_traces(const std::vector<trace::ProbeTrace>& traces,
                             const EmbeddingProvider& provider) {
    ProbeEmbeddings out;
    for (const auto& t : traces) {
        if (t.is_gap()) continue;
        out[t.probe_id].push_back(provider.embed(t.exchange.response_text));
    }
    return out;
}

DistanceStats mean_distance(const ProbeEmbeddings& query, const ProbeEmbeddings& ref) {
    std::vector<double> distances;
    int skipped = 0;
    for (const auto& [probe_id, samples] : query) {
        auto it = ref.find(probe_id);
        if (it == ref.end() || it->second.empty() || samples.empty()) {
            ++skipped;
            continue;
        }
        // Average over query samples of the best (max-similarity) reference
        // sample; robust to stochastic decoding in the reference set.
        double probe_distance = 0.0;
        for (const auto& q : samples) {
            double best = -1.0;
            for (const auto& r : it->second) best = std::max(best, q.dot(r));
            probe_distance += 100.0 * (1.0 - best);
        }
        distances.push_back(probe_distance / double(samples.size()));
    }
    for (const auto& [probe_id, samples] : ref)
        if (!query.count(probe_id)) ++skipped;

    if (distances.empty())
        throw AuditError("no overlapping probes between query and reference");

    DistanceStats stats;
    stats.probes_used = int(distances.size());
    stats.probes_skipped = skipped;
    double sum = 0.0;
    for (double d : distances) sum += d;
    stats.mean = sum / double(distances.size());
    if (distances.size() > 1) {
        double ss = 0.0;
        for (double d : distances) ss += (d - stats.mean) * (d - stats.mean);
        stats.stddev = std::sqrt(ss / double(distances.size() - 1));
    }
    return stats;
}

void ReferenceDB::save(const std::filesystem::path& path) const {
    json entries_json = json::object();
    for (const auto& [model, probes] : entries) {
        json probes_json = json::object();
        for (const auto& [probe_id, samples] : probes) {
            json vectors = json::array();
            for (const auto& v : samples)
                vectors.push_back(std::vector<double>(v.data(), v.data() + v.size()));
            probes_json[std::to_string(probe_id)] = std::move(vectors);
        }
        entries_json[model] = std::move(probes_json);
    }
    json j{{"probe_set_id", probe_set_id}, {"built_at", built_at},
           {"entries", std::move(entries_json)}};
    std::ofstream out(path);
    if (!out) throw AuditError("cannot write reference db: " + path.string());
    out << j.dump();
}

ReferenceDB ReferenceDB::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw AuditError("cannot open reference db: " + path.string());
    json j = json::parse(in);
    ReferenceDB db;
    db.probe_set_id = j.value("probe_set_id", "");
    db.built_at = j.value("built_at", "");
    for (const auto& [model, probes] : j.at("entries").items()) {
        for (const auto& [probe_id, vectors] : probes.items()) {
            for (const auto& vec : vectors) {
                Embedding v(vec.size());
                for (int i = 0; i < int(vec.size()); ++i) v[i] = vec[i].get<double>();
                db.entries[model][std::stoi(probe_id)].push_back(std::move(v));
            }
        }
    }
    return db;
}

ClassifyResult classify(const ProbeEmbeddings& query, const ReferenceDB& db) {
    if (db.entries.empty()) throw AuditError("reference db is empty");
    if (query.empty()) throw AuditError("no query embeddings to classify");
    ClassifyResult best;
    bool first = true;
    // std::map iterates models in lexicographic order, so strict improvement
    // gives the smallest identifier on exact ties.
    for (const auto& [model, ref] : db.entries) {
        DistanceStats stats = mean_distance(query, ref);
        if (first || stats.mean < best.d_mean) {
            best = {model, stats.mean, stats.stddev};
            first = false;
        }
    }
    return best;
}

double baseline_distance(const ProbeEmbeddings& session_a, const ProbeEmbeddings& session_b) {
    if (session_a.empty() || session_b.empty())
        throw AuditError("baseline needs two non-empty official sessions");
    return mean_distance(session_a, session_b).mean;
}

std::string to_string(Color c) {
    switch (c) {
        case Color::green: return "green";
        case Color::yellow: return "yellow";
        case Color::red: return "red";
    }
    return "red";
}

FingerprintVerdict color_verdict(const std::string& claimed_model,
                                 const std::string& matched_model, double d_mean,
                                 double d_std, double baseline_d, double factor) {
    if (baseline_d < 0) throw AuditError("baseline distance must be non-negative");
    FingerprintVerdict v{claimed_model, matched_model, d_mean, d_std, baseline_d,
                         Color::red};
    if (matched_model == claimed_model)
        v.color = d_mean <= factor * baseline_d ? Color::green : Color::yellow;
    return v;
}

}  // namespace apiaudit::fingerprint
