#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "apiaudit/trace.hpp"

namespace apiaudit::fingerprint {

inline constexpr int kEmbeddingDim = 1024;

/// L2-normalized non-negative feature vector; all-zero sentinel for empty text.
using Embedding = Eigen::VectorXd;

/// Deterministic default embedding: character trigram multiset, feature-hashed
/// into 1024 buckets, term-frequency weighted, L2 normalized.
Embedding embed(std::string_view text);

/// Pluggable embedding backend. The trigram hasher is the default; an
/// external HTTP service can stand in when a learned encoder is available.
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual Embedding embed(std::string_view text) const = 0;
};

class TrigramEmbeddingProvider final : public EmbeddingProvider {
public:
    Embedding embed(std::string_view text) const override;
};

/// POSTs {"texts": [...]} to <base_url>/embed, expects {"vectors": [[...]]}.
class HttpEmbeddingProvider final : public EmbeddingProvider {
public:
    explicit HttpEmbeddingProvider(std::string base_url);
    Embedding embed(std::string_view text) const override;

private:
    std::string base_url_;
};

/// probe_id -> one embedding per recorded sample.
using ProbeEmbeddings = std::map<int, std::vector<Embedding>>;

/// Embeds the successful traces of one endpoint, grouped by probe.
ProbeEmbeddings embed_traces(const std::vector<trace::ProbeTrace>& traces,
                             const EmbeddingProvider& provider = TrigramEmbeddingProvider{});

struct DistanceStats {
    double mean = 0.0;    // D on the 0..100 scale
    double stddev = 0.0;  // sample standard deviation across probes
    int probes_used = 0;
    int probes_skipped = 0;  // missing on either side
};

/// Per-probe distance is 100 * (1 - best cosine similarity over reference
/// samples); D_mean / D_std are mean and sample SD across probes.
DistanceStats mean_distance(const ProbeEmbeddings& query, const ProbeEmbeddings& ref);

/// Reference responses per model, built from official endpoints or personas.
struct ReferenceDB {
    std::string probe_set_id;
    std::string built_at;
    std::map<std::string, ProbeEmbeddings> entries;

    void save(const std::filesystem::path& path) const;
    static ReferenceDB load(const std::filesystem::path& path);
};

struct ClassifyResult {
    std::string matched_model;
    double d_mean = 0.0;
    double d_std = 0.0;
};

/// Nearest model by D_mean; ties broken by lexicographically smallest id.
ClassifyResult classify(const ProbeEmbeddings& query, const ReferenceDB& db);

/// Official self-distance between two disjoint sessions; the yardstick the
/// distance-factor rule scales.
double baseline_distance(const ProbeEmbeddings& session_a, const ProbeEmbeddings& session_b);

enum class Color { green, yellow, red };

std::string to_string(Color c);

struct FingerprintVerdict {
    std::string claimed_model;
    std::string matched_model;
    double d_mean = 0.0;
    double d_std = 0.0;
    double baseline_d = 0.0;
    Color color = Color::red;
};

/// Red on identity mismatch; otherwise green iff D_mean <= factor * baseline
/// (boundary inclusive), yellow above.
FingerprintVerdict color_verdict(const std::string& claimed_model,
                                 const std::string& matched_model, double d_mean,
                                 double d_std, double baseline_d, double factor = 1.2);

}  // namespace apiaudit::fingerprint
