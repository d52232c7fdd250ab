#include "apiaudit/disttest.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <string_view>
#include <unordered_map>

#include "apiaudit/errors.hpp"

namespace apiaudit::disttest {

void MetConfig::validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must be in (0,1)");
    if (permutations < 99) throw ConfigError("permutations must be >= 99");
    if (max_len < 1) throw ConfigError("max_len must be >= 1");
}

namespace {

// Pooled samples encoded position-wise: codes[i][p] is a small integer id for
// sample i's token at position p (0 is the padding symbol). Per-position
// vocabularies let the MMD sums collapse to count statistics, so each
// permutation costs O(N * L) instead of O(N^2).
struct EncodedPool {
    std::vector<std::vector<int>> codes;   // N x L
    std::vector<int> vocab_sizes;          // per position, including pad
    int max_len = 0;
};

std::vector<std::string_view> tokenize_prefix(std::string_view text, int max_len) {
    std::vector<std::string_view> tokens;
    std::size_t i = 0;
    while (i < text.size() && int(tokens.size()) < max_len) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        std::size_t start = i;
        while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        if (i > start) tokens.push_back(text.substr(start, i - start));
    }
    return tokens;
}

EncodedPool encode_pool(const std::vector<std::string>& a, const std::vector<std::string>& b,
                        int max_len) {
    EncodedPool pool;
    pool.max_len = max_len;
    pool.codes.reserve(a.size() + b.size());
    std::vector<std::unordered_map<std::string_view, int>> vocab(max_len);
    pool.vocab_sizes.assign(max_len, 1);  // id 0 is the pad symbol

    auto encode = [&](const std::string& text) {
        auto tokens = tokenize_prefix(text, max_len);
        std::vector<int> row(max_len, 0);
        for (int p = 0; p < int(tokens.size()); ++p) {
            auto [it, inserted] = vocab[p].try_emplace(tokens[p], pool.vocab_sizes[p]);
            if (inserted) ++pool.vocab_sizes[p];
            row[p] = it->second;
        }
        pool.codes.push_back(std::move(row));
    };
    // The vocab maps hold views into the caller's strings, which outlive this
    // function's callers' use of the pool.
    for (const auto& s : a) encode(s);
    for (const auto& s : b) encode(s);
    return pool;
}

// Unbiased MMD^2 for the split where `in_a` marks group-A members.
// k(x, y) = (1/L) * #{positions where tokens agree}; k(x, x) = 1.
double mmd2_for_split(const EncodedPool& pool, const std::vector<char>& in_a, int n, int m,
                      std::vector<std::vector<long long>>& count_buf) {
    const int L = pool.max_len;
    for (int p = 0; p < L; ++p) {
        count_buf[p].assign(pool.vocab_sizes[p], 0);
    }
    // Per-position totals could be cached, but they are cheap relative to the
    // per-permutation membership pass.
    std::vector<std::vector<long long>> totals(L);
    for (int p = 0; p < L; ++p) totals[p].assign(pool.vocab_sizes[p], 0);
    for (std::size_t i = 0; i < pool.codes.size(); ++i) {
        for (int p = 0; p < L; ++p) {
            ++totals[p][pool.codes[i][p]];
            if (in_a[i]) ++count_buf[p][pool.codes[i][p]];
        }
    }
    long long sum_aa = 0, sum_bb = 0, sum_ab = 0;  // position-agreement counts
    for (int p = 0; p < L; ++p) {
        const auto& ca = count_buf[p];
        const auto& tot = totals[p];
        for (std::size_t v = 0; v < ca.size(); ++v) {
            long long na = ca[v];
            long long nb = tot[v] - na;
            sum_aa += na * na;
            sum_bb += nb * nb;
            sum_ab += na * nb;
        }
    }
    // Convert agreement counts to kernel sums (divide by L) and drop the
    // diagonal from the within-group terms.
    double k_aa = double(sum_aa) / L - n;  // k(x,x) = 1 for each of n samples
    double k_bb = double(sum_bb) / L - m;
    double k_ab = double(sum_ab) / L;
    return k_aa / (double(n) * (n - 1)) + k_bb / (double(m) * (m - 1)) -
           2.0 * k_ab / (double(n) * m);
}

}  // namespace

MetResult met_test(const std::vector<std::string>& official_samples,
                   const std::vector<std::string>& shadow_samples, const MetConfig& cfg) {
    cfg.validate();
    const int n = int(official_samples.size());
    const int m = int(shadow_samples.size());
    if (n < 2 || m < 2) throw AuditError("met_test needs at least 2 samples per side");

    EncodedPool pool = encode_pool(official_samples, shadow_samples, cfg.max_len);
    const int total = n + m;

    std::vector<std::vector<long long>> count_buf(cfg.max_len);
    std::vector<char> in_a(total, 0);
    for (int i = 0; i < n; ++i) in_a[i] = 1;
    const double observed = mmd2_for_split(pool, in_a, n, m, count_buf);

    std::mt19937_64 rng(cfg.rng_seed);
    std::vector<int> indices(total);
    std::iota(indices.begin(), indices.end(), 0);

    int geq = 0;
    double null_sum = 0.0;
    for (int b = 0; b < cfg.permutations; ++b) {
        std::shuffle(indices.begin(), indices.end(), rng);
        std::fill(in_a.begin(), in_a.end(), 0);
        for (int i = 0; i < n; ++i) in_a[indices[i]] = 1;
        double stat = mmd2_for_split(pool, in_a, n, m, count_buf);
        null_sum += stat;
        if (stat >= observed - 1e-12) ++geq;
    }

    MetResult result;
    result.statistic = observed;
    result.effect_size = observed - null_sum / double(cfg.permutations);
    result.p_value = double(1 + geq) / double(cfg.permutations + 1);
    result.reject = result.p_value <= cfg.alpha;
    result.n_official = n;
    result.n_shadow = m;
    return result;
}

AgreementResult cohen_kappa(const std::vector<bool>& labels_a,
                            const std::vector<bool>& labels_b) {
    if (labels_a.size() != labels_b.size())
        throw AuditError("cohen_kappa: label vectors differ in length");
    if (labels_a.empty()) throw AuditError("cohen_kappa: empty label vectors");

    long long tt = 0, tf = 0, ft = 0, ff = 0;
    for (std::size_t i = 0; i < labels_a.size(); ++i) {
        if (labels_a[i] && labels_b[i]) ++tt;
        else if (labels_a[i]) ++tf;
        else if (labels_b[i]) ++ft;
        else ++ff;
    }
    const double total = double(labels_a.size());
    AgreementResult r;
    r.total = int(labels_a.size());
    r.agree_count = int(tt + ff);
    r.agreement_rate = double(r.agree_count) / total;
    const double pe = (double(tt + tf) * double(tt + ft) +
                       double(ft + ff) * double(tf + ff)) /
                      (total * total);
    r.kappa = pe >= 1.0 ? 0.0 : (r.agreement_rate - pe) / (1.0 - pe);
    return r;
}

}  // namespace apiaudit::disttest
