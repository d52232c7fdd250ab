#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace apiaudit::disttest {

struct MetConfig {
    double alpha = 0.05;
    int permutations = 1000;  // >= 99
    int max_len = 50;         // token-prefix length the kernel sees
    std::uint64_t rng_seed = 42;

    void validate() const;
};

struct MetResult {
    double statistic = 0.0;    // unbiased MMD^2 under the Hamming kernel
    double effect_size = 0.0;  // statistic centered on the permutation null
    double p_value = 1.0;
    bool reject = false;
    int n_official = 0;
    int n_shadow = 0;
};

/// Two-sample permutation test of distributional equality over whitespace
/// token prefixes. One-sided: large statistic indicates inequality.
MetResult met_test(const std::vector<std::string>& official_samples,
                   const std::vector<std::string>& shadow_samples, const MetConfig& cfg);

struct AgreementResult {
    int agree_count = 0;
    int total = 0;
    double agreement_rate = 0.0;
    double kappa = 0.0;
};

/// Chance-corrected agreement over the 2x2 confusion table. Kappa is 0 by
/// definition when expected agreement equals 1.
AgreementResult cohen_kappa(const std::vector<bool>& labels_a,
                            const std::vector<bool>& labels_b);

}  // namespace apiaudit::disttest
