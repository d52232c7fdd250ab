#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "apiaudit/disttest.hpp"
#include "apiaudit/errors.hpp"

using namespace apiaudit;

namespace {

// Brute-force unbiased MMD^2 with the position-wise agreement kernel over
// whitespace token prefixes, computed straight from the definition.
std::vector<std::string> tokens_of(const std::string& text, int max_len) {
    std::vector<std::string> tokens;
    std::istringstream in(text);
    std::string tok;
    while (int(tokens.size()) < max_len && in >> tok) tokens.push_back(tok);
    while (int(tokens.size()) < max_len) tokens.push_back("");  // pad
    return tokens;
}

double kernel(const std::vector<std::string>& x, const std::vector<std::string>& y) {
    int agree = 0;
    for (std::size_t p = 0; p < x.size(); ++p) agree += x[p] == y[p];
    return double(agree) / double(x.size());
}

double mmd2_oracle(const std::vector<std::string>& a, const std::vector<std::string>& b,
                   int max_len) {
    std::vector<std::vector<std::string>> ta, tb;
    for (const auto& s : a) ta.push_back(tokens_of(s, max_len));
    for (const auto& s : b) tb.push_back(tokens_of(s, max_len));
    const int n = int(ta.size()), m = int(tb.size());
    double k_aa = 0, k_bb = 0, k_ab = 0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (i != j) k_aa += kernel(ta[i], ta[j]);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            if (i != j) k_bb += kernel(tb[i], tb[j]);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) k_ab += kernel(ta[i], tb[j]);
    return k_aa / (double(n) * (n - 1)) + k_bb / (double(m) * (m - 1)) -
           2.0 * k_ab / (double(n) * m);
}

std::string random_sentence(std::mt19937_64& rng, const std::vector<std::string>& vocab,
                            int max_words) {
    int words = 1 + int(rng() % max_words);
    std::string out;
    for (int i = 0; i < words; ++i) {
        if (i > 0) out += ' ';
        out += vocab[rng() % vocab.size()];
    }
    return out;
}

double kappa_oracle(long long tt, long long tf, long long ft, long long ff) {
    double n = double(tt + tf + ft + ff);
    double po = double(tt + ff) / n;
    double pe = (double(tt + tf) * double(tt + ft) + double(ft + ff) * double(tf + ff)) /
                (n * n);
    if (pe >= 1.0) return 0.0;
    return (po - pe) / (1.0 - pe);
}

}  // namespace

TEST_CASE("config validation") {
    disttest::MetConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.permutations = 98;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.permutations = 99;
    cfg.alpha = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.alpha = 0.05;
    cfg.max_len = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("too few samples error") {
    disttest::MetConfig cfg;
    CHECK_THROWS_AS(disttest::met_test({"a"}, {"b", "c"}, cfg), AuditError);
    CHECK_THROWS_AS(disttest::met_test({"a", "b"}, {"c"}, cfg), AuditError);
}

TEST_CASE("statistic matches the brute-force kernel oracle") {
    std::mt19937_64 rng(404);
    std::vector<std::string> vocab{"red", "green", "blue", "tok", "pad", "x", "y"};
    disttest::MetConfig cfg;
    cfg.permutations = 99;
    cfg.max_len = 8;
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<std::string> a, b;
        int n = 3 + int(rng() % 6), m = 3 + int(rng() % 6);
        for (int i = 0; i < n; ++i) a.push_back(random_sentence(rng, vocab, 12));
        for (int i = 0; i < m; ++i) b.push_back(random_sentence(rng, vocab, 12));
        auto result = disttest::met_test(a, b, cfg);
        CHECK(result.statistic ==
              doctest::Approx(mmd2_oracle(a, b, cfg.max_len)).epsilon(1e-10));
        CHECK(result.n_official == n);
        CHECK(result.n_shadow == m);
    }
}

TEST_CASE("degenerate identical samples give a zero statistic") {
    std::vector<std::string> same(20, "the answer is 42");
    disttest::MetConfig cfg;
    cfg.permutations = 199;
    auto result = disttest::met_test(same, same, cfg);
    CHECK(result.statistic == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(!result.reject);
}

TEST_CASE("the same sample set on both sides does not reject") {
    std::vector<std::string> same;
    for (int i = 0; i < 20; ++i) same.push_back("the answer is " + std::to_string(i % 4));
    disttest::MetConfig cfg;
    cfg.permutations = 199;
    auto result = disttest::met_test(same, same, cfg);
    CHECK(!result.reject);
    CHECK(result.p_value > 0.05);
}

TEST_CASE("disjoint vocabularies give the smallest possible p-value") {
    std::vector<std::string> a, b;
    for (int i = 0; i < 25; ++i) {
        a.push_back("alpha beta gamma delta " + std::to_string(i));
        b.push_back("zig zag zip zap " + std::to_string(i + 100));
    }
    disttest::MetConfig cfg;
    cfg.permutations = 999;
    auto result = disttest::met_test(a, b, cfg);
    CHECK(result.p_value == doctest::Approx(1.0 / 1000.0).epsilon(1e-12));
    CHECK(result.reject);
    CHECK(result.effect_size > 0.0);
}

TEST_CASE("p-value is permutation-invariant under relabeling and seeded") {
    std::mt19937_64 rng(11);
    std::vector<std::string> vocab{"u", "v", "w", "z"};
    std::vector<std::string> a, b;
    for (int i = 0; i < 15; ++i) {
        a.push_back(random_sentence(rng, vocab, 6));
        b.push_back(random_sentence(rng, vocab, 6));
    }
    disttest::MetConfig cfg;
    cfg.permutations = 299;
    auto r1 = disttest::met_test(a, b, cfg);
    auto r2 = disttest::met_test(a, b, cfg);
    CHECK(r1.p_value == r2.p_value);  // same seed, same result
    cfg.rng_seed = 1234;
    auto r3 = disttest::met_test(a, b, cfg);
    CHECK(r3.p_value > 0.05);  // same distribution, different seed still accepts
}

TEST_CASE("p-value respects the add-one permutation bound") {
    std::mt19937_64 rng(21);
    std::vector<std::string> vocab{"p", "q"};
    disttest::MetConfig cfg;
    cfg.permutations = 99;
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<std::string> a, b;
        for (int i = 0; i < 6; ++i) {
            a.push_back(random_sentence(rng, vocab, 4));
            b.push_back(random_sentence(rng, vocab, 4));
        }
        auto result = disttest::met_test(a, b, cfg);
        CHECK(result.p_value >= 1.0 / 100.0);
        CHECK(result.p_value <= 1.0);
    }
}

TEST_CASE("cohen kappa matches the closed-form 2x2 oracle") {
    std::mt19937_64 rng(808);
    for (int trial = 0; trial < 200; ++trial) {
        int n = 2 + int(rng() % 100);
        std::vector<bool> a, b;
        long long tt = 0, tf = 0, ft = 0, ff = 0;
        for (int i = 0; i < n; ++i) {
            bool x = rng() % 3 != 0;
            bool y = rng() % 2 != 0;
            a.push_back(x);
            b.push_back(y);
            if (x && y) ++tt;
            else if (x) ++tf;
            else if (y) ++ft;
            else ++ff;
        }
        auto result = disttest::cohen_kappa(a, b);
        CHECK(result.kappa == doctest::Approx(kappa_oracle(tt, tf, ft, ff)).epsilon(1e-12));
        CHECK(result.total == n);
        CHECK(result.agree_count == tt + ff);
        CHECK(result.agreement_rate == doctest::Approx(double(tt + ff) / n));
    }
}

TEST_CASE("kappa is zero by definition at full expected agreement") {
    std::vector<bool> all_true(10, true);
    auto result = disttest::cohen_kappa(all_true, all_true);
    CHECK(result.agreement_rate == 1.0);
    CHECK(result.kappa == 0.0);  // pe == 1
}

TEST_CASE("kappa input validation") {
    CHECK_THROWS_AS(disttest::cohen_kappa({}, {}), AuditError);
    CHECK_THROWS_AS(disttest::cohen_kappa({true}, {true, false}), AuditError);
}
