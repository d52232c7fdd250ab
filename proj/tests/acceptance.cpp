// Acceptance gate: one pass/fail line per criterion, exit 0 only if all pass.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "apiaudit/bench.hpp"
#include "apiaudit/cli.hpp"
#include "apiaudit/disttest.hpp"
#include "apiaudit/econ.hpp"
#include "apiaudit/fingerprint.hpp"
#include "apiaudit/inference.hpp"
#include "apiaudit/simharness.hpp"
#include "apiaudit/stability.hpp"
#include "apiaudit/verdict.hpp"

using namespace apiaudit;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Checker {
    bool ok = true;
    std::string first_failure;
    void expect(bool cond, const std::string& what) {
        if (!cond && ok) {
            ok = false;
            first_failure = what;
        }
    }
};

// ---------------------------------------------------------------- criterion 1

struct Cell {
    std::string claimed;
    double baseline;
    std::string matched;
    double d;
    fingerprint::Color expected;
};

// The 24 published shadow cells (providers A, E, H per claimed model). The
// committed threshold factor for this fixture is 1.25.
const std::vector<Cell> kPublishedCells = {
    {"GPT-4o-mini-0718", 20.01, "gpt-4o-2024-05-13", 16.66, fingerprint::Color::red},
    {"GPT-4o-mini-0718", 20.01, "GPT-4o-mini-0718", 19.18, fingerprint::Color::green},
    {"GPT-4o-mini-0718", 20.01, "Qwen2.5-7B", 17.43, fingerprint::Color::red},
    {"gpt-5-2025-08-07", 13.14, "glm-4-9b-chat", 20.88, fingerprint::Color::red},
    {"gpt-5-2025-08-07", 13.14, "glm-4-9b-chat", 23.50, fingerprint::Color::red},
    {"gpt-5-2025-08-07", 13.14, "gpt-5-2025-08-07", 16.24, fingerprint::Color::green},
    {"gpt-5-mini-2025-08-07", 14.57, "gpt-5-mini-2025-08-07", 18.63,
     fingerprint::Color::yellow},
    {"gpt-5-mini-2025-08-07", 14.57, "gpt-5-mini-2025-08-07", 16.01,
     fingerprint::Color::green},
    {"gpt-5-mini-2025-08-07", 14.57, "gpt-5-2025-08-07", 18.04, fingerprint::Color::red},
    {"gemini-2.0-flash", 17.54, "gemini-2.5-flash", 17.02, fingerprint::Color::red},
    {"gemini-2.0-flash", 17.54, "gemini-2.5-flash", 14.10, fingerprint::Color::red},
    {"gemini-2.0-flash", 17.54, "gemini-2.0-flash", 18.49, fingerprint::Color::green},
    {"gemini-2.5-flash", 15.19, "gemini-2.5-flash", 19.78, fingerprint::Color::yellow},
    {"gemini-2.5-flash", 15.19, "gemini-2.5-flash", 15.41, fingerprint::Color::green},
    {"gemini-2.5-flash", 15.19, "gemini-2.5-flash", 17.51, fingerprint::Color::green},
    {"gemini-2.5-pro", 18.04, "gemini-2.5-pro", 18.04, fingerprint::Color::green},
    {"gemini-2.5-pro", 18.04, "gemini-2.5-pro", 17.37, fingerprint::Color::green},
    {"gemini-2.5-pro", 18.04, "gemini-2.5-pro", 17.66, fingerprint::Color::green},
    {"deepseek-chat", 11.83, "deepseek-v3-0324", 19.77, fingerprint::Color::red},
    {"deepseek-chat", 11.83, "deepseek-chat", 21.28, fingerprint::Color::yellow},
    {"deepseek-chat", 11.83, "gemma-2-9b-it", 23.40, fingerprint::Color::red},
    {"deepseek-reasoner", 17.04, "deepseek-chat", 19.02, fingerprint::Color::red},
    {"deepseek-reasoner", 17.04, "deepseek-reasoner", 21.19, fingerprint::Color::green},
    {"deepseek-reasoner", 17.04, "deepseek-chat", 22.68, fingerprint::Color::red},
};

bool criterion1(Checker& c) {
    constexpr double kFactor = 1.25;
    int red = 0, yellow = 0;
    for (const auto& cell : kPublishedCells) {
        auto v = fingerprint::color_verdict(cell.claimed, cell.matched, cell.d, 0.0,
                                            cell.baseline, kFactor);
        c.expect(v.color == cell.expected,
                 cell.claimed + " vs " + cell.matched + " D=" + std::to_string(cell.d));
        red += v.color == fingerprint::Color::red;
        yellow += v.color == fingerprint::Color::yellow;
    }
    c.expect(red == 11, "red count " + std::to_string(red));
    c.expect(yellow == 3, "yellow count " + std::to_string(yellow));
    c.expect(std::abs(100.0 * red / 24.0 - 45.83) <= 0.005, "red rate");
    c.expect(std::abs(100.0 * yellow / 24.0 - 12.50) <= 0.005, "yellow rate");
    return c.ok;
}

// ---------------------------------------------------------------- criterion 2

struct ConsistencyRow {
    std::string label;
    int total, both_correct, both_incorrect, official_only, shadow_only;
    double consistency_pct;
};

const std::vector<ConsistencyRow> kConsistencyRows = {
    {"medqa/gemini-2.5-flash/A", 1273, 448, 184, 619, 22, 49.65},
    {"medqa/gemini-2.5-flash/E", 1273, 450, 181, 617, 25, 49.57},
    {"medqa/gemini-2.5-flash/H", 1273, 446, 186, 621, 20, 49.65},
    {"medqa/gpt-5-mini/A", 1273, 981, 232, 24, 36, 95.29},
    {"medqa/gpt-5-mini/E", 1273, 949, 228, 56, 40, 92.46},
    {"medqa/gpt-5-mini/H", 1273, 977, 230, 28, 38, 94.82},
    {"medqa/deepseek-chat/A", 1273, 827, 280, 105, 61, 86.96},
    {"medqa/deepseek-chat/E", 1273, 905, 326, 27, 15, 96.70},
    {"medqa/deepseek-chat/H", 1273, 888, 313, 44, 28, 94.34},
    {"legal/gemini-2.5-flash/A", 571, 187, 116, 254, 14, 53.06},
    {"legal/gemini-2.5-flash/E", 571, 183, 116, 258, 14, 52.36},
    {"legal/gemini-2.5-flash/H", 571, 197, 115, 244, 15, 54.64},
    {"legal/gpt-5-mini/A", 571, 416, 133, 12, 10, 96.15},
    {"legal/gpt-5-mini/E", 571, 411, 128, 17, 15, 94.40},
    {"legal/gpt-5-mini/H", 571, 416, 128, 12, 15, 95.27},
    {"legal/deepseek-chat/A", 571, 367, 93, 84, 27, 80.56},
    {"legal/deepseek-chat/E", 571, 417, 100, 34, 20, 90.54},
    {"legal/deepseek-chat/H", 571, 427, 103, 24, 17, 92.82},
};

bool criterion2(Checker& c) {
    for (const auto& row : kConsistencyRows) {
        c.expect(row.both_correct + row.both_incorrect + row.official_only +
                         row.shadow_only ==
                     row.total,
                 row.label + " cells");
        double got =
            bench::consistency_pct(row.both_correct, row.both_incorrect, row.total);
        c.expect(std::abs(got - row.consistency_pct) <= 0.01 + 1e-12, row.label);
    }
    return c.ok;
}

// ---------------------------------------------------------------- criterion 3

struct SdRow {
    std::string label;
    double official;
    double a, e, h;
    stability::Band band_a, band_e, band_h;
};

constexpr auto BB = stability::Band::blue;
constexpr auto GG = stability::Band::green;
constexpr auto RR = stability::Band::red;

const std::vector<SdRow> kLatencySd = {
    {"gpt-4o-mini/aime", 42.71, 30.42, 27.96, 28.12, BB, BB, BB},
    {"gpt-4o-mini/gpqa", 2.19, 3.36, 2.63, 3.00, RR, RR, RR},
    {"gpt-5/aime", 189.04, 68.62, 229.20, 193.95, BB, RR, GG},
    {"gpt-5/gpqa", 32.39, 45.59, 40.90, 36.68, RR, RR, GG},
    {"gpt-5-mini/aime", 46.75, 89.06, 29.56, 38.58, RR, BB, GG},
    {"gpt-5-mini/gpqa", 12.18, 19.11, 15.39, 15.76, RR, RR, RR},
    {"gemini-2.0-flash/aime", 6.06, 5.46, 6.35, 5.86, GG, GG, GG},
    {"gemini-2.0-flash/gpqa", 1.76, 5.56, 3.69, 6.76, RR, RR, RR},
    {"gemini-2.5-flash/aime", 29.41, 86.24, 22.70, 51.03, RR, BB, RR},
    {"gemini-2.5-flash/gpqa", 21.30, 57.95, 23.86, 53.29, RR, GG, RR},
    {"gemini-2.5-pro/aime", 48.88, 122.61, 194.45, 231.95, RR, RR, RR},
    {"gemini-2.5-pro/gpqa", 19.11, 36.02, 22.83, 49.88, RR, GG, RR},
    {"deepseek-chat/aime", 9.18, 104.90, 12.75, 29.22, RR, RR, RR},
    {"deepseek-chat/gpqa", 10.19, 31.65, 12.00, 11.60, RR, GG, GG},
    {"deepseek-reasoner/aime", 100.56, 303.38, 115.82, 218.50, RR, GG, RR},
    {"deepseek-reasoner/gpqa", 77.73, 165.78, 113.34, 239.67, RR, RR, RR},
};

const std::vector<SdRow> kTokenSd = {
    {"gpt-4o-mini/aime", 2273.87, 472.75, 1598.74, 1585.51, BB, BB, BB},
    {"gpt-4o-mini/gpqa", 66.13, 83.53, 57.68, 132.32, RR, GG, RR},
    {"gpt-5/aime", 4065.04, 1311.57, 3919.61, 2152.53, BB, GG, BB},
    {"gpt-5/gpqa", 1598.09, 1457.36, 1396.30, 1594.97, GG, GG, GG},
    {"gpt-5-mini/aime", 3458.01, 2026.09, 1792.22, 2319.84, BB, BB, BB},
    {"gpt-5-mini/gpqa", 892.41, 1064.52, 883.13, 838.42, GG, GG, GG},
    {"gemini-2.0-flash/aime", 1243.80, 1242.84, 1311.17, 1231.42, GG, GG, GG},
    {"gemini-2.0-flash/gpqa", 384.25, 1090.25, 749.74, 969.43, RR, RR, RR},
    {"gemini-2.5-flash/aime", 8174.81, 16489.45, 6124.36, 14164.34, RR, BB, RR},
    {"gemini-2.5-flash/gpqa", 5856.16, 7029.59, 6595.46, 14464.05, RR, GG, RR},
    {"gemini-2.5-pro/aime", 3054.32, 1161.70, 3768.74, 2905.47, BB, RR, GG},
    {"gemini-2.5-pro/gpqa", 2637.50, 7430.27, 3556.55, 6878.14, RR, RR, RR},
    {"deepseek-chat/aime", 307.92, 492.85, 383.21, 1107.18, RR, RR, RR},
    {"deepseek-chat/gpqa", 305.67, 338.70, 360.34, 354.99, GG, GG, GG},
    {"deepseek-reasoner/aime", 3036.03, 9647.40, 3544.03, 3404.37, RR, GG, GG},
    {"deepseek-reasoner/gpqa", 2314.59, 6153.61, 3002.75, 2409.62, RR, RR, GG},
};

bool criterion3(Checker& c) {
    for (const auto* table : {&kLatencySd, &kTokenSd}) {
        for (const auto& row : *table) {
            c.expect(stability::band_for_ratio(row.a / row.official) == row.band_a,
                     row.label + "/A");
            c.expect(stability::band_for_ratio(row.e / row.official) == row.band_e,
                     row.label + "/E");
            c.expect(stability::band_for_ratio(row.h / row.official) == row.band_h,
                     row.label + "/H");
        }
    }
    return c.ok;
}

// ---------------------------------------------------------------- criterion 4

bool criterion4(Checker& c) {
    const double official = 14.84;
    const std::pair<double, double> rows[] = {{5.70, 0.38}, {5.35, 0.36}, {7.77, 0.52}};
    for (const auto& [value, factor] : rows)
        c.expect(std::abs(value / official - factor) <= 0.005 + 1e-12,
                 "relative factor for $" + std::to_string(value));
    auto range = econ::aggregate_cost_estimate(56, 50.0, 500.0, 40.0, 50.0);
    c.expect(std::abs(range.low - 114'800.0) < 1e-9, "aggregate low");
    c.expect(std::abs(range.high - 140'000.0) < 1e-9, "aggregate high");
    // The quoted figures $115k / $140k are these values to the nearest $5k.
    c.expect(std::abs(range.low - 115'000.0) <= 2'500.0, "low rounds to 115k");
    c.expect(std::abs(range.high - 140'000.0) <= 2'500.0, "high rounds to 140k");
    return c.ok;
}

// ---------------------------------------------------------------- criterion 5

std::vector<std::string> persona_samples(const simharness::Persona& persona,
                                         const std::string& prompt, int base_occurrence,
                                         int n, double noise, std::uint64_t seed) {
    std::vector<std::string> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i)
        out.push_back(
            simharness::persona_response(persona, prompt, seed, base_occurrence + i, noise));
    return out;
}

bool criterion5(Checker& c) {
    const int n = 500;
    disttest::MetConfig cfg;
    cfg.alpha = 0.05;
    cfg.permutations = 199;
    auto persona = simharness::make_persona("gpt-5");
    const std::string prompt = "summarize your training corpus";

    int null_rejections = 0;
    const int null_reps = 200;
    for (int rep = 0; rep < null_reps; ++rep) {
        cfg.rng_seed = 1000 + std::uint64_t(rep);
        auto official = persona_samples(persona, prompt, rep * 2 * n, n, 0.3, 5);
        auto shadow = persona_samples(persona, prompt, rep * 2 * n + n, n, 0.3, 5);
        if (disttest::met_test(official, shadow, cfg).reject) ++null_rejections;
    }
    double null_rate = 100.0 * null_rejections / double(null_reps);
    c.expect(null_rate >= 2.0 && null_rate <= 8.0,
             "null rejection rate " + std::to_string(null_rate) + "%");

    auto other = simharness::make_persona("glm-4-9b-chat");
    int power_rejections = 0;
    const int power_reps = 50;
    for (int rep = 0; rep < power_reps; ++rep) {
        cfg.rng_seed = 9000 + std::uint64_t(rep);
        // Disjoint vocabularies: noise 0 keeps each persona on its own words.
        auto official = persona_samples(persona, prompt, rep * n, n, 0.0, 5);
        auto shadow = persona_samples(other, prompt, rep * n, n, 0.0, 5);
        auto result = disttest::met_test(official, shadow, cfg);
        if (result.reject) ++power_rejections;
    }
    double power = 100.0 * power_rejections / double(power_reps);
    c.expect(power >= 95.0, "power " + std::to_string(power) + "%");
    return c.ok;
}

// ---------------------------------------------------------------- criterion 6

bool criterion6(Checker& c) {
    simharness::ValidationOptions options;  // committed defaults, noise 0.3
    options.cases_per_scenario = 100;
    auto outcome =
        simharness::run_validation(simharness::default_validation_grid(), options);
    c.expect(int(outcome.cases.size()) == 600,
             "case count " + std::to_string(outcome.cases.size()));
    c.expect(outcome.overall.accuracy_pct >= 90.0,
             "accuracy " + std::to_string(outcome.overall.accuracy_pct) + "%");
    c.expect(outcome.overall.fpr_pct.has_value(), "fpr available");
    if (outcome.overall.fpr_pct)
        c.expect(*outcome.overall.fpr_pct <= 5.0,
                 "fpr " + std::to_string(*outcome.overall.fpr_pct) + "%");
    return c.ok;
}

// ---------------------------------------------------------------- criterion 7

bool criterion7(Checker& c) {
    // OLS vs the normal equations, 100 random instances at 1e-9.
    std::mt19937_64 rng(424242);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::uniform_real_distribution<double> unif(-5.0, 5.0);
    for (int trial = 0; trial < 100; ++trial) {
        int p = 1 + int(rng() % 3);
        int n = p + 4 + int(rng() % 40);
        Eigen::MatrixXd X(n, p);
        Eigen::VectorXd y(n);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < p; ++j) X(i, j) = unif(rng);
            y[i] = 0.5 + X.row(i).sum() + noise(rng);
        }
        auto fit = inference::ols_fit(X, y);
        Eigen::MatrixXd Xi(n, p + 1);
        Xi.col(0).setOnes();
        Xi.rightCols(p) = X;
        Eigen::VectorXd beta = (Xi.transpose() * Xi).inverse() * Xi.transpose() * y;
        c.expect((fit.coefficients - beta).cwiseAbs().maxCoeff() < 1e-9,
                 "ols trial " + std::to_string(trial));
    }

    // Spearman vs a brute-force mid-rank oracle on tie-heavy data.
    auto rank_oracle = [](const std::vector<double>& v) {
        std::vector<double> r(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) {
            int smaller = 0, equal = 0;
            for (double o : v) {
                if (o < v[i]) ++smaller;
                if (o == v[i]) ++equal;
            }
            r[i] = 1.0 + smaller + (equal - 1) / 2.0;
        }
        return r;
    };
    std::uniform_int_distribution<int> small(0, 4);
    for (int trial = 0; trial < 50; ++trial) {
        std::size_t len = 6 + rng() % 20;
        std::vector<double> x(len), y(len);
        for (std::size_t i = 0; i < len; ++i) {
            x[i] = double(small(rng));
            y[i] = double(small(rng)) + 0.25 * x[i];
        }
        x[0] += 0.5;
        y[0] -= 0.5;
        auto got = inference::spearman(x, y);
        auto rx = rank_oracle(x), ry = rank_oracle(y);
        double mx = 0, my = 0;
        for (std::size_t i = 0; i < len; ++i) mx += rx[i], my += ry[i];
        mx /= double(len);
        my /= double(len);
        double num = 0, dx = 0, dy = 0;
        for (std::size_t i = 0; i < len; ++i) {
            num += (rx[i] - mx) * (ry[i] - my);
            dx += (rx[i] - mx) * (rx[i] - mx);
            dy += (ry[i] - my) * (ry[i] - my);
        }
        c.expect(std::abs(got.rho - num / std::sqrt(dx * dy)) < 1e-10,
                 "spearman trial " + std::to_string(trial));
    }

    // Kappa vs the closed-form 2x2 oracle.
    for (int trial = 0; trial < 100; ++trial) {
        std::size_t len = 4 + rng() % 40;
        std::vector<bool> a(len), b(len);
        for (std::size_t i = 0; i < len; ++i) {
            a[i] = rng() & 1;
            b[i] = rng() & 1;
        }
        auto res = disttest::cohen_kappa(a, b);
        double n11 = 0, n10 = 0, n01 = 0, n00 = 0;
        for (std::size_t i = 0; i < len; ++i) {
            if (a[i] && b[i]) ++n11;
            else if (a[i]) ++n10;
            else if (b[i]) ++n01;
            else ++n00;
        }
        double N = double(len);
        double po = (n11 + n00) / N;
        double pe = ((n11 + n10) * (n11 + n01) + (n00 + n01) * (n00 + n10)) / (N * N);
        double want = pe >= 1.0 ? 0.0 : (po - pe) / (1.0 - pe);
        c.expect(std::abs(res.kappa - want) < 1e-12, "kappa trial " + std::to_string(trial));
    }

    // Detection metrics reproduce the published (96.0, 3.0, 5.0) operating
    // point from the implied 600-case confusion counts.
    std::vector<bool> truth, pred;
    for (int i = 0; i < 300; ++i) {
        truth.push_back(false);
        pred.push_back(i < 9);  // 9 false positives
    }
    for (int i = 0; i < 300; ++i) {
        truth.push_back(true);
        pred.push_back(i >= 15);  // 15 false negatives
    }
    auto m = inference::detection_metrics(pred, truth);
    c.expect(std::abs(m.accuracy_pct - 96.0) < 1e-12, "accuracy 96.0");
    c.expect(m.fpr_pct && std::abs(*m.fpr_pct - 3.0) < 1e-12, "fpr 3.0");
    c.expect(m.fnr_pct && std::abs(*m.fnr_pct - 5.0) < 1e-12, "fnr 5.0");
    return c.ok;
}

// ---------------------------------------------------------------- criterion 8

verdict::StageInputs clean_inputs() {
    verdict::StageInputs in;
    in.fingerprint = fingerprint::color_verdict("gpt-5", "gpt-5", 8.0, 1.0, 10.0, 1.2);
    disttest::MetResult met;
    met.p_value = 0.4;
    met.n_official = met.n_shadow = 500;
    in.met = met;
    verdict::StabilityInputs st;
    st.accuracy_sd_pp = 2.0;
    st.latency_cv = 0.1;
    st.sessions = 3;
    in.stability = st;
    verdict::ComplianceRecord rec;
    rec.legal_entity_disclosed = rec.registration_id_verified = rec.legal_docs_present =
        true;
    rec.provenance_verifiable = true;
    in.compliance = rec;
    return in;
}

bool criterion8(Checker& c) {
    verdict::Thresholds th;

    // Monotonicity: the verdict is exactly the OR over independent stage flags.
    for (int mask = 0; mask < 16; ++mask) {
        auto in = clean_inputs();
        if (mask & 1)
            in.fingerprint = fingerprint::color_verdict("gpt-5", "other", 30, 1, 10, 1.2);
        if (mask & 2) in.met->p_value = 0.01;
        if (mask & 4) in.stability->latency_cv = 0.4;
        if (mask & 8) in.compliance->provenance_verifiable = false;
        auto report = verdict::run_protocol("e", in, th);
        c.expect(report.avoid() == (mask != 0), "mask " + std::to_string(mask));
        c.expect(report.stage1_fingerprint.flag == bool(mask & 1), "stage1 mask");
        c.expect(report.stage2_met.flag == bool(mask & 2), "stage2 mask");
        c.expect(report.stage3_stability.flag == bool(mask & 4), "stage3 mask");
        c.expect(report.stage4_compliance.flag == bool(mask & 8), "stage4 mask");
    }

    // Fail-closed: each missing stage flags on its own.
    for (int drop = 0; drop < 4; ++drop) {
        auto in = clean_inputs();
        if (drop == 0) in.fingerprint.reset();
        if (drop == 1) in.met.reset();
        if (drop == 2) in.stability.reset();
        if (drop == 3) in.compliance.reset();
        c.expect(verdict::run_protocol("e", in, th).avoid(),
                 "fail-closed stage " + std::to_string(drop));
    }

    // Boundaries: 1.2x inclusive-green, alpha inclusive-reject, 5 pp and 0.15
    // exclusive.
    c.expect(fingerprint::color_verdict("m", "m", 12.0, 0, 10.0, 1.2).color ==
                 fingerprint::Color::green,
             "1.2x boundary green");
    c.expect(fingerprint::color_verdict("m", "m", std::nextafter(12.0, 13.0), 0, 10.0, 1.2)
                     .color == fingerprint::Color::yellow,
             "above 1.2x yellow");
    auto in = clean_inputs();
    in.met->p_value = th.alpha;
    c.expect(verdict::run_protocol("e", in, th).stage2_met.flag, "p == alpha flags");
    in.met->p_value = std::nextafter(th.alpha, 1.0);
    c.expect(!verdict::run_protocol("e", in, th).stage2_met.flag, "p just above passes");
    in = clean_inputs();
    in.stability->accuracy_sd_pp = 5.0;
    in.stability->latency_cv = 0.15;
    c.expect(!verdict::run_protocol("e", in, th).stage3_stability.flag,
             "5.0 pp / 0.15 pass");
    in.stability->accuracy_sd_pp = std::nextafter(5.0, 6.0);
    c.expect(verdict::run_protocol("e", in, th).stage3_stability.flag, "above 5.0 pp flags");
    in.stability->accuracy_sd_pp = 5.0;
    in.stability->latency_cv = std::nextafter(0.15, 1.0);
    c.expect(verdict::run_protocol("e", in, th).stage3_stability.flag, "above 0.15 flags");
    return c.ok;
}

// ---------------------------------------------------------------- criterion 9

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

int run_audit_once(int port, const fs::path& out_dir, const fs::path& config_path) {
    std::vector<simharness::ScenarioSpec> grid;
    for (const char* id : {"off", "sh"}) {
        simharness::ScenarioSpec s;
        s.id = id;
        s.claimed_model = "gpt-5";
        s.backend_persona = "gpt-5";
        s.behavior = simharness::Behavior::honest;
        grid.push_back(s);
    }
    simharness::SimServer server(std::move(grid));
    server.start(port);
    int rc = cli::run_cli({"audit", "run", "--config", config_path.string(), "--out",
                           out_dir.string(), "--parallel", "2"});
    server.stop();
    return rc;
}

bool criterion9(Checker& c) {
    fs::path tmp =
        fs::temp_directory_path() / ("apiaudit_accept_" + std::to_string(::getpid()));
    fs::remove_all(tmp);
    fs::create_directories(tmp);
    fs::path probes = tmp / "probes.txt";
    {
        std::ofstream out(probes);
        for (int i = 0; i < 12; ++i)
            out << "probe " << i << " describe facet " << i << "\n";
    }

    // A fixed port keeps the two configs byte-identical; probe a few
    // candidates in case one is taken.
    int port = 0;
    for (int candidate : {45917, 45931, 45947, 45961}) {
        try {
            simharness::SimServer probe_server({});
            probe_server.start(candidate);
            probe_server.stop();
            port = candidate;
            break;
        } catch (const std::exception&) {
        }
    }
    c.expect(port != 0, "no free fixed port");
    if (port == 0) return false;

    std::string base = "http://127.0.0.1:" + std::to_string(port) + "/scenario/";
    json config{
        {"endpoints",
         json::array({{{"id", "off"}, {"base_url", base + "off"},
                       {"claimed_model", "gpt-5"}, {"role", "official"}},
                      {{"id", "sh"}, {"base_url", base + "sh"},
                       {"claimed_model", "gpt-5"}, {"role", "shadow"}}})},
        {"probe_set", probes.string()},
        {"sessions", 3},
        {"met", {{"alpha", 0.05}, {"permutations", 199}, {"samples", 40}, {"rng_seed", 9}}},
        {"thresholds", {{"distance_factor", 1.2}, {"latency_cv", 0.5}}},
        {"compliance",
         {{"*",
           {{"legal_entity_disclosed", true}, {"registration_id_verified", true},
            {"legal_docs_present", true}, {"payee_type", "company"},
            {"provenance_verifiable", true}}}}},
        {"output_dir", (tmp / "unused").string()}};
    fs::path config_path = tmp / "audit.json";
    {
        std::ofstream out(config_path);
        out << config.dump(2);
    }

    int rc1 = run_audit_once(port, tmp / "run1", config_path);
    int rc2 = run_audit_once(port, tmp / "run2", config_path);
    c.expect(rc1 == cli::kExitPass, "first run exit " + std::to_string(rc1));
    c.expect(rc2 == cli::kExitPass, "second run exit " + std::to_string(rc2));
    for (const char* name : {"report_sh.json", "report_sh.md", "reference_db.json"}) {
        std::string a = slurp(tmp / "run1" / name);
        std::string b = slurp(tmp / "run2" / name);
        c.expect(!a.empty(), std::string(name) + " written");
        c.expect(a == b, std::string(name) + " differs between runs");
    }
    fs::remove_all(tmp);
    return c.ok;
}

// --------------------------------------------------------------------- main

struct Criterion {
    std::string name;
    std::function<bool(Checker&)> fn;
};

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {"1 fingerprint color fixture", criterion1},
        {"2 consistency fixture", criterion2},
        {"3 stability band fixture", criterion3},
        {"4 economics fixture", criterion4},
        {"5 equality-test calibration", criterion5},
        {"6 testbed detection", criterion6},
        {"7 statistical oracles", criterion7},
        {"8 protocol semantics", criterion8},
        {"9 audit determinism", criterion9},
    };
    int failures = 0;
    for (const auto& criterion : criteria) {
        auto start = std::chrono::steady_clock::now();
        Checker checker;
        bool ok = false;
        std::string error;
        try {
            ok = criterion.fn(checker);
        } catch (const std::exception& e) {
            error = e.what();
        }
        double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (ok) {
            std::printf("criterion %s: PASS (%.2fs)\n", criterion.name.c_str(), secs);
        } else {
            ++failures;
            std::printf("criterion %s: FAIL (%.2fs) -- %s\n", criterion.name.c_str(), secs,
                        error.empty() ? checker.first_failure.c_str() : error.c_str());
        }
    }
    return failures == 0 ? 0 : 1;
}
