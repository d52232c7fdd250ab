#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "apiaudit/inference.hpp"

namespace apiaudit::simharness {

/// Seeded template-grammar generator standing in for a real backend model.
struct Persona {
    std::string model_name;
    std::vector<std::string> vocabulary;  // derived from the model name
    double verbosity_mean = 36.0;         // words per response
    double verbosity_sd = 6.0;
    double refusal_rate = 0.0;
    double latency_mean_s = 0.020;
    double latency_sd_s = 0.002;
};

/// Deterministic persona for a model name; reasoning-styled names get a
/// higher verbosity so capability downgrades shift token counts.
Persona make_persona(const std::string& model_name);

/// Reproducible: same (persona, prompt, occurrence, seed) -> same text.
/// noise in [0,1] is the probability of drawing from the shared vocabulary
/// instead of the persona's own.
std::string persona_response(const Persona& persona, const std::string& prompt,
                             std::uint64_t seed, int occurrence, double noise);

/// Seeded latency draw for the same keying as persona_response.
double persona_latency_s(const Persona& persona, const std::string& prompt,
                         std::uint64_t seed, int occurrence);

enum class Behavior { honest, substitution, version_mismatch, capability_downgrade };

std::string to_string(Behavior b);
Behavior behavior_from_string(const std::string& s);

struct ScenarioSpec {
    std::string id;
    std::string claimed_model;
    std::string backend_persona;
    Behavior behavior = Behavior::honest;
    int n_samples = 100;
    double noise = 0.3;
    std::uint64_t seed = 1;

    bool honest() const { return behavior == Behavior::honest; }
    void validate() const;  // honest iff claimed == backend
};

std::vector<ScenarioSpec> load_scenarios(const std::filesystem::path& path);

/// Local endpoint set speaking the chat-completions wire protocol; each
/// scenario lives at /scenario/<id> and answers from its backend persona
/// regardless of the model field in the request.
class SimServer {
public:
    explicit SimServer(std::vector<ScenarioSpec> scenarios);
    ~SimServer();
    SimServer(const SimServer&) = delete;
    SimServer& operator=(const SimServer&) = delete;

    /// Binds and serves on a background thread. port 0 picks a free port.
    void start(int port = 0);
    void stop();
    int port() const;
    std::string base_url_for(const std::string& scenario_id) const;
    const std::vector<ScenarioSpec>& scenarios() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// The controlled-validation scenario grid: three honest and three deceptive
/// configurations spanning the GPT, Gemini, and DeepSeek families.
std::vector<ScenarioSpec> default_validation_grid();

/// Model family bucket for per-family metric splits.
std::string model_family(const std::string& model_name);

struct ValidationOptions {
    int cases_per_scenario = 100;
    int probes = 24;
    int ref_samples = 3;
    double noise = 0.3;  // committed default for the detection benchmark
    double distance_factor = 1.2;
    std::uint64_t seed = 7;
};

struct ValidationCase {
    std::string scenario_id;
    std::string family;
    bool truth_deceptive = false;
    bool predicted_deceptive = false;
};

struct ValidationOutcome {
    std::vector<ValidationCase> cases;
    inference::DetectionMetrics overall;
    std::map<std::string, inference::DetectionMetrics> per_family;
};

/// Seeded in-process run of the fingerprint pipeline over the scenario grid
/// with known ground truth; each case is an independent probing session.
ValidationOutcome run_validation(const std::vector<ScenarioSpec>& grid,
                                 const ValidationOptions& options);

/// Splits finished predictions into overall and per-family metrics.
ValidationOutcome evaluate_testbed(std::vector<ValidationCase> cases);

}  // namespace apiaudit::simharness
