#include "apiaudit/simharness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "apiaudit/errors.hpp"
#include "apiaudit/fingerprint.hpp"
#include "apiaudit/wire.hpp"

namespace apiaudit::simharness {

using nlohmann::json;

namespace {

std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 1469598103934665603ull) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
    h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    return h;
}

// Pronounceable synthetic word from an RNG.
std::string synth_word(std::mt19937_64& rng) {
    static constexpr const char* kOnsets[] = {"b", "d", "f", "g", "k", "l", "m", "n",
                                              "p", "r", "s", "t", "v", "z", "st", "tr"};
    static constexpr const char* kVowels[] = {"a", "e", "i", "o", "u", "ai", "ou"};
    std::uniform_int_distribution<int> syllables(2, 4);
    std::uniform_int_distribution<std::size_t> onset(0, std::size(kOnsets) - 1);
    std::uniform_int_distribution<std::size_t> vowel(0, std::size(kVowels) - 1);
    std::string word;
    int n = syllables(rng);
    for (int i = 0; i < n; ++i) {
        word += kOnsets[onset(rng)];
        word += kVowels[vowel(rng)];
    }
    return word;
}

std::vector<std::string> synth_vocabulary(std::uint64_t seed, std::size_t count) {
    std::mt19937_64 rng(seed);
    std::vector<std::string> vocab;
    vocab.reserve(count);
    while (vocab.size() < count) {
        std::string w = synth_word(rng);
        if (std::find(vocab.begin(), vocab.end(), w) == vocab.end())
            vocab.push_back(std::move(w));
    }
    return vocab;
}

// Vocabulary shared across every persona; the noise parameter dials how much
// of a response is drawn from it.
const std::vector<std::string>& shared_vocabulary() {
    static const std::vector<std::string> vocab = synth_vocabulary(0xC0FFEEull, 400);
    return vocab;
}

bool reasoning_styled(const std::string& model_name) {
    std::string lower;
    for (char c : model_name) lower += char(std::tolower(static_cast<unsigned char>(c)));
    return lower.find("reasoner") != std::string::npos ||
           lower.find("thinking") != std::string::npos ||
           lower.find("-pro") != std::string::npos;
}

}  // namespace

Persona make_persona(const std::string& model_name) {
    Persona p;
    p.model_name = model_name;
    p.vocabulary = synth_vocabulary(fnv1a(model_name), 160);
    std::mt19937_64 rng(fnv1a(model_name, 0xABCDull));
    p.verbosity_mean = 30.0 + double(rng() % 5) * 2.0;
    if (reasoning_styled(model_name)) p.verbosity_mean = 90.0;
    p.verbosity_sd = p.verbosity_mean / 6.0;
    p.refusal_rate = 0.0;
    p.latency_mean_s = 0.020;
    p.latency_sd_s = 0.002;
    return p;
}

std::string persona_response(const Persona& persona, const std::string& prompt,
                             std::uint64_t seed, int occurrence, double noise) {
    std::uint64_t key = mix(mix(mix(fnv1a(persona.model_name), fnv1a(prompt)),
                                std::uint64_t(occurrence)),
                            seed);
    std::mt19937_64 rng(key);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    if (persona.refusal_rate > 0 && unit(rng) < persona.refusal_rate)
        return "I cannot help with that request.";

    std::normal_distribution<double> length_dist(persona.verbosity_mean,
                                                 persona.verbosity_sd);
    int length = std::max(5, int(std::lround(length_dist(rng))));
    const auto& shared = shared_vocabulary();

    // Head-heavy draws concentrated on a prompt-specific slice of the
    // vocabulary: the same (persona, prompt) pair keeps reusing the same
    // signature words, so response length does not dominate similarity.
    auto draw = [&](const std::vector<std::string>& vocab, std::uint64_t rotate) {
        double u = unit(rng);
        std::size_t idx = std::size_t(double(vocab.size()) * u * u * u);
        if (idx >= vocab.size()) idx = vocab.size() - 1;
        return vocab[(idx + rotate) % vocab.size()];
    };
    const std::uint64_t own_rotate = fnv1a(prompt) % persona.vocabulary.size();
    const std::uint64_t shared_rotate = fnv1a(prompt, 0x51ull) % shared.size();

    std::string text;
    for (int i = 0; i < length; ++i) {
        if (i > 0) text += ' ';
        text += unit(rng) < noise ? draw(shared, shared_rotate)
                                  : draw(persona.vocabulary, own_rotate);
    }
    return text;
}

double persona_latency_s(const Persona& persona, const std::string& prompt,
                         std::uint64_t seed, int occurrence) {
    std::uint64_t key = mix(mix(mix(fnv1a(persona.model_name), fnv1a(prompt)),
                                std::uint64_t(occurrence)),
                            mix(seed, 0x17ull));
    std::mt19937_64 rng(key);
    std::normal_distribution<double> dist(persona.latency_mean_s, persona.latency_sd_s);
    return std::max(0.001, dist(rng));
}

std::string to_string(Behavior b) {
    switch (b) {
        case Behavior::honest: return "honest";
        case Behavior::substitution: return "substitution";
        case Behavior::version_mismatch: return "version_mismatch";
        case Behavior::capability_downgrade: return "capability_downgrade";
    }
    return "honest";
}

Behavior behavior_from_string(const std::string& s) {
    if (s == "honest") return Behavior::honest;
    if (s == "substitution") return Behavior::substitution;
    if (s == "version_mismatch") return Behavior::version_mismatch;
    if (s == "capability_downgrade") return Behavior::capability_downgrade;
    throw ConfigError("unknown scenario behavior: " + s);
}

void ScenarioSpec::validate() const {
    if (n_samples < 1) throw ConfigError("scenario n_samples must be >= 1");
    if (noise < 0 || noise > 1) throw ConfigError("scenario noise must be in [0,1]");
    const bool matches = claimed_model == backend_persona;
    if (matches != (behavior == Behavior::honest))
        throw ConfigError("scenario '" + id +
                          "': behavior=honest iff claimed model equals backend persona");
}

std::vector<ScenarioSpec> load_scenarios(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open scenario file: " + path.string());
    json j = json::parse(in);
    std::vector<ScenarioSpec> scenarios;
    for (const auto& item : j) {
        ScenarioSpec s;
        s.id = item.at("id").get<std::string>();
        s.claimed_model = item.at("claimed_model").get<std::string>();
        s.backend_persona = item.at("backend_persona").get<std::string>();
        s.behavior = behavior_from_string(item.at("behavior").get<std::string>());
        s.n_samples = item.value("n_samples", 100);
        s.noise = item.value("noise", 0.3);
        s.seed = item.value("seed", std::uint64_t{1});
        s.validate();
        scenarios.push_back(std::move(s));
    }
    return scenarios;
}

struct SimServer::Impl {
    struct ScenarioState {
        ScenarioSpec spec;
        Persona backend;
        std::map<std::string, int> occurrences;  // per-prompt, mutex-guarded
    };

    std::map<std::string, ScenarioState> states;
    httplib::Server server;
    std::thread thread;
    std::mutex mutex;
    int bound_port = 0;

    void handle(const httplib::Request& req, httplib::Response& res) {
        const std::string scenario_id = req.matches[1];
        auto it = states.find(scenario_id);
        if (it == states.end()) {
            res.status = 404;
            res.set_content(R"({"error": "unknown scenario"})", "application/json");
            return;
        }
        auto& state = it->second;

        json body;
        try {
            body = json::parse(req.body);
        } catch (const json::exception&) {
            res.status = 400;
            res.set_content(R"({"error": "bad json"})", "application/json");
            return;
        }
        std::string prompt;
        if (body.contains("messages") && !body["messages"].empty())
            prompt = body["messages"].back().value("content", "");

        int occurrence;
        {
            std::lock_guard lock(mutex);
            occurrence = state.occurrences[prompt]++;
        }
        const std::string text = persona_response(state.backend, prompt, state.spec.seed,
                                                  occurrence, state.spec.noise);
        const double delay =
            persona_latency_s(state.backend, prompt, state.spec.seed, occurrence);
        std::this_thread::sleep_for(std::chrono::duration<double>(delay));

        json response{
            {"id", "sim-" + scenario_id},
            {"object", "chat.completion"},
            {"model", body.value("model", state.spec.claimed_model)},
            {"choices",
             json::array({{{"index", 0},
                           {"message", {{"role", "assistant"}, {"content", text}}},
                           {"finish_reason", "stop"}}})},
            {"usage",
             {{"prompt_tokens", wire::whitespace_token_count(prompt)},
              {"completion_tokens", wire::whitespace_token_count(text)},
              {"total_tokens",
               wire::whitespace_token_count(prompt) + wire::whitespace_token_count(text)}}}};
        res.set_content(response.dump(), "application/json");
    }
};

SimServer::SimServer(std::vector<ScenarioSpec> scenarios) : impl_(new Impl) {
    for (auto& s : scenarios) {
        s.validate();
        Impl::ScenarioState state;
        state.backend = make_persona(s.backend_persona);
        state.spec = s;
        impl_->states.emplace(s.id, std::move(state));
    }
    impl_->server.Post(R"(/scenario/([^/]+)/chat/completions)",
                       [this](const httplib::Request& req, httplib::Response& res) {
                           impl_->handle(req, res);
                       });
}

SimServer::~SimServer() { stop(); }

void SimServer::start(int port) {
    if (port == 0) {
        impl_->bound_port = impl_->server.bind_to_any_port("127.0.0.1");
        if (impl_->bound_port <= 0) throw AuditError("sim server: cannot bind a port");
    } else {
        if (!impl_->server.bind_to_port("127.0.0.1", port))
            throw AuditError("sim server: port " + std::to_string(port) +
                             " already bound");
        impl_->bound_port = port;
    }
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
}

void SimServer::stop() {
    if (impl_ && impl_->server.is_running()) impl_->server.stop();
    if (impl_ && impl_->thread.joinable()) impl_->thread.join();
}

int SimServer::port() const { return impl_->bound_port; }

std::string SimServer::base_url_for(const std::string& scenario_id) const {
    return "http://127.0.0.1:" + std::to_string(impl_->bound_port) + "/scenario/" +
           scenario_id;
}

const std::vector<ScenarioSpec>& SimServer::scenarios() const {
    static thread_local std::vector<ScenarioSpec> cache;
    cache.clear();
    for (const auto& [id, state] : impl_->states) cache.push_back(state.spec);
    return cache;
}

std::vector<ScenarioSpec> default_validation_grid() {
    auto scenario = [](std::string id, std::string claimed, std::string backend,
                       Behavior behavior) {
        ScenarioSpec s;
        s.id = std::move(id);
        s.claimed_model = std::move(claimed);
        s.backend_persona = std::move(backend);
        s.behavior = behavior;
        return s;
    };
    return {
        scenario("honest-gpt5", "gpt-5", "gpt-5", Behavior::honest),
        scenario("honest-gemini20", "gemini-2.0-flash", "gemini-2.0-flash",
                 Behavior::honest),
        scenario("honest-deepseek-r", "deepseek-reasoner", "deepseek-reasoner",
                 Behavior::honest),
        scenario("subst-gpt5", "gpt-5", "glm-4-9b-chat", Behavior::substitution),
        scenario("version-gemini", "gemini-2.0-flash", "gemini-2.5-flash",
                 Behavior::version_mismatch),
        scenario("downgrade-deepseek", "deepseek-reasoner", "deepseek-chat",
                 Behavior::capability_downgrade),
    };
}

std::string model_family(const std::string& model_name) {
    std::string lower;
    for (char c : model_name) lower += char(std::tolower(static_cast<unsigned char>(c)));
    if (lower.find("gpt") != std::string::npos || lower.find("glm") != std::string::npos)
        return "GPT";
    if (lower.find("gemini") != std::string::npos) return "Gemini";
    if (lower.find("deepseek") != std::string::npos) return "DeepSeek";
    return "Other";
}

ValidationOutcome run_validation(const std::vector<ScenarioSpec>& grid,
                                 const ValidationOptions& options) {
    if (grid.empty()) throw ConfigError("validation grid is empty");

    std::vector<std::string> probes;
    probes.reserve(options.probes);
    for (int i = 0; i < options.probes; ++i)
        probes.push_back("probe " + std::to_string(i) + " describe topic " +
                         std::to_string(i * 37 % 101));

    // Candidate model set: every claimed identity and every backend persona.
    std::map<std::string, Persona> personas;
    for (const auto& s : grid) {
        personas.emplace(s.claimed_model, make_persona(s.claimed_model));
        personas.emplace(s.backend_persona, make_persona(s.backend_persona));
    }

    // Reference database from "official" response streams.
    fingerprint::ReferenceDB db;
    db.probe_set_id = "validation";
    for (const auto& [name, persona] : personas) {
        for (int p = 0; p < int(probes.size()); ++p)
            for (int s = 0; s < options.ref_samples; ++s)
                db.entries[name][p].push_back(fingerprint::embed(
                    persona_response(persona, probes[p], options.seed, s, options.noise)));
    }

    // Official self-distance per claimed model from two held-out sessions.
    std::map<std::string, double> baselines;
    for (const auto& s : grid) {
        if (baselines.count(s.claimed_model)) continue;
        const Persona& persona = personas.at(s.claimed_model);
        fingerprint::ProbeEmbeddings a, b;
        for (int p = 0; p < int(probes.size()); ++p) {
            a[p].push_back(fingerprint::embed(
                persona_response(persona, probes[p], options.seed, 1000, options.noise)));
            b[p].push_back(fingerprint::embed(
                persona_response(persona, probes[p], options.seed, 1001, options.noise)));
        }
        baselines[s.claimed_model] = fingerprint::baseline_distance(a, b);
    }

    std::vector<ValidationCase> cases;
    int case_index = 0;
    for (const auto& scenario : grid) {
        const Persona& backend = personas.at(scenario.backend_persona);
        for (int c = 0; c < options.cases_per_scenario; ++c, ++case_index) {
            fingerprint::ProbeEmbeddings query;
            for (int p = 0; p < int(probes.size()); ++p) {
                int occurrence = 2000 + case_index * 7 + 1;
                query[p].push_back(fingerprint::embed(persona_response(
                    backend, probes[p], options.seed, occurrence, options.noise)));
            }
            auto match = fingerprint::classify(query, db);
            auto fp = fingerprint::color_verdict(
                scenario.claimed_model, match.matched_model, match.d_mean, match.d_std,
                baselines.at(scenario.claimed_model), options.distance_factor);

            ValidationCase vc;
            vc.scenario_id = scenario.id;
            vc.family = model_family(scenario.claimed_model);
            vc.truth_deceptive = !scenario.honest();
            vc.predicted_deceptive = fp.color != fingerprint::Color::green;
            cases.push_back(std::move(vc));
        }
    }
    return evaluate_testbed(std::move(cases));
}

ValidationOutcome evaluate_testbed(std::vector<ValidationCase> cases) {
    if (cases.empty()) throw AuditError("evaluate_testbed: no cases");
    ValidationOutcome outcome;
    std::map<std::string, std::pair<std::vector<bool>, std::vector<bool>>> per_family;
    std::vector<bool> predicted, truth;
    for (const auto& c : cases) {
        predicted.push_back(c.predicted_deceptive);
        truth.push_back(c.truth_deceptive);
        per_family[c.family].first.push_back(c.predicted_deceptive);
        per_family[c.family].second.push_back(c.truth_deceptive);
    }
    outcome.overall = inference::detection_metrics(predicted, truth);
    for (const auto& [family, labels] : per_family)
        outcome.per_family[family] =
            inference::detection_metrics(labels.first, labels.second);
    outcome.cases = std::move(cases);
    return outcome;
}

}  // namespace apiaudit::simharness
