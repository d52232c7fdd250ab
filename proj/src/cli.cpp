#include "apiaudit/cli.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <semaphore>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI/CLI.hpp>
#include <nlohmann/json.hpp>

#include "apiaudit/bench.hpp"
#include "apiaudit/disttest.hpp"
#include "apiaudit/econ.hpp"
#include "apiaudit/errors.hpp"
#include "apiaudit/fingerprint.hpp"
#include "apiaudit/inference.hpp"
#include "apiaudit/simharness.hpp"
#include "apiaudit/stability.hpp"
#include "apiaudit/trace.hpp"
#include "apiaudit/verdict.hpp"
#include "apiaudit/wire.hpp"

namespace apiaudit::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json load_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return j;
}

std::vector<wire::EndpointSpec> load_endpoints(const fs::path& path) {
    json j = load_json_file(path);
    std::vector<wire::EndpointSpec> out;
    if (j.is_array())
        for (const auto& item : j) out.push_back(item.get<wire::EndpointSpec>());
    else
        out.push_back(j.get<wire::EndpointSpec>());
    if (out.empty()) throw ConfigError("no endpoints in " + path.string());
    return out;
}

std::vector<std::string> response_texts(const std::vector<trace::ProbeTrace>& traces) {
    std::vector<std::string> out;
    for (const auto& t : traces)
        if (!t.is_gap()) out.push_back(t.exchange.response_text);
    return out;
}

std::vector<double> latency_values(const std::vector<trace::ProbeTrace>& traces) {
    std::vector<double> out;
    for (const auto& t : traces)
        if (!t.is_gap()) out.push_back(t.exchange.latency_s);
    return out;
}

std::vector<double> token_values(const std::vector<trace::ProbeTrace>& traces) {
    std::vector<double> out;
    for (const auto& t : traces)
        if (!t.is_gap()) out.push_back(double(t.exchange.completion_tokens));
    return out;
}

void write_text(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw AuditError("cannot write " + path.string());
    out << content;
}

void print_json(const json& j) { std::cout << j.dump(2) << "\n"; }

json stability_report_json(const stability::StabilityReport& r) {
    return json{{"metric", stability::to_string(r.metric)},
                {"sd", r.sd},
                {"official_sd", r.official_sd},
                {"ratio", r.ratio},
                {"band", stability::to_string(r.band)},
                {"cv", r.cv},
                {"cv_flag", r.cv_flag}};
}

json detection_json(const inference::DetectionMetrics& m) {
    json j{{"accuracy_pct", m.accuracy_pct}};
    j["fpr_pct"] = m.fpr_pct ? json(*m.fpr_pct) : json(nullptr);
    j["fnr_pct"] = m.fnr_pct ? json(*m.fnr_pct) : json(nullptr);
    return j;
}

// ---------------------------------------------------------------- collect

int cmd_collect(const fs::path& endpoint_path, const fs::path& probes_path,
                const fs::path& out_dir, int sessions, double session_delay_s,
                int parallel) {
    auto endpoints = load_endpoints(endpoint_path);
    auto probes = trace::ProbeSet::load(probes_path);
    probes.validate();
    fs::create_directories(out_dir);

    wire::ChatClient client{wire::SecretRegistry{}};
    trace::CollectOptions options;
    options.sessions = sessions;
    options.session_delay_s = session_delay_s;

    std::counting_semaphore<64> slots(std::clamp(parallel, 1, 64));
    std::vector<std::thread> workers;
    std::vector<std::exception_ptr> failures(endpoints.size());
    for (std::size_t i = 0; i < endpoints.size(); ++i) {
        workers.emplace_back([&, i] {
            slots.acquire();
            try {
                fs::path out = out_dir / ("traces_" + endpoints[i].id + ".jsonl");
                fs::remove(out);  // each invocation starts a fresh store
                trace::TraceStore store(out);
                trace::collect(client, endpoints[i], probes, options, &store);
            } catch (...) {
                failures[i] = std::current_exception();
            }
            slots.release();
        });
    }
    for (auto& w : workers) w.join();
    for (const auto& f : failures)
        if (f) std::rethrow_exception(f);
    std::cout << "collected " << endpoints.size() << " endpoint(s), " << sessions
              << " session(s), " << probes.prompts.size() << " probe(s) each\n";
    return kExitPass;
}

// ------------------------------------------------------------ fingerprint

int cmd_build_db(const fs::path& probes_path, const fs::path& out_path,
                 const std::vector<std::string>& trace_specs) {
    auto probes = trace::ProbeSet::load(probes_path);
    probes.validate();
    fingerprint::ReferenceDB db;
    db.probe_set_id = probes.id.empty() ? probes.content_hash() : probes.id;
    db.built_at = wire::utc_timestamp_now();
    for (const auto& spec : trace_specs) {
        auto eq = spec.find('=');
        if (eq == std::string::npos)
            throw ConfigError("--traces expects path=model, got: " + spec);
        fs::path path = spec.substr(0, eq);
        std::string model = spec.substr(eq + 1);
        if (model.empty()) throw ConfigError("--traces expects path=model, got: " + spec);
        auto embedded = fingerprint::embed_traces(trace::TraceStore(path).load_all());
        auto& entry = db.entries[model];
        for (auto& [probe_id, vectors] : embedded) {
            auto& bucket = entry[probe_id];
            bucket.insert(bucket.end(), vectors.begin(), vectors.end());
        }
    }
    if (db.entries.empty()) throw ConfigError("no --traces given; database would be empty");
    db.save(out_path);
    std::cout << "wrote " << out_path.string() << " with " << db.entries.size()
              << " model(s)\n";
    return kExitPass;
}

int cmd_classify(const fs::path& db_path, const fs::path& traces_path,
                 const std::string& claimed, const std::optional<fs::path>& baseline_path,
                 double factor) {
    auto db = fingerprint::ReferenceDB::load(db_path);
    auto query = fingerprint::embed_traces(trace::TraceStore(traces_path).load_all());
    auto cls = fingerprint::classify(query, db);

    json out{{"claimed_model", claimed},
             {"matched_model", cls.matched_model},
             {"d_mean", cls.d_mean},
             {"d_std", cls.d_std}};
    if (baseline_path) {
        auto official = trace::TraceStore(*baseline_path).load_all();
        std::vector<trace::ProbeTrace> s1, s2;
        for (auto& t : official) {
            if (t.session == 1) s1.push_back(t);
            if (t.session == 2) s2.push_back(t);
        }
        double baseline = fingerprint::baseline_distance(fingerprint::embed_traces(s1),
                                                         fingerprint::embed_traces(s2));
        auto fv = fingerprint::color_verdict(claimed, cls.matched_model, cls.d_mean,
                                             cls.d_std, baseline, factor);
        out["baseline_d"] = baseline;
        out["threshold_factor"] = factor;
        out["color"] = fingerprint::to_string(fv.color);
    }
    print_json(out);
    return kExitPass;
}

// ------------------------------------------------------------------- met

int cmd_met(const fs::path& official_path, const fs::path& shadow_path, double alpha,
            int permutations, std::uint64_t seed, int max_len) {
    disttest::MetConfig cfg;
    cfg.alpha = alpha;
    cfg.permutations = permutations;
    cfg.rng_seed = seed;
    cfg.max_len = max_len;
    auto result = disttest::met_test(
        response_texts(trace::TraceStore(official_path).load_all()),
        response_texts(trace::TraceStore(shadow_path).load_all()), cfg);
    print_json(json{{"statistic", result.statistic},
                    {"effect_size", result.effect_size},
                    {"p_value", result.p_value},
                    {"reject", result.reject},
                    {"n_official", result.n_official},
                    {"n_shadow", result.n_shadow},
                    {"alpha", cfg.alpha},
                    {"permutations", cfg.permutations}});
    return kExitPass;
}

// ------------------------------------------------------------- stability

int cmd_stability(const fs::path& shadow_path, const fs::path& official_path,
                  int sessions, const std::optional<fs::path>& csv_path) {
    auto shadow = trace::TraceStore(shadow_path).load_all();
    auto official = trace::TraceStore(official_path).load_all();

    auto latency = stability::sd_ratio(stability::Metric::latency,
                                       latency_values(shadow), latency_values(official));
    auto tokens = stability::sd_ratio(stability::Metric::tokens, token_values(shadow),
                                      token_values(official));
    auto [cv, flagged] = stability::cv_flag(latency_values(shadow));

    json out{{"latency", stability_report_json(latency)},
             {"tokens", stability_report_json(tokens)},
             {"latency_cv", cv},
             {"latency_cv_flag", flagged},
             {"sessions", sessions}};
    auto series = stability::per_question_series(shadow, sessions);
    out["partial_probes"] =
        int(std::count_if(series.latency.begin(), series.latency.end(),
                          [](const stability::SeriesPoint& p) { return p.partial; }));
    if (csv_path) write_text(*csv_path, stability::series_csv(shadow));
    print_json(out);
    return kExitPass;
}

// ----------------------------------------------------------------- bench

std::optional<std::string> answer_for(const std::vector<trace::ProbeTrace>& traces,
                                      int probe_id,
                                      const std::vector<std::string>& labels) {
    for (const auto& t : traces)
        if (t.probe_id == probe_id && !t.is_gap())
            return bench::extract_choice(t.exchange.response_text, labels);
    return std::nullopt;
}

int cmd_bench(const fs::path& items_path, const fs::path& official_path,
              const fs::path& shadow_path) {
    json items = load_json_file(items_path);
    if (!items.is_array()) throw ConfigError("items file must be a JSON list");
    auto official = trace::TraceStore(official_path).load_all();
    auto shadow = trace::TraceStore(shadow_path).load_all();

    std::vector<bench::ItemResult> results;
    for (const auto& item : items) {
        auto labels = item.at("labels").get<std::vector<std::string>>();
        int probe_id = item.at("probe_id").get<int>();
        results.push_back(bench::ItemResult::make(
            item.at("id").get<std::string>(), item.at("gold").get<std::string>(),
            answer_for(official, probe_id, labels), answer_for(shadow, probe_id, labels)));
    }
    auto table = bench::discrepancy(results);
    print_json(json{{"total", table.total},
                    {"both_correct", table.both_correct},
                    {"both_incorrect", table.both_incorrect},
                    {"official_only", table.official_only},
                    {"shadow_only", table.shadow_only},
                    {"consistency_pct", table.consistency_pct},
                    {"official_accuracy_pct", table.official_accuracy_pct()},
                    {"shadow_accuracy_pct", table.shadow_accuracy_pct()},
                    {"accuracy_drop_pp",
                     bench::accuracy_drop(table.official_accuracy_pct(),
                                          table.shadow_accuracy_pct())}});
    return kExitPass;
}

// ------------------------------------------------------------------ econ

int cmd_econ(const fs::path& shadow_path, const fs::path& official_path,
             const fs::path& pricing_path) {
    json pricing = load_json_file(pricing_path);
    const auto& off = pricing.at("official");
    const auto& sh = pricing.at("shadow");
    double off_in = off.at("price_in").get<double>();
    double off_out = off.at("price_out").get<double>();

    econ::MechanismBands bands;
    if (pricing.contains("bands")) {
        const auto& b = pricing["bands"];
        bands.premium_min = b.value("premium_min", bands.premium_min);
        bands.parity_lo = b.value("parity_lo", bands.parity_lo);
        bands.parity_hi = b.value("parity_hi", bands.parity_hi);
    }
    auto ratio = econ::PriceRatio::from_prices(sh.at("price_in").get<double>(),
                                               sh.at("price_out").get<double>(), off_in,
                                               off_out);
    auto shadow = trace::TraceStore(shadow_path).load_all();
    auto official = trace::TraceStore(official_path).load_all();
    double official_value = econ::equivalent_value(official, off_in, off_out);

    std::string endpoint_id = shadow.empty() ? "shadow" : shadow.front().endpoint_id;
    std::optional<double> billed;
    if (pricing.contains("billed_usd") && !pricing["billed_usd"].is_null())
        billed = pricing["billed_usd"].get<double>();
    auto record = econ::make_record(endpoint_id, shadow, off_in, off_out, official_value,
                                    ratio, pricing.value("substituted", false),
                                    pricing.value("substitute_cheaper", false), billed,
                                    bands);
    json out{{"endpoint_id", record.endpoint_id},
             {"equivalent_value_usd", record.equivalent_value_usd},
             {"official_value_usd", official_value},
             {"relative_factor", record.relative_factor},
             {"mechanism", econ::to_string(record.mechanism)},
             {"in_ratio", record.ratio.in_ratio},
             {"out_ratio", record.ratio.out_ratio}};
    out["margin_usd"] = record.margin_usd ? json(*record.margin_usd) : json(nullptr);
    print_json(out);
    return kExitPass;
}

// --------------------------------------------------------------- regress

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::string> ids;           // first column
    std::vector<std::vector<double>> rows;  // remaining columns, numeric
};

CsvTable load_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path.string());
    CsvTable table;
    std::string line;
    bool first = true;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (first) {
            table.header = cells;
            first = false;
            continue;
        }
        if (cells.size() != table.header.size())
            throw ConfigError(path.string() + ": ragged row at line " +
                              std::to_string(lineno));
        table.ids.push_back(cells[0]);
        std::vector<double> row;
        for (std::size_t c = 1; c < cells.size(); ++c) {
            try {
                row.push_back(std::stod(cells[c]));
            } catch (const std::exception&) {
                throw ConfigError(path.string() + ": non-numeric cell '" + cells[c] +
                                  "' at line " + std::to_string(lineno));
            }
        }
        table.rows.push_back(std::move(row));
    }
    if (table.header.size() < 3)
        throw ConfigError(path.string() + ": need id, predictors, and a response column");
    return table;
}

int cmd_regress(const fs::path& csv_path, std::string response_col,
                const std::vector<std::string>& exclude,
                const std::vector<std::string>& spearman_cols) {
    CsvTable table = load_csv(csv_path);
    if (response_col.empty()) response_col = table.header.back();

    std::vector<std::size_t> keep;
    for (std::size_t r = 0; r < table.ids.size(); ++r)
        if (std::find(exclude.begin(), exclude.end(), table.ids[r]) == exclude.end())
            keep.push_back(r);
    if (keep.empty()) throw ConfigError("every row excluded");

    auto column_index = [&](const std::string& name) {
        auto it = std::find(table.header.begin(), table.header.end(), name);
        if (it == table.header.end()) throw ConfigError("no such column: " + name);
        std::size_t idx = std::size_t(it - table.header.begin());
        if (idx == 0) throw ConfigError("column " + name + " is the id column");
        return idx - 1;  // offset into numeric rows
    };

    std::size_t resp = column_index(response_col);
    std::vector<std::size_t> predictors;
    std::vector<std::string> names;
    for (std::size_t c = 1; c < table.header.size(); ++c) {
        if (table.header[c] == response_col) continue;
        predictors.push_back(c - 1);
        names.push_back(table.header[c]);
    }

    Eigen::MatrixXd design(keep.size(), predictors.size());
    Eigen::VectorXd response(keep.size());
    for (std::size_t i = 0; i < keep.size(); ++i) {
        for (std::size_t p = 0; p < predictors.size(); ++p)
            design(Eigen::Index(i), Eigen::Index(p)) = table.rows[keep[i]][predictors[p]];
        response(Eigen::Index(i)) = table.rows[keep[i]][resp];
    }

    auto fit = inference::ols_fit(design, response, names);
    json coeffs = json::object();
    for (std::size_t i = 0; i < fit.names.size(); ++i)
        coeffs[fit.names[i]] = json{{"coefficient", fit.coefficients(Eigen::Index(i))},
                                    {"std_error", fit.std_errors(Eigen::Index(i))},
                                    {"t_value", fit.t_values(Eigen::Index(i))},
                                    {"p_value", fit.p_values(Eigen::Index(i))}};
    json out{{"n", fit.n},
             {"r_squared", fit.r_squared},
             {"response", response_col},
             {"excluded", exclude},
             {"coefficients", coeffs}};

    if (!spearman_cols.empty()) {
        if (spearman_cols.size() != 2)
            throw ConfigError("--spearman expects exactly two column names");
        std::vector<double> x, y;
        std::size_t cx = column_index(spearman_cols[0]);
        std::size_t cy = column_index(spearman_cols[1]);
        for (std::size_t r : keep) {
            x.push_back(table.rows[r][cx]);
            y.push_back(table.rows[r][cy]);
        }
        auto corr = inference::spearman(x, y);
        out["spearman"] = json{{"columns", spearman_cols},
                               {"rho", corr.rho},
                               {"p_value", corr.p_value}};
    }
    print_json(out);
    return kExitPass;
}

// -------------------------------------------------------------- validate

int cmd_validate(const std::optional<fs::path>& scenarios_path,
                 const simharness::ValidationOptions& options) {
    auto grid = scenarios_path ? simharness::load_scenarios(*scenarios_path)
                               : simharness::default_validation_grid();
    auto outcome = simharness::run_validation(grid, options);
    json per_family = json::object();
    for (const auto& [family, metrics] : outcome.per_family)
        per_family[family] = detection_json(metrics);
    print_json(json{{"cases", int(outcome.cases.size())},
                    {"overall", detection_json(outcome.overall)},
                    {"per_family", per_family},
                    {"noise", options.noise},
                    {"seed", options.seed}});
    return kExitPass;
}

// ------------------------------------------------------------- sim serve

int cmd_sim_serve(const fs::path& scenarios_path, int port) {
    simharness::SimServer server(simharness::load_scenarios(scenarios_path));
    server.start(port);
    for (const auto& s : server.scenarios())
        std::cout << s.id << " -> " << server.base_url_for(s.id) << "\n";
    std::cout << "serving; close stdin to stop\n" << std::flush;
    std::string line;
    while (std::getline(std::cin, line)) {
    }
    server.stop();
    return kExitPass;
}

// ------------------------------------------------------------- audit run

struct AuditConfig {
    std::vector<wire::EndpointSpec> endpoints;
    fs::path probe_set;
    int sessions = 3;
    disttest::MetConfig met;
    int met_samples = 500;
    std::optional<std::string> met_prompt;
    verdict::Thresholds thresholds;
    std::optional<fs::path> reference_db;
    json compliance = json(nullptr);  // record, or map endpoint_id -> record
    std::map<std::string, std::vector<double>> accuracy_per_session;
    fs::path output_dir = "out";
    std::uint64_t seed = 42;
    bool normalize_reports = true;
};

AuditConfig load_audit_config(const fs::path& path) {
    json j = load_json_file(path);
    AuditConfig cfg;
    if (!j.contains("endpoints")) throw ConfigError("config is missing endpoints");
    for (const auto& e : j["endpoints"]) cfg.endpoints.push_back(e.get<wire::EndpointSpec>());
    if (!j.contains("probe_set")) throw ConfigError("config is missing probe_set");
    cfg.probe_set = j["probe_set"].get<std::string>();
    cfg.sessions = j.value("sessions", cfg.sessions);
    if (j.contains("met")) {
        const auto& m = j["met"];
        cfg.met.alpha = m.value("alpha", cfg.met.alpha);
        cfg.met.permutations = m.value("permutations", cfg.met.permutations);
        cfg.met.max_len = m.value("max_len", cfg.met.max_len);
        cfg.met.rng_seed = m.value("rng_seed", cfg.met.rng_seed);
        cfg.met_samples = m.value("samples", cfg.met_samples);
        if (m.contains("prompt")) cfg.met_prompt = m["prompt"].get<std::string>();
    }
    if (j.contains("thresholds")) {
        const auto& t = j["thresholds"];
        cfg.thresholds.distance_factor =
            t.value("distance_factor", cfg.thresholds.distance_factor);
        cfg.thresholds.alpha = t.value("alpha", cfg.thresholds.alpha);
        cfg.thresholds.accuracy_sd_pp =
            t.value("accuracy_sd_pp", cfg.thresholds.accuracy_sd_pp);
        cfg.thresholds.latency_cv = t.value("latency_cv", cfg.thresholds.latency_cv);
        cfg.thresholds.min_sessions = t.value("min_sessions", cfg.thresholds.min_sessions);
    }
    cfg.thresholds.alpha = cfg.met.alpha;  // one alpha governs stage 2
    if (j.contains("reference_db"))
        cfg.reference_db = fs::path(j["reference_db"].get<std::string>());
    if (j.contains("compliance")) {
        if (j["compliance"].is_string())
            cfg.compliance = load_json_file(j["compliance"].get<std::string>());
        else
            cfg.compliance = j["compliance"];
    }
    if (j.contains("accuracy_per_session"))
        for (const auto& [id, vals] : j["accuracy_per_session"].items())
            cfg.accuracy_per_session[id] = vals.get<std::vector<double>>();
    cfg.output_dir = fs::path(j.value("output_dir", cfg.output_dir.string()));
    cfg.seed = j.value("seed", cfg.seed);
    cfg.normalize_reports = j.value("normalize_reports", cfg.normalize_reports);
    return cfg;
}

std::optional<verdict::ComplianceRecord> compliance_for(const json& compliance,
                                                        const std::string& endpoint_id) {
    if (compliance.is_null()) return std::nullopt;
    if (compliance.contains("legal_entity_disclosed"))  // a single record
        return compliance.get<verdict::ComplianceRecord>();
    if (compliance.contains(endpoint_id))
        return compliance.at(endpoint_id).get<verdict::ComplianceRecord>();
    if (compliance.contains("*"))
        return compliance.at("*").get<verdict::ComplianceRecord>();
    return std::nullopt;
}

/// Probe sessions plus flat single-prompt sampling for the equality test.
struct EndpointCapture {
    std::vector<trace::ProbeTrace> probe_traces;
    std::vector<trace::ProbeTrace> met_traces;
};

EndpointCapture capture_endpoint(const wire::ChatClient& client,
                                 const wire::EndpointSpec& endpoint,
                                 const trace::ProbeSet& probes,
                                 const AuditConfig& cfg) {
    EndpointCapture capture;
    fs::path probe_path = cfg.output_dir / ("traces_" + endpoint.id + ".jsonl");
    fs::remove(probe_path);
    trace::TraceStore probe_store(probe_path);
    trace::CollectOptions options;
    options.sessions = cfg.sessions;
    capture.probe_traces = trace::collect(client, endpoint, probes, options, &probe_store);

    if (cfg.met_samples > 0) {
        fs::path met_path = cfg.output_dir / ("traces_met_" + endpoint.id + ".jsonl");
        fs::remove(met_path);
        trace::TraceStore met_store(met_path);
        const std::string prompt =
            cfg.met_prompt ? *cfg.met_prompt : probes.prompts.front();
        for (int i = 0; i < cfg.met_samples; ++i) {
            trace::ProbeTrace record;
            record.probe_id = i;
            record.endpoint_id = endpoint.id;
            record.session = 1;
            try {
                record.exchange = client.send_chat(endpoint, prompt);
            } catch (const AuditError& e) {
                record.error = e.what();
            }
            met_store.append(record);
            capture.met_traces.push_back(std::move(record));
        }
    }
    return capture;
}

int cmd_audit_run(const fs::path& config_path, const std::optional<fs::path>& report_path,
                  const std::optional<fs::path>& out_dir_override, int parallel,
                  const std::map<std::string, double>& threshold_overrides) {
    AuditConfig cfg = load_audit_config(config_path);
    if (out_dir_override) cfg.output_dir = *out_dir_override;
    for (const auto& [name, value] : threshold_overrides) {
        if (name == "factor") cfg.thresholds.distance_factor = value;
        else if (name == "alpha") cfg.thresholds.alpha = cfg.met.alpha = value;
        else if (name == "accuracy-sd") cfg.thresholds.accuracy_sd_pp = value;
        else if (name == "cv") cfg.thresholds.latency_cv = value;
        else if (name == "sessions") cfg.sessions = int(value);
        else if (name == "met-samples") cfg.met_samples = int(value);
    }

    const wire::EndpointSpec* official = nullptr;
    std::vector<const wire::EndpointSpec*> shadows;
    for (const auto& e : cfg.endpoints) {
        if (e.role == wire::EndpointRole::official) {
            if (official) throw ConfigError("config names more than one official endpoint");
            official = &e;
        } else {
            shadows.push_back(&e);
        }
    }
    if (!official) throw ConfigError("config names no official endpoint");
    if (shadows.empty()) throw ConfigError("config names no shadow endpoint");

    auto probes = trace::ProbeSet::load(cfg.probe_set);
    probes.validate();
    if (int(probes.prompts.size()) < probes.min_count_hint)
        std::cerr << "warning: " << probes.prompts.size() << " probes; fingerprinting wants "
                  << probes.min_count_hint << "+\n";
    if (cfg.met_samples > 0 && cfg.met_samples < 500)
        std::cerr << "warning: " << cfg.met_samples
                  << " equality-test samples; 500+ recommended at alpha "
                  << cfg.met.alpha << "\n";
    fs::create_directories(cfg.output_dir);

    wire::ChatClient client{wire::SecretRegistry{}};
    std::map<std::string, EndpointCapture> captures;
    {
        std::vector<const wire::EndpointSpec*> all{official};
        all.insert(all.end(), shadows.begin(), shadows.end());
        for (const auto* e : all) captures.emplace(e->id, EndpointCapture{});
        std::counting_semaphore<64> slots(std::clamp(parallel, 1, 64));
        std::vector<std::thread> workers;
        std::vector<std::exception_ptr> failures(all.size());
        for (std::size_t i = 0; i < all.size(); ++i) {
            workers.emplace_back([&, i] {
                slots.acquire();
                try {
                    captures[all[i]->id] = capture_endpoint(client, *all[i], probes, cfg);
                } catch (...) {
                    failures[i] = std::current_exception();
                }
                slots.release();
            });
        }
        for (auto& w : workers) w.join();
        for (const auto& f : failures)
            if (f) std::rethrow_exception(f);
    }
    const EndpointCapture& official_capture = captures.at(official->id);

    // Reference database: prebuilt when supplied, else the official endpoint's
    // own responses under its claimed model.
    fingerprint::ReferenceDB db;
    if (cfg.reference_db) {
        db = fingerprint::ReferenceDB::load(*cfg.reference_db);
    } else {
        db.probe_set_id = probes.id.empty() ? probes.content_hash() : probes.id;
        db.built_at = cfg.normalize_reports ? "" : wire::utc_timestamp_now();
        db.entries[official->claimed_model] =
            fingerprint::embed_traces(official_capture.probe_traces);
        db.save(cfg.output_dir / "reference_db.json");
    }

    // Official self-distance across two disjoint sessions.
    std::optional<double> baseline;
    if (cfg.sessions >= 2) {
        auto session_of = [&](int session) {
            std::vector<trace::ProbeTrace> out;
            for (const auto& t : official_capture.probe_traces)
                if (t.session == session) out.push_back(t);
            return fingerprint::embed_traces(out);
        };
        baseline = fingerprint::baseline_distance(session_of(1), session_of(2));
    }

    auto official_met_texts = response_texts(official_capture.met_traces);

    json config_echo{{"probe_set_id", probes.id},
                     {"probe_set_hash", probes.content_hash()},
                     {"sessions", cfg.sessions},
                     {"seed", cfg.seed},
                     {"official_endpoint", official->id},
                     {"thresholds",
                      json{{"distance_factor", cfg.thresholds.distance_factor},
                           {"alpha", cfg.thresholds.alpha},
                           {"accuracy_sd_pp", cfg.thresholds.accuracy_sd_pp},
                           {"latency_cv", cfg.thresholds.latency_cv},
                           {"min_sessions", cfg.thresholds.min_sessions}}},
                     {"met",
                      json{{"alpha", cfg.met.alpha},
                           {"permutations", cfg.met.permutations},
                           {"max_len", cfg.met.max_len},
                           {"rng_seed", cfg.met.rng_seed},
                           {"samples", cfg.met_samples}}}};
    if (!cfg.normalize_reports) config_echo["generated_at"] = wire::utc_timestamp_now();

    bool any_avoid = false;
    bool first_shadow = true;
    for (const auto* shadow : shadows) {
        const EndpointCapture& capture = captures.at(shadow->id);
        verdict::StageInputs inputs;

        if (baseline) {
            auto query = fingerprint::embed_traces(capture.probe_traces);
            auto cls = fingerprint::classify(query, db);
            inputs.fingerprint = fingerprint::color_verdict(
                shadow->claimed_model, cls.matched_model, cls.d_mean, cls.d_std, *baseline,
                cfg.thresholds.distance_factor);
        }

        if (cfg.met_samples > 0)
            inputs.met = disttest::met_test(official_met_texts,
                                            response_texts(capture.met_traces), cfg.met);

        verdict::StabilityInputs st;
        st.sessions = cfg.sessions;
        auto latencies = latency_values(capture.probe_traces);
        if (latencies.size() >= 2) st.latency_cv = stability::cv_flag(latencies).first;
        if (auto it = cfg.accuracy_per_session.find(shadow->id);
            it != cfg.accuracy_per_session.end() && it->second.size() >= 2)
            st.accuracy_sd_pp = stability::accuracy_sd_pp(it->second);
        inputs.stability = st;

        inputs.compliance = compliance_for(cfg.compliance, shadow->id);

        json echo = config_echo;
        echo["claimed_model"] = shadow->claimed_model;
        auto report = verdict::run_protocol(shadow->id, inputs, cfg.thresholds, echo);
        if (cfg.normalize_reports &&
            report.stage3_stability.detail.contains("latency_cv"))
            report.stage3_stability.detail["latency_cv"] = nullptr;

        write_text(cfg.output_dir / ("report_" + shadow->id + ".json"),
                   verdict::render_report(report, "json"));
        write_text(cfg.output_dir / ("report_" + shadow->id + ".md"),
                   verdict::render_report(report, "md"));
        if (report_path && first_shadow) {
            std::string ext = report_path->extension().string();
            write_text(*report_path,
                       verdict::render_report(report, ext == ".md" ? "md" : "json"));
        }
        first_shadow = false;
        std::cout << shadow->id << ": " << report.verdict << "\n";
        any_avoid = any_avoid || report.avoid();
    }
    return any_avoid ? kExitAvoid : kExitPass;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"Shadow-API auditor: does an endpoint serve the model it claims?"};
    app.require_subcommand(1);

    // collect
    auto* collect = app.add_subcommand("collect", "Record probe sessions to JSONL");
    std::string c_endpoint, c_probes, c_out = ".";
    int c_sessions = 3, c_parallel = 4;
    double c_delay = 0.0;
    collect->add_option("--endpoint", c_endpoint, "Endpoint spec JSON (object or list)")
        ->required();
    collect->add_option("--probes", c_probes, "Probe set file")->required();
    collect->add_option("--out", c_out, "Output directory");
    collect->add_option("--sessions", c_sessions, "Sessions per endpoint");
    collect->add_option("--session-delay", c_delay, "Seconds between sessions");
    collect->add_option("--parallel", c_parallel, "Concurrent endpoints");

    // fingerprint build-db | classify
    auto* fingerprint_cmd = app.add_subcommand("fingerprint", "Reference DB and matching");
    fingerprint_cmd->require_subcommand(1);
    auto* build_db = fingerprint_cmd->add_subcommand("build-db", "Embed traces into a DB");
    std::string b_probes, b_out;
    std::vector<std::string> b_traces;
    build_db->add_option("--probes", b_probes, "Probe set file")->required();
    build_db->add_option("--out", b_out, "Output DB path")->required();
    build_db->add_option("--traces", b_traces, "Trace file as path=model (repeatable)")
        ->required();
    auto* classify = fingerprint_cmd->add_subcommand("classify", "Match traces against a DB");
    std::string f_db, f_traces, f_claimed, f_baseline;
    double f_factor = 1.2;
    classify->add_option("--db", f_db, "Reference DB path")->required();
    classify->add_option("--traces", f_traces, "Shadow trace file")->required();
    classify->add_option("--claimed", f_claimed, "Claimed model name")->required();
    classify->add_option("--baseline", f_baseline,
                         "Official trace file for the session self-distance");
    classify->add_option("--factor", f_factor, "Distance threshold factor");

    // met
    auto* met = app.add_subcommand("met", "Two-sample distributional equality test");
    std::string m_official, m_shadow;
    double m_alpha = 0.05;
    int m_permutations = 1000, m_max_len = 50;
    std::uint64_t m_seed = 42;
    met->add_option("--official", m_official, "Official trace file")->required();
    met->add_option("--shadow", m_shadow, "Shadow trace file")->required();
    met->add_option("--alpha", m_alpha, "Significance level");
    met->add_option("--permutations", m_permutations, "Permutation count");
    met->add_option("--seed", m_seed, "RNG seed");
    met->add_option("--max-len", m_max_len, "Token prefix length");

    // stability
    auto* stability_cmd = app.add_subcommand("stability", "SD ratios and latency CV");
    std::string s_shadow, s_official, s_csv;
    int s_sessions = 3;
    stability_cmd->add_option("--shadow", s_shadow, "Shadow trace file")->required();
    stability_cmd->add_option("--official", s_official, "Official trace file")->required();
    stability_cmd->add_option("--sessions", s_sessions, "Expected session count");
    stability_cmd->add_option("--csv", s_csv, "Write per-question series CSV here");

    // bench
    auto* bench_cmd = app.add_subcommand("bench", "Accuracy discrepancy table");
    std::string be_items, be_official, be_shadow;
    bench_cmd->add_option("--items", be_items, "Benchmark items JSON")->required();
    bench_cmd->add_option("--official", be_official, "Official trace file")->required();
    bench_cmd->add_option("--shadow", be_shadow, "Shadow trace file")->required();

    // econ
    auto* econ_cmd = app.add_subcommand("econ", "Token value accounting");
    std::string e_shadow, e_official, e_pricing;
    econ_cmd->add_option("--shadow", e_shadow, "Shadow trace file")->required();
    econ_cmd->add_option("--official", e_official, "Official trace file")->required();
    econ_cmd->add_option("--pricing", e_pricing, "Pricing JSON")->required();

    // regress
    auto* regress = app.add_subcommand("regress", "OLS over an endpoint-level CSV");
    std::string r_csv, r_response;
    std::vector<std::string> r_exclude, r_spearman;
    regress->add_option("--csv", r_csv, "CSV: id column first, header row required")
        ->required();
    regress->add_option("--response", r_response, "Response column (default: last)");
    regress->add_option("--exclude", r_exclude, "Endpoint ids to drop")->delimiter(',');
    regress->add_option("--spearman", r_spearman, "Two columns to correlate")
        ->delimiter(',');

    // validate
    auto* validate = app.add_subcommand("validate", "Detection metrics on the sim grid");
    std::string v_scenarios;
    simharness::ValidationOptions v_options;
    validate->add_option("--scenarios", v_scenarios, "Scenario JSON (default: built-in grid)");
    validate->add_option("--cases", v_options.cases_per_scenario, "Cases per scenario");
    validate->add_option("--probes", v_options.probes, "Probes per case");
    validate->add_option("--ref-samples", v_options.ref_samples, "Reference samples per probe");
    validate->add_option("--noise", v_options.noise, "Shared-vocabulary probability");
    validate->add_option("--factor", v_options.distance_factor, "Distance threshold factor");
    validate->add_option("--seed", v_options.seed, "RNG seed");

    // sim serve
    auto* sim = app.add_subcommand("sim", "Simulated endpoints");
    sim->require_subcommand(1);
    auto* serve = sim->add_subcommand("serve", "Serve scenarios over HTTP");
    std::string sv_scenarios;
    int sv_port = 0;
    serve->add_option("--scenarios", sv_scenarios, "Scenario JSON")->required();
    serve->add_option("--port", sv_port, "Port (0 picks a free one)");

    // audit run
    auto* audit = app.add_subcommand("audit", "Full audit protocol");
    audit->require_subcommand(1);
    auto* run = audit->add_subcommand("run", "Collect, analyze, and render a verdict");
    std::string a_config, a_report, a_out;
    int a_parallel = 4;
    std::map<std::string, double> a_overrides;
    run->add_option("--config", a_config, "Audit config JSON")->required();
    run->add_option("--report", a_report, "Extra report copy (.json or .md)");
    run->add_option("--out", a_out, "Output directory override");
    run->add_option("--parallel", a_parallel, "Concurrent endpoints");
    run->add_option("--factor", [&a_overrides](auto v) {
        a_overrides["factor"] = std::stod(v[0]);
        return true;
    }, "Distance threshold factor override");
    run->add_option("--alpha", [&a_overrides](auto v) {
        a_overrides["alpha"] = std::stod(v[0]);
        return true;
    }, "Significance level override");
    run->add_option("--accuracy-sd", [&a_overrides](auto v) {
        a_overrides["accuracy-sd"] = std::stod(v[0]);
        return true;
    }, "Accuracy SD threshold override (pp)");
    run->add_option("--cv", [&a_overrides](auto v) {
        a_overrides["cv"] = std::stod(v[0]);
        return true;
    }, "Latency CV threshold override");
    run->add_option("--sessions", [&a_overrides](auto v) {
        a_overrides["sessions"] = std::stod(v[0]);
        return true;
    }, "Session count override");
    run->add_option("--met-samples", [&a_overrides](auto v) {
        a_overrides["met-samples"] = std::stod(v[0]);
        return true;
    }, "Equality-test sample count override");

    std::vector<const char*> argv;
    argv.push_back("apiaudit");
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(int(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*collect)
            return cmd_collect(c_endpoint, c_probes, c_out, c_sessions, c_delay, c_parallel);
        if (*build_db) return cmd_build_db(b_probes, b_out, b_traces);
        if (*classify)
            return cmd_classify(f_db, f_traces, f_claimed,
                                f_baseline.empty() ? std::nullopt
                                                   : std::optional<fs::path>(f_baseline),
                                f_factor);
        if (*met) return cmd_met(m_official, m_shadow, m_alpha, m_permutations, m_seed,
                                 m_max_len);
        if (*stability_cmd)
            return cmd_stability(s_shadow, s_official, s_sessions,
                                 s_csv.empty() ? std::nullopt
                                               : std::optional<fs::path>(s_csv));
        if (*bench_cmd) return cmd_bench(be_items, be_official, be_shadow);
        if (*econ_cmd) return cmd_econ(e_shadow, e_official, e_pricing);
        if (*regress) return cmd_regress(r_csv, r_response, r_exclude, r_spearman);
        if (*validate)
            return cmd_validate(v_scenarios.empty()
                                    ? std::nullopt
                                    : std::optional<fs::path>(v_scenarios),
                                v_options);
        if (*serve) return cmd_sim_serve(sv_scenarios, sv_port);
        if (*run)
            return cmd_audit_run(
                a_config,
                a_report.empty() ? std::nullopt : std::optional<fs::path>(a_report),
                a_out.empty() ? std::nullopt : std::optional<fs::path>(a_out), a_parallel,
                a_overrides);
    } catch (const AuditError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
    return kExitUsage;
}

}  // namespace apiaudit::cli
