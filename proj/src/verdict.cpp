#include "apiaudit/verdict.hpp"

#include <cmath>
#include <sstream>

#include "apiaudit/errors.hpp"

namespace apiaudit::verdict {

using nlohmann::json;

void to_json(json& j, const ComplianceRecord& r) {
    j = json{{"legal_entity_disclosed", r.legal_entity_disclosed},
             {"registration_id_verified", r.registration_id_verified},
             {"legal_docs_present", r.legal_docs_present},
             {"payee_type", r.payee_type},
             {"provenance_verifiable", r.provenance_verifiable}};
}

void from_json(const json& j, ComplianceRecord& r) {
    r.legal_entity_disclosed = j.value("legal_entity_disclosed", false);
    r.registration_id_verified = j.value("registration_id_verified", false);
    r.legal_docs_present = j.value("legal_docs_present", false);
    r.payee_type = j.value("payee_type", "unknown");
    r.provenance_verifiable = j.value("provenance_verifiable", false);
}

namespace {

double round_to(double v, int decimals) {
    const double scale = std::pow(10.0, decimals);
    return std::round(v * scale) / scale;
}

StageResult skipped(std::string name) {
    StageResult s;
    s.name = std::move(name);
    s.flag = true;
    s.reason = "stage inputs missing; fail-closed";
    s.detail = json{{"skipped", true}};
    return s;
}

}  // namespace

AuditReport run_protocol(const std::string& endpoint_id, const StageInputs& inputs,
                         const Thresholds& thresholds, json config_echo) {
    AuditReport report;
    report.endpoint_id = endpoint_id;
    report.config_echo = std::move(config_echo);

    // Stage 1: fingerprint. Flags on identity mismatch or distance above
    // factor * baseline; the boundary itself is green.
    if (inputs.fingerprint) {
        const auto& fp = *inputs.fingerprint;
        StageResult s;
        s.name = "fingerprint";
        s.flag = fp.color != fingerprint::Color::green;
        if (fp.color == fingerprint::Color::red)
            s.reason = "matched model '" + fp.matched_model + "' != claimed '" +
                       fp.claimed_model + "'";
        else if (fp.color == fingerprint::Color::yellow)
            s.reason = "distance exceeds threshold factor times baseline";
        else
            s.reason = "fingerprint consistent with claimed model";
        s.detail = json{{"claimed_model", fp.claimed_model},
                        {"matched_model", fp.matched_model},
                        {"d_mean", round_to(fp.d_mean, 4)},
                        {"d_std", round_to(fp.d_std, 4)},
                        {"baseline_d", round_to(fp.baseline_d, 4)},
                        {"color", fingerprint::to_string(fp.color)},
                        {"threshold_factor", thresholds.distance_factor}};
        report.stage1_fingerprint = std::move(s);
    } else {
        report.stage1_fingerprint = skipped("fingerprint");
    }

    // Stage 2: distributional equality; p <= alpha flags (alpha inclusive).
    if (inputs.met) {
        const auto& met = *inputs.met;
        StageResult s;
        s.name = "met";
        s.flag = met.p_value <= thresholds.alpha;
        s.reason = s.flag ? "distributional equality rejected"
                          : "distributional equality not rejected";
        s.detail = json{{"statistic", round_to(met.statistic, 6)},
                        {"effect_size", round_to(met.effect_size, 6)},
                        {"p_value", round_to(met.p_value, 6)},
                        {"reject", met.reject},
                        {"n_official", met.n_official},
                        {"n_shadow", met.n_shadow},
                        {"alpha", thresholds.alpha}};
        report.stage2_met = std::move(s);
    } else {
        report.stage2_met = skipped("met");
    }

    // Stage 3: stability over at least min_sessions sessions; both thresholds
    // are exclusive (5.0 pp and 0.15 exactly pass).
    if (inputs.stability) {
        const auto& st = *inputs.stability;
        StageResult s;
        s.name = "stability";
        s.detail = json{{"sessions", st.sessions},
                        {"accuracy_sd_threshold_pp", thresholds.accuracy_sd_pp},
                        {"latency_cv_threshold", thresholds.latency_cv}};
        if (st.sessions < thresholds.min_sessions) {
            s.flag = true;
            s.reason = "insufficient-sessions";
            s.detail["required_sessions"] = thresholds.min_sessions;
        } else {
            bool acc_flag =
                st.accuracy_sd_pp && *st.accuracy_sd_pp > thresholds.accuracy_sd_pp;
            bool cv_flag = st.latency_cv && *st.latency_cv > thresholds.latency_cv;
            s.flag = acc_flag || cv_flag;
            if (acc_flag && cv_flag) s.reason = "accuracy SD and latency CV exceeded";
            else if (acc_flag) s.reason = "accuracy SD exceeded";
            else if (cv_flag) s.reason = "latency CV exceeded";
            else s.reason = "stable";
            if (st.accuracy_sd_pp)
                s.detail["accuracy_sd_pp"] = round_to(*st.accuracy_sd_pp, 2);
            else
                s.detail["accuracy_sd_pp"] = nullptr;
            // Latency figures are wall-clock derived; keep the boolean outcome
            // separate so normalization can drop the raw magnitude.
            if (st.latency_cv) s.detail["latency_cv"] = round_to(*st.latency_cv, 4);
            else s.detail["latency_cv"] = nullptr;
            s.detail["latency_cv_flagged"] = cv_flag;
        }
        report.stage3_stability = std::move(s);
    } else {
        report.stage3_stability = skipped("stability");
    }

    // Stage 4: compliance; opaque identity or unverifiable provenance flags.
    if (inputs.compliance) {
        const auto& c = *inputs.compliance;
        StageResult s;
        s.name = "compliance";
        s.flag = !c.transparent_identity() || !c.provenance_verifiable;
        s.reason = s.flag ? "identity not transparent or provenance unverifiable"
                          : "transparent identity with verifiable provenance";
        s.detail = json{{"record", c},
                        {"transparent_identity", c.transparent_identity()}};
        report.stage4_compliance = std::move(s);
    } else {
        report.stage4_compliance = skipped("compliance");
    }

    const bool any_flag = report.stage1_fingerprint.flag || report.stage2_met.flag ||
                          report.stage3_stability.flag || report.stage4_compliance.flag;
    report.verdict = any_flag ? "avoid" : "pass";
    return report;
}

namespace {

json stage_to_json(const StageResult& s) {
    return json{{"name", s.name}, {"flag", s.flag}, {"reason", s.reason},
                {"detail", s.detail}};
}

StageResult stage_from_json(const json& j) {
    StageResult s;
    s.name = j.at("name").get<std::string>();
    s.flag = j.at("flag").get<bool>();
    s.reason = j.at("reason").get<std::string>();
    s.detail = j.at("detail");
    return s;
}

}  // namespace

json report_to_json(const AuditReport& report) {
    return json{{"endpoint_id", report.endpoint_id},
                {"stages", json::array({stage_to_json(report.stage1_fingerprint),
                                        stage_to_json(report.stage2_met),
                                        stage_to_json(report.stage3_stability),
                                        stage_to_json(report.stage4_compliance)})},
                {"verdict", report.verdict},
                {"config_echo", report.config_echo}};
}

AuditReport report_from_json(const json& j) {
    AuditReport report;
    report.endpoint_id = j.at("endpoint_id").get<std::string>();
    const auto& stages = j.at("stages");
    report.stage1_fingerprint = stage_from_json(stages.at(0));
    report.stage2_met = stage_from_json(stages.at(1));
    report.stage3_stability = stage_from_json(stages.at(2));
    report.stage4_compliance = stage_from_json(stages.at(3));
    report.verdict = j.at("verdict").get<std::string>();
    report.config_echo = j.at("config_echo");
    return report;
}

std::string render_markdown(const AuditReport& report) {
    std::ostringstream out;
    out << "# Audit report: " << report.endpoint_id << "\n\n";
    out << "**Verdict: " << report.verdict << "**\n\n";
    out << "| Stage | Flag | Reason |\n|---|---|---|\n";
    for (const StageResult* s : {&report.stage1_fingerprint, &report.stage2_met,
                                 &report.stage3_stability, &report.stage4_compliance})
        out << "| " << s->name << " | " << (s->flag ? "FLAG" : "ok") << " | " << s->reason
            << " |\n";
    out << "\n## Configuration\n\n```json\n" << report.config_echo.dump(2) << "\n```\n";
    return out.str();
}

std::string render_report(const AuditReport& report, const std::string& format) {
    if (format == "json") return report_to_json(report).dump(2) + "\n";
    if (format == "md" || format == "markdown") return render_markdown(report);
    throw AuditError("unknown report format: " + format);
}

}  // namespace apiaudit::verdict
