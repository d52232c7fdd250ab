#pragma once

#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "apiaudit/disttest.hpp"
#include "apiaudit/fingerprint.hpp"

namespace apiaudit::verdict {

/// Manually collected provider compliance signals.
struct ComplianceRecord {
    bool legal_entity_disclosed = false;
    bool registration_id_verified = false;
    bool legal_docs_present = false;
    std::string payee_type = "unknown";  // individual | company | unknown
    bool provenance_verifiable = false;

    bool transparent_identity() const {
        return legal_entity_disclosed && registration_id_verified && legal_docs_present;
    }
};

void to_json(nlohmann::json& j, const ComplianceRecord& r);
void from_json(const nlohmann::json& j, ComplianceRecord& r);

struct Thresholds {
    double distance_factor = 1.2;  // > factor * baseline flags
    double alpha = 0.05;           // p <= alpha flags
    double accuracy_sd_pp = 5.0;   // > 5 pp flags (exclusive)
    double latency_cv = 0.15;      // > 0.15 flags (exclusive)
    int min_sessions = 3;
};

struct StabilityInputs {
    std::optional<double> accuracy_sd_pp;  // over per-session benchmark accuracies
    std::optional<double> latency_cv;
    int sessions = 0;
};

/// Absent stage inputs fail closed: the stage flags.
struct StageInputs {
    std::optional<fingerprint::FingerprintVerdict> fingerprint;
    std::optional<disttest::MetResult> met;
    std::optional<StabilityInputs> stability;
    std::optional<ComplianceRecord> compliance;
};

struct StageResult {
    std::string name;
    bool flag = false;
    std::string reason;
    nlohmann::json detail;  // stage evidence plus the exact threshold applied
};

struct AuditReport {
    std::string endpoint_id;
    StageResult stage1_fingerprint;
    StageResult stage2_met;
    StageResult stage3_stability;
    StageResult stage4_compliance;
    std::string verdict;  // pass | avoid
    nlohmann::json config_echo;

    bool avoid() const { return verdict == "avoid"; }
};

/// Four-stage gate; any flagged stage escalates to avoid.
AuditReport run_protocol(const std::string& endpoint_id, const StageInputs& inputs,
                         const Thresholds& thresholds,
                         nlohmann::json config_echo = nlohmann::json::object());

nlohmann::json report_to_json(const AuditReport& report);
AuditReport report_from_json(const nlohmann::json& j);
std::string render_markdown(const AuditReport& report);

/// format: "json" or "md". Deterministic output for a given report.
std::string render_report(const AuditReport& report, const std::string& format);

}  // namespace apiaudit::verdict
