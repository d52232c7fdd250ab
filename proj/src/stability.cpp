#include "apiaudit/stability.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "apiaudit/errors.hpp"

namespace apiaudit::stability {

std::string to_string(Metric m) { return m == Metric::latency ? "latency" : "tokens"; }

std::string to_string(Band b) {
    switch (b) {
        case Band::blue: return "blue";
        case Band::green: return "green";
        case Band::red: return "red";
    }
    return "green";
}

Band band_for_ratio(double ratio) {
    if (ratio < 0.8) return Band::blue;
    if (ratio > 1.2) return Band::red;
    return Band::green;
}

double sample_sd(const std::vector<double>& values) {
    if (values.size() < 2) throw AuditError("sample_sd needs at least 2 values");
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= double(values.size());
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / double(values.size() - 1));
}

StabilityReport sd_ratio(Metric metric, const std::vector<double>& shadow_values,
                         const std::vector<double>& official_values) {
    StabilityReport report;
    report.metric = metric;
    report.sd = sample_sd(shadow_values);
    report.official_sd = sample_sd(official_values);
    if (report.official_sd <= 0.0)
        throw AuditError("official series is constant; SD ratio undefined");
    report.ratio = report.sd / report.official_sd;
    report.band = band_for_ratio(report.ratio);

    double mean = 0.0;
    for (double v : shadow_values) mean += v;
    mean /= double(shadow_values.size());
    report.cv = mean > 0 ? report.sd / mean : 0.0;
    report.cv_flag = metric == Metric::latency && report.cv > kCvThreshold;
    return report;
}

std::pair<double, bool> cv_flag(const std::vector<double>& latencies) {
    double sd = sample_sd(latencies);
    double mean = 0.0;
    for (double v : latencies) mean += v;
    mean /= double(latencies.size());
    if (mean <= 0.0) throw AuditError("latency mean must be positive for CV");
    double cv = sd / mean;
    return {cv, cv > kCvThreshold};
}

double accuracy_sd_pp(const std::vector<double>& per_session_accuracy_pct) {
    return sample_sd(per_session_accuracy_pct);
}

bool accuracy_sd_flag(double sd_pp, double threshold_pp) { return sd_pp > threshold_pp; }

QuestionSeries per_question_series(const std::vector<trace::ProbeTrace>& traces,
                                   int expected_sessions) {
    if (expected_sessions < 1) throw ConfigError("expected_sessions must be >= 1");
    std::map<int, std::vector<const trace::ProbeTrace*>> by_probe;
    for (const auto& t : traces)
        if (!t.is_gap()) by_probe[t.probe_id].push_back(&t);

    QuestionSeries series;
    for (const auto& [probe_id, records] : by_probe) {
        auto envelope = [&](auto value_of) {
            SeriesPoint point;
            point.probe_id = probe_id;
            point.sessions = int(records.size());
            point.partial = int(records.size()) < expected_sessions;
            point.min = point.max = value_of(*records.front());
            double sum = 0.0;
            for (const auto* r : records) {
                double v = value_of(*r);
                sum += v;
                point.min = std::min(point.min, v);
                point.max = std::max(point.max, v);
            }
            point.mean = sum / double(records.size());
            return point;
        };
        series.latency.push_back(
            envelope([](const trace::ProbeTrace& t) { return t.exchange.latency_s; }));
        series.tokens.push_back(envelope(
            [](const trace::ProbeTrace& t) { return double(t.exchange.completion_tokens); }));
    }
    return series;
}

std::string series_csv(const std::vector<trace::ProbeTrace>& traces) {
    std::ostringstream out;
    out << "probe_id,session,latency_s,tokens\n";
    for (const auto& t : traces) {
        if (t.is_gap()) continue;
        out << t.probe_id << ',' << t.session << ',' << t.exchange.latency_s << ','
            << t.exchange.completion_tokens << '\n';
    }
    return out.str();
}

}  // namespace apiaudit::stability
