#pragma once

#include <string>
#include <utility>
#include <vector>

#include "apiaudit/trace.hpp"

namespace apiaudit::stability {

enum class Metric { latency, tokens };
enum class Band { blue, green, red };

std::string to_string(Metric m);
std::string to_string(Band b);

/// Bands partition the positive ratio line: blue < 0.8, green in [0.8, 1.2],
/// red > 1.2 (boundaries are green).
Band band_for_ratio(double ratio);

/// Sample (n-1) standard deviation.
double sample_sd(const std::vector<double>& values);

struct StabilityReport {
    Metric metric = Metric::latency;
    double sd = 0.0;
    double official_sd = 0.0;
    double ratio = 0.0;
    Band band = Band::green;
    double cv = 0.0;       // sd / mean of the shadow series
    bool cv_flag = false;  // latency only, cv > 0.15
};

/// Volatility of a shadow series against the official one.
StabilityReport sd_ratio(Metric metric, const std::vector<double>& shadow_values,
                         const std::vector<double>& official_values);

/// Coefficient of variation with the 0.15 routing-instability flag
/// (0.15 exactly passes).
std::pair<double, bool> cv_flag(const std::vector<double>& latencies);

inline constexpr double kCvThreshold = 0.15;

/// Accuracy stability over per-session benchmark accuracies, in percentage
/// points. The flag is exclusive: SD = 5.0 pp passes.
double accuracy_sd_pp(const std::vector<double>& per_session_accuracy_pct);
bool accuracy_sd_flag(double sd_pp, double threshold_pp = 5.0);

struct SeriesPoint {
    int probe_id = 0;
    double mean = 0.0;
    double min = 0.0;
    double max = 0.0;
    int sessions = 0;
    bool partial = false;  // fewer sessions than expected contributed
};

struct QuestionSeries {
    std::vector<SeriesPoint> latency;
    std::vector<SeriesPoint> tokens;  // completion tokens
};

/// Per-probe mean and min-max envelope across sessions, plot-ready.
QuestionSeries per_question_series(const std::vector<trace::ProbeTrace>& traces,
                                   int expected_sessions);

/// CSV rows (probe_id, session, latency_s, tokens) for external plotting.
std::string series_csv(const std::vector<trace::ProbeTrace>& traces);

}  // namespace apiaudit::stability
