#include "apiaudit/econ.hpp"

#include <algorithm>

#include "apiaudit/errors.hpp"

namespace apiaudit::econ {

PriceRatio PriceRatio::from_prices(double shadow_in, double shadow_out, double official_in,
                                   double official_out) {
    if (official_in <= 0 || official_out <= 0)
        throw ConfigError("official prices must be positive for a price ratio");
    return {shadow_in / official_in, shadow_out / official_out};
}

std::string to_string(Mechanism m) {
    switch (m) {
        case Mechanism::information_premium: return "information_premium";
        case Mechanism::discount_substitution: return "discount_substitution";
        case Mechanism::resale_markup: return "resale_markup";
        case Mechanism::none: return "none";
    }
    return "none";
}

Mechanism classify_mechanism(const PriceRatio& ratio, bool substituted,
                             bool substitute_cheaper, const MechanismBands& bands) {
    if (!substituted) return Mechanism::none;
    const double max_ratio = std::max(ratio.in_ratio, ratio.out_ratio);
    if (max_ratio >= bands.premium_min) return Mechanism::information_premium;
    const bool in_parity = ratio.in_ratio >= bands.parity_lo &&
                           ratio.in_ratio <= bands.parity_hi &&
                           ratio.out_ratio >= bands.parity_lo &&
                           ratio.out_ratio <= bands.parity_hi;
    if (in_parity && substitute_cheaper) return Mechanism::discount_substitution;
    if (max_ratio > bands.parity_hi) return Mechanism::resale_markup;
    // Substituted cases outside every band: markup when charging above
    // parity, discount-substitution otherwise.
    return max_ratio > 1.0 ? Mechanism::resale_markup : Mechanism::discount_substitution;
}

double equivalent_value(const std::vector<trace::ProbeTrace>& traces, double price_in,
                        double price_out) {
    if (price_in < 0 || price_out < 0) throw ConfigError("prices must be non-negative");
    double value = 0.0;
    for (const auto& t : traces) {
        if (t.is_gap()) continue;
        value += double(t.exchange.prompt_tokens) * price_in +
                 double(t.exchange.completion_tokens) * price_out;
    }
    return value / 1e6;
}

EconRecord make_record(const std::string& endpoint_id,
                       const std::vector<trace::ProbeTrace>& traces, double official_in,
                       double official_out, double official_value, const PriceRatio& ratio,
                       bool substituted, bool substitute_cheaper,
                       std::optional<double> billed_usd, const MechanismBands& bands) {
    EconRecord record;
    record.endpoint_id = endpoint_id;
    record.ratio = ratio;
    record.equivalent_value_usd = equivalent_value(traces, official_in, official_out);
    record.relative_factor =
        official_value > 0 ? record.equivalent_value_usd / official_value : 0.0;
    if (billed_usd) record.margin_usd = *billed_usd - record.equivalent_value_usd;
    record.mechanism = classify_mechanism(ratio, substituted, substitute_cheaper, bands);
    return record;
}

CostRange aggregate_cost_estimate(int papers_affected, double rerun_cost_low,
                                  double rerun_cost_high, double hours,
                                  double hourly_rate) {
    if (papers_affected < 0 || rerun_cost_low < 0 || rerun_cost_high < rerun_cost_low ||
        hours < 0 || hourly_rate < 0)
        throw ConfigError("aggregate_cost_estimate: inputs must be non-negative");
    const double labor = hours * hourly_rate;
    return {double(papers_affected) * (rerun_cost_low + labor),
            double(papers_affected) * (rerun_cost_high + labor)};
}

}  // namespace apiaudit::econ
