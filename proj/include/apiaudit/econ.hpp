#pragma once

#include <optional>
#include <string>
#include <vector>

#include "apiaudit/trace.hpp"

namespace apiaudit::econ {

struct PriceRatio {
    double in_ratio = 1.0;   // shadow price_in / official price_in
    double out_ratio = 1.0;  // shadow price_out / official price_out

    static PriceRatio from_prices(double shadow_in, double shadow_out, double official_in,
                                  double official_out);
};

enum class Mechanism {
    information_premium,
    discount_substitution,
    resale_markup,
    none,
};

std::string to_string(Mechanism m);

/// The paper defines the mechanisms only by example (7.10x, 1.00x, 1.09x);
/// these bands are artifact-defined, configurable, and echoed with results.
struct MechanismBands {
    double premium_min = 1.5;  // max ratio at or above => information premium
    double parity_lo = 0.95;   // parity window for discount-substitution
    double parity_hi = 1.05;   // a 1.09x surcharge already reads as markup
};

Mechanism classify_mechanism(const PriceRatio& ratio, bool substituted,
                             bool substitute_cheaper, const MechanismBands& bands = {});

/// Imputed USD value of the tokens actually received at official rates:
/// sum(prompt * price_in + completion * price_out) / 1e6.
double equivalent_value(const std::vector<trace::ProbeTrace>& traces, double price_in,
                        double price_out);

struct EconRecord {
    std::string endpoint_id;
    double equivalent_value_usd = 0.0;
    double relative_factor = 0.0;  // shadow value / official value
    std::optional<double> margin_usd;  // billed - delivered, when billed is known
    Mechanism mechanism = Mechanism::none;
    PriceRatio ratio;
};

EconRecord make_record(const std::string& endpoint_id,
                       const std::vector<trace::ProbeTrace>& traces, double official_in,
                       double official_out, double official_value,
                       const PriceRatio& ratio, bool substituted, bool substitute_cheaper,
                       std::optional<double> billed_usd = std::nullopt,
                       const MechanismBands& bands = {});

struct CostRange {
    double low = 0.0;
    double high = 0.0;
};

/// n * (rerun_low + hours*rate) .. n * (rerun_high + hours*rate).
CostRange aggregate_cost_estimate(int papers_affected, double rerun_cost_low,
                                  double rerun_cost_high, double hours, double hourly_rate);

}  // namespace apiaudit::econ
