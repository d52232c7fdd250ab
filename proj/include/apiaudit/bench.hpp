#pragma once

#include <optional>
#include <string>
#include <vector>

namespace apiaudit::bench {

/// Per-item correctness for one official/shadow pair. An unparseable answer
/// counts as incorrect, never as a dropped item.
struct ItemResult {
    std::string item_id;
    std::string gold;
    std::optional<std::string> official_answer;  // nullopt => unparsed
    std::optional<std::string> shadow_answer;
    bool official_correct = false;
    bool shadow_correct = false;

    static ItemResult make(std::string item_id, std::string gold,
                           std::optional<std::string> official_answer,
                           std::optional<std::string> shadow_answer);
};

/// First valid label after an "Answer:"-style marker (case-insensitive);
/// else the last standalone valid label; else nullopt.
std::optional<std::string> extract_choice(const std::string& response,
                                          const std::vector<std::string>& valid_labels);

struct DiscrepancyTable {
    int total = 0;
    int both_correct = 0;
    int both_incorrect = 0;
    int official_only = 0;
    int shadow_only = 0;
    double consistency_pct = 0.0;  // 100 * (BC + BI) / N

    double official_accuracy_pct() const;
    double shadow_accuracy_pct() const;
};

DiscrepancyTable discrepancy(const std::vector<ItemResult>& items);

/// Consistency recomputed from raw cell counts (fixture path).
double consistency_pct(int both_correct, int both_incorrect, int total);

/// official - shadow, in percentage points; negative drops are allowed.
double accuracy_drop(double official_acc_pct, double shadow_acc_pct);

/// Mean of externally supplied per-item harmfulness scores in [0,1]; the tool
/// aggregates but never judges content.
double mean_score(const std::vector<double>& scores);

}  // namespace apiaudit::bench
