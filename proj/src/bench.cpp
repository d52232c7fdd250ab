#include "apiaudit/bench.hpp"

#include <algorithm>
#include <cctype>

#include "apiaudit/errors.hpp"

namespace apiaudit::bench {

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return char(std::tolower(c)); });
    return s;
}

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

// Whether text[pos..pos+len) stands alone (not embedded in a longer word).
bool standalone_at(const std::string& text, std::size_t pos, std::size_t len) {
    if (pos > 0 && is_word_char(text[pos - 1])) return false;
    if (pos + len < text.size() && is_word_char(text[pos + len])) return false;
    return true;
}

std::optional<std::string> label_at_or_after(const std::string& text,
                                             const std::string& lowered, std::size_t from,
                                             const std::vector<std::string>& labels) {
    // Skip separators a marker typically trails with: ": is = - ( * whitespace".
    std::size_t pos = from;
    while (pos < text.size() &&
           (std::isspace(static_cast<unsigned char>(text[pos])) || text[pos] == ':' ||
            text[pos] == '=' || text[pos] == '-' || text[pos] == '(' || text[pos] == '*'))
        ++pos;
    for (const auto& label : labels) {
        std::string needle = lower(label);
        if (lowered.compare(pos, needle.size(), needle) == 0 &&
            standalone_at(text, pos, needle.size()))
            return label;
    }
    return std::nullopt;
}

}  // namespace

std::optional<std::string> extract_choice(const std::string& response,
                                          const std::vector<std::string>& valid_labels) {
    if (valid_labels.empty()) throw ConfigError("extract_choice: empty label set");
    const std::string lowered = lower(response);

    // Pass 1: first label following an answer marker.
    static const std::vector<std::string> markers = {"answer is", "answer:", "answer =",
                                                     "answer-", "answer", "final:",
                                                     "final answer", "choice:"};
    std::size_t best_marker = std::string::npos;
    std::optional<std::string> marker_label;
    for (const auto& marker : markers) {
        std::size_t pos = 0;
        while ((pos = lowered.find(marker, pos)) != std::string::npos) {
            auto label = label_at_or_after(response, lowered, pos + marker.size(),
                                           valid_labels);
            if (label && (best_marker == std::string::npos || pos < best_marker)) {
                best_marker = pos;
                marker_label = label;
            }
            ++pos;
        }
    }
    if (marker_label) return marker_label;

    // Pass 2: last standalone valid label anywhere in the text.
    std::optional<std::string> last;
    std::size_t last_pos = 0;
    for (const auto& label : valid_labels) {
        std::string needle = lower(label);
        std::size_t pos = 0;
        while ((pos = lowered.find(needle, pos)) != std::string::npos) {
            if (standalone_at(response, pos, needle.size()) &&
                (!last || pos >= last_pos)) {
                last = label;
                last_pos = pos;
            }
            ++pos;
        }
    }
    return last;
}

ItemResult ItemResult::make(std::string item_id, std::string gold,
                            std::optional<std::string> official_answer,
                            std::optional<std::string> shadow_answer) {
    ItemResult r;
    r.item_id = std::move(item_id);
    r.gold = std::move(gold);
    r.official_answer = std::move(official_answer);
    r.shadow_answer = std::move(shadow_answer);
    r.official_correct = r.official_answer && *r.official_answer == r.gold;
    r.shadow_correct = r.shadow_answer && *r.shadow_answer == r.gold;
    return r;
}

double DiscrepancyTable::official_accuracy_pct() const {
    return 100.0 * double(both_correct + official_only) / double(total);
}

double DiscrepancyTable::shadow_accuracy_pct() const {
    return 100.0 * double(both_correct + shadow_only) / double(total);
}

DiscrepancyTable discrepancy(const std::vector<ItemResult>& items) {
    if (items.empty()) throw AuditError("discrepancy: no items");
    DiscrepancyTable table;
    table.total = int(items.size());
    for (const auto& item : items) {
        if (item.official_correct && item.shadow_correct) ++table.both_correct;
        else if (!item.official_correct && !item.shadow_correct) ++table.both_incorrect;
        else if (item.official_correct) ++table.official_only;
        else ++table.shadow_only;
    }
    table.consistency_pct =
        consistency_pct(table.both_correct, table.both_incorrect, table.total);
    return table;
}

double consistency_pct(int both_correct, int both_incorrect, int total) {
    if (total <= 0) throw AuditError("consistency_pct: total must be positive");
    return 100.0 * double(both_correct + both_incorrect) / double(total);
}

double accuracy_drop(double official_acc_pct, double shadow_acc_pct) {
    return official_acc_pct - shadow_acc_pct;
}

double mean_score(const std::vector<double>& scores) {
    if (scores.empty()) throw AuditError("mean_score: empty score list");
    double sum = 0.0;
    for (double s : scores) {
        if (s < 0.0 || s > 1.0) throw AuditError("mean_score: scores must lie in [0, 1]");
        sum += s;
    }
    return sum / double(scores.size());
}

}  // namespace apiaudit::bench
