#include "depsev/truncation.hpp"

#include <cmath>
#include <stdexcept>

namespace depsev {

void TokenBudgetPlan::validate() const {
    if (max_len < 1) throw std::invalid_argument("TokenBudgetPlan: max_len must be >= 1");
    if (n_special < 0) throw std::invalid_argument("TokenBudgetPlan: n_special must be >= 0");
    if (budget() < 1) {
        throw std::invalid_argument("TokenBudgetPlan: max_len - n_special must be >= 1");
    }
    if (!(head_fraction >= 0.0 && head_fraction <= 1.0)) {
        throw std::invalid_argument("TokenBudgetPlan: head_fraction must be in [0,1]");
    }
}

double preset_head_fraction(std::string_view name) {
    if (name == "head") return 1.0;
    if (name == "head75") return 0.75;
    if (name == "split50") return 0.5;
    if (name == "tail75") return 0.25;
    if (name == "tail") return 0.0;
    throw std::invalid_argument("unknown truncation preset \"" + std::string(name) +
                                "\"; expected one of head, head75, split50, tail75, tail");
}

TokenSequence truncate(const TokenSequence& seq, const TokenBudgetPlan& plan) {
    plan.validate();
    const std::size_t budget = static_cast<std::size_t>(plan.budget());
    if (seq.size() <= budget) return seq;
    const std::size_t head =
        static_cast<std::size_t>(std::floor(plan.head_fraction * static_cast<double>(budget)));
    const std::size_t tail = budget - head;
    TokenSequence out;
    out.reserve(budget);
    out.insert(out.end(), seq.begin(), seq.begin() + static_cast<std::ptrdiff_t>(head));
    out.insert(out.end(), seq.end() - static_cast<std::ptrdiff_t>(tail), seq.end());
    return out;
}

double over_length_fraction(const std::vector<const Dataset*>& datasets,
                            const std::function<TokenSequence(const std::string&)>& tokenize,
                            const TokenBudgetPlan& plan) {
    plan.validate();
    std::size_t total = 0;
    std::size_t over = 0;
    for (const Dataset* ds : datasets) {
        for (const auto& ex : ds->examples) {
            ++total;
            if (tokenize(ex.text).size() > static_cast<std::size_t>(plan.budget())) ++over;
        }
    }
    if (total == 0) return 0.0;
    return static_cast<double>(over) / static_cast<double>(total);
}

}  // namespace depsev
