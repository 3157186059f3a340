#pragma once

#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "depsev/dataset.hpp"

namespace depsev {

using TokenSequence = std::vector<int>;

/// Head/tail truncation regimen. The usable content budget is
/// max_len - n_special; head_fraction is the fraction of that budget given
/// to the sequence prefix, the remainder goes to the suffix.
struct TokenBudgetPlan {
    int max_len = 512;
    int n_special = 0;
    double head_fraction = 0.5;

    int budget() const { return max_len - n_special; }
    void validate() const;
};

/// The five named regimens: head, head75, split50, tail75, tail
/// (head fractions 1.0, 0.75, 0.5, 0.25, 0.0).
double preset_head_fraction(std::string_view name);

/// Sequences within budget pass through unchanged; longer ones keep the
/// first floor(head_fraction * budget) tokens and the last
/// budget - head tokens, preserving order.
TokenSequence truncate(const TokenSequence& seq, const TokenBudgetPlan& plan);

/// Fraction of examples across the given datasets whose token length
/// exceeds the plan's budget. Empty input yields 0.
double over_length_fraction(const std::vector<const Dataset*>& datasets,
                            const std::function<TokenSequence(const std::string&)>& tokenize,
                            const TokenBudgetPlan& plan);

}  // namespace depsev
