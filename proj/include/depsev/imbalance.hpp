#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string_view>
#include <vector>

#include "depsev/dataset.hpp"

namespace depsev {

enum class ImbalanceStrategy { none, undersample, oversample, weights };

std::string imbalance_strategy_name(ImbalanceStrategy s);
ImbalanceStrategy parse_imbalance_strategy(std::string_view s);

/// Per-class loss multipliers. Under the source distribution the
/// count-weighted mean of the weights is 1, i.e. sum_c n_c * w_c = N, so
/// the expected loss scale matches an unweighted run.
struct ClassWeights {
    std::map<int, double> weights;

    double at(int label) const;
    static ClassWeights ones();
};

/// Inverse-frequency weights w_c = N / (K * n_c). All counts must be > 0.
ClassWeights compute_class_weights(const std::map<int, std::size_t>& counts);

/// Randomly drops majority-class rows until every class matches the
/// minimum class count. Survivors keep their original relative order;
/// deterministic under seed.
Dataset undersample(const Dataset& dataset, std::uint64_t seed);

/// Replicates whole minority-class rows until every class matches the
/// maximum class count. Originals keep their order, replicas are appended;
/// deterministic under seed.
Dataset oversample(const Dataset& dataset, std::uint64_t seed);

/// w_{label} * (-log softmax(logits)[label]), computed with the max-shift
/// trick. Throws on non-finite logits.
double weighted_cross_entropy(std::span<const double> logits, int true_label,
                              const ClassWeights& weights);

/// Gradient of weighted_cross_entropy with respect to the logits:
/// w * (softmax(logits) - onehot(label)).
std::vector<double> weighted_cross_entropy_grad(std::span<const double> logits, int true_label,
                                                const ClassWeights& weights);

}  // namespace depsev
