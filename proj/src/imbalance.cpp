#include "depsev/imbalance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "depsev/util.hpp"

namespace depsev {

std::string imbalance_strategy_name(ImbalanceStrategy s) {
    switch (s) {
        case ImbalanceStrategy::none: return "none";
        case ImbalanceStrategy::undersample: return "undersample";
        case ImbalanceStrategy::oversample: return "oversample";
        case ImbalanceStrategy::weights: return "weights";
    }
    return "unknown";
}

ImbalanceStrategy parse_imbalance_strategy(std::string_view s) {
    if (s == "none") return ImbalanceStrategy::none;
    if (s == "undersample") return ImbalanceStrategy::undersample;
    if (s == "oversample") return ImbalanceStrategy::oversample;
    if (s == "weights") return ImbalanceStrategy::weights;
    throw std::invalid_argument("unknown imbalance strategy \"" + std::string(s) +
                                "\"; expected none, undersample, oversample or weights");
}

double ClassWeights::at(int label) const {
    auto it = weights.find(label);
    if (it == weights.end()) {
        throw std::invalid_argument("no class weight for label " + std::to_string(label));
    }
    return it->second;
}

ClassWeights ClassWeights::ones() {
    ClassWeights w;
    for (int c = 0; c < kNumClasses; ++c) w.weights[c] = 1.0;
    return w;
}

ClassWeights compute_class_weights(const std::map<int, std::size_t>& counts) {
    if (counts.empty()) throw std::invalid_argument("compute_class_weights: empty counts");
    std::size_t total = 0;
    for (const auto& [label, count] : counts) {
        if (count == 0) {
            throw std::invalid_argument("compute_class_weights: class " + std::to_string(label) +
                                        " has zero count");
        }
        total += count;
    }
    const double n = static_cast<double>(total);
    const double k = static_cast<double>(counts.size());
    ClassWeights w;
    for (const auto& [label, count] : counts) {
        w.weights[label] = n / (k * static_cast<double>(count));
    }
    return w;
}

namespace {

std::vector<std::vector<std::size_t>> positions_by_class(const Dataset& dataset) {
    std::vector<std::vector<std::size_t>> pos(kNumClasses);
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        pos[dataset.examples[i].label].push_back(i);
    }
    return pos;
}

}  // namespace

Dataset undersample(const Dataset& dataset, std::uint64_t seed) {
    const auto pos = positions_by_class(dataset);
    std::size_t min_count = std::numeric_limits<std::size_t>::max();
    for (const auto& p : pos) {
        if (!p.empty()) min_count = std::min(min_count, p.size());
    }
    if (min_count == std::numeric_limits<std::size_t>::max()) return dataset;

    std::vector<char> keep(dataset.size(), 0);
    for (int label = 0; label < kNumClasses; ++label) {
        if (pos[label].empty()) continue;
        auto shuffled = pos[label];
        Rng rng(mix64(seed, static_cast<std::uint64_t>(label)));
        rng.shuffle(shuffled);
        for (std::size_t j = 0; j < min_count; ++j) keep[shuffled[j]] = 1;
    }
    Dataset out;
    out.split_tag = dataset.split_tag;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        if (keep[i]) out.examples.push_back(dataset.examples[i]);
    }
    return out;
}

Dataset oversample(const Dataset& dataset, std::uint64_t seed) {
    const auto pos = positions_by_class(dataset);
    std::size_t max_count = 0;
    for (const auto& p : pos) max_count = std::max(max_count, p.size());

    Dataset out = dataset;
    for (int label = 0; label < kNumClasses; ++label) {
        if (pos[label].empty() || pos[label].size() == max_count) continue;
        Rng rng(mix64(seed, static_cast<std::uint64_t>(label)));
        for (std::size_t extra = max_count - pos[label].size(); extra > 0; --extra) {
            const std::size_t pick = static_cast<std::size_t>(rng.bounded(pos[label].size()));
            out.examples.push_back(dataset.examples[pos[label][pick]]);
        }
    }
    return out;
}

double weighted_cross_entropy(std::span<const double> logits, int true_label,
                              const ClassWeights& weights) {
    if (true_label < 0 || static_cast<std::size_t>(true_label) >= logits.size()) {
        throw std::invalid_argument("weighted_cross_entropy: label out of range");
    }
    double max_logit = -std::numeric_limits<double>::infinity();
    for (double v : logits) {
        if (!std::isfinite(v)) {
            throw std::invalid_argument("weighted_cross_entropy: non-finite logit");
        }
        max_logit = std::max(max_logit, v);
    }
    double sum_exp = 0.0;
    for (double v : logits) sum_exp += std::exp(v - max_logit);
    const double log_softmax_true =
        (logits[static_cast<std::size_t>(true_label)] - max_logit) - std::log(sum_exp);
    return weights.at(true_label) * (-log_softmax_true);
}

std::vector<double> weighted_cross_entropy_grad(std::span<const double> logits, int true_label,
                                                const ClassWeights& weights) {
    if (true_label < 0 || static_cast<std::size_t>(true_label) >= logits.size()) {
        throw std::invalid_argument("weighted_cross_entropy_grad: label out of range");
    }
    double max_logit = -std::numeric_limits<double>::infinity();
    for (double v : logits) {
        if (!std::isfinite(v)) {
            throw std::invalid_argument("weighted_cross_entropy_grad: non-finite logit");
        }
        max_logit = std::max(max_logit, v);
    }
    double sum_exp = 0.0;
    for (double v : logits) sum_exp += std::exp(v - max_logit);
    const double w = weights.at(true_label);
    std::vector<double> grad(logits.size());
    for (std::size_t j = 0; j < logits.size(); ++j) {
        const double p = std::exp(logits[j] - max_logit) / sum_exp;
        grad[j] = w * (p - (static_cast<int>(j) == true_label ? 1.0 : 0.0));
    }
    return grad;
}

}  // namespace depsev
