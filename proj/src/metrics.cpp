#include "depsev/metrics.hpp"

#include <stdexcept>
#include <string>

namespace depsev {

std::size_t ConfusionMatrix::total() const {
    std::size_t n = 0;
    for (const auto& row : counts)
        for (std::size_t c : row) n += c;
    return n;
}

ConfusionMatrix confusion_matrix(std::span<const int> truths, std::span<const int> preds, int k) {
    if (truths.size() != preds.size()) {
        throw std::invalid_argument("confusion_matrix: length mismatch (" +
                                    std::to_string(truths.size()) + " truths vs " +
                                    std::to_string(preds.size()) + " preds)");
    }
    if (k < 1) throw std::invalid_argument("confusion_matrix: k must be >= 1");
    ConfusionMatrix cm;
    cm.k = k;
    cm.counts.assign(static_cast<std::size_t>(k), std::vector<std::size_t>(static_cast<std::size_t>(k), 0));
    for (std::size_t i = 0; i < truths.size(); ++i) {
        const int t = truths[i];
        const int p = preds[i];
        if (t < 0 || t >= k || p < 0 || p >= k) {
            throw std::invalid_argument("confusion_matrix: label out of range at index " +
                                        std::to_string(i));
        }
        ++cm.counts[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)];
    }
    return cm;
}

std::vector<double> per_class_f1(const ConfusionMatrix& cm) {
    std::vector<double> f1s(static_cast<std::size_t>(cm.k), 0.0);
    for (int c = 0; c < cm.k; ++c) {
        const std::size_t ci = static_cast<std::size_t>(c);
        std::size_t tp = cm.counts[ci][ci];
        std::size_t fp = 0, fn = 0;
        for (int o = 0; o < cm.k; ++o) {
            if (o == c) continue;
            fp += cm.counts[static_cast<std::size_t>(o)][ci];
            fn += cm.counts[ci][static_cast<std::size_t>(o)];
        }
        const double precision = (tp + fp) ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
        const double recall = (tp + fn) ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
        f1s[ci] = (precision + recall > 0.0) ? 2.0 * precision * recall / (precision + recall) : 0.0;
    }
    return f1s;
}

double macro_f1(std::span<const int> truths, std::span<const int> preds, int k) {
    const auto f1s = per_class_f1(confusion_matrix(truths, preds, k));
    double sum = 0.0;
    for (double f : f1s) sum += f;
    return sum / static_cast<double>(k);
}

double cv_mean(std::span<const double> fold_scores) {
    if (fold_scores.empty()) throw std::invalid_argument("cv_mean: empty fold scores");
    double sum = 0.0;
    for (double s : fold_scores) sum += s;
    return sum / static_cast<double>(fold_scores.size());
}

}  // namespace depsev
