#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace depsev {

/// Rows index the true label, columns the predicted label.
struct ConfusionMatrix {
    int k = 0;
    std::vector<std::vector<std::size_t>> counts;

    std::size_t total() const;
};

ConfusionMatrix confusion_matrix(std::span<const int> truths, std::span<const int> preds,
                                 int k = 3);

/// Per-class F1 = 2PR/(P+R); undefined precision, recall or F1 counts as 0.
std::vector<double> per_class_f1(const ConfusionMatrix& cm);

/// Unweighted mean of per-class F1 over all k classes.
double macro_f1(std::span<const int> truths, std::span<const int> preds, int k = 3);

/// Arithmetic mean of fold scores; throws on empty input.
double cv_mean(std::span<const double> fold_scores);

}  // namespace depsev
