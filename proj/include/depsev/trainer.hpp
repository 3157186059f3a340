#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "depsev/backend.hpp"
#include "depsev/dataset.hpp"
#include "depsev/ensemble.hpp"
#include "depsev/imbalance.hpp"
#include "depsev/truncation.hpp"

namespace depsev {

/// One hyperparameter point plus pipeline switches. Defaults follow the
/// fixed training protocol: batch size 8, up to 100 epochs, constant
/// learning rate after linear warmup, Adam with eps 1e-8 and betas
/// 0.9/0.999, early stopping with patience 2 at threshold 0.0025 on dev
/// macro-F1.
struct TrialConfig {
    double learning_rate = 2e-6;
    double task_dropout = 0.0;
    int warmup_steps = 200;
    double weight_decay = 0.0;
    int batch_size = 8;
    int max_epochs = 100;
    double optimizer_eps = 1e-8;
    double optimizer_beta1 = 0.9;
    double optimizer_beta2 = 0.999;
    int es_patience_epochs = 2;
    double es_threshold = 0.0025;
    std::uint64_t seed = 42;
    TokenBudgetPlan truncation{512, 0, 0.5};
    ImbalanceStrategy imbalance_strategy = ImbalanceStrategy::weights;

    void validate() const;
};

struct FoldResult {
    int fold_index = 0;
    double best_dev_macro_f1 = 0.0;
    int epochs_run = 0;
    std::vector<PredictionRecord> predictions;
};

/// Thrown when training produces a non-finite loss; grid search logs the
/// trial as aborted instead of failing the run.
struct TrialDiverged : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Tracks the stopping clock: an evaluation counts as improvement only
/// when it beats the best score so far by at least `threshold`; after
/// `patience` consecutive non-improvements observe() returns true.
class EarlyStopper {
public:
    EarlyStopper(int patience, double threshold) : patience_(patience), threshold_(threshold) {}

    /// Returns true when training should stop after this evaluation.
    bool observe(double score) {
        const bool significant = score >= best_ + threshold_;
        is_new_best_ = score > best_;
        if (is_new_best_) best_ = score;
        if (significant) {
            stale_count_ = 0;
        } else {
            ++stale_count_;
        }
        return stale_count_ >= patience_;
    }

    bool is_new_best() const { return is_new_best_; }
    double best() const { return best_; }

private:
    int patience_;
    double threshold_;
    double best_ = -std::numeric_limits<double>::infinity();
    int stale_count_ = 0;
    bool is_new_best_ = false;
};

/// Trains the dropout + linear classifier head (and the backend itself
/// when trainable) on `train`, evaluating macro-F1 on `dev` after every
/// epoch. Returns the best epoch's dev predictions. Deterministic under
/// config.seed for a deterministic backend.
FoldResult train_one(const TrialConfig& config, const Dataset& train, const Dataset& dev,
                     EncoderBackend& backend, const std::string& model_id = "model",
                     int fold_index = 0);

struct TrialLogEntry {
    TrialConfig config;
    std::optional<double> dev_macro_f1;  // empty for aborted trials
    int epochs_run = 0;
    double wall_seconds = 0.0;
    std::string error;
};

struct GridSearchResult {
    TrialConfig best;
    double best_dev_macro_f1 = -std::numeric_limits<double>::infinity();
    std::vector<TrialLogEntry> log;
};

/// Grid axes in enumeration order, e.g. {"learning_rate", {2e-6, 4e-6}}.
/// Recognized axes: learning_rate, task_dropout, warmup_steps,
/// weight_decay.
using GridAxes = std::vector<std::pair<std::string, std::vector<double>>>;

/// Exhaustive search over the Cartesian product of the axes, starting from
/// `fixed`. Diverged trials score -inf. Ties prefer lower learning rate,
/// then lower dropout, then enumeration order.
GridSearchResult grid_search(const GridAxes& grid, const TrialConfig& fixed, const Dataset& train,
                             const Dataset& dev, EncoderBackend& backend);

struct CrossValidationResult {
    double mean_macro_f1 = 0.0;
    std::vector<FoldResult> folds;
};

/// Trains one model per fold (all-but-fold-i as train, fold i as dev) and
/// averages the per-fold best macro-F1. Every combined-set example is
/// validated exactly once across folds.
CrossValidationResult cross_validate(const TrialConfig& config, const Dataset& combined,
                                     const FoldAssignment& folds, EncoderBackend& backend,
                                     const std::string& model_id = "model");

// --- persistence ---

std::string trial_log_line(const TrialLogEntry& entry);
void append_trial_log(const TrialLogEntry& entry, const std::filesystem::path& path);

}  // namespace depsev
