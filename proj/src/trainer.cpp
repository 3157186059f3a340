#include "depsev/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "depsev/metrics.hpp"
#include "depsev/util.hpp"

namespace depsev {

using nlohmann::json;

void TrialConfig::validate() const {
    auto finite = [](double v, const char* name) {
        if (!std::isfinite(v)) {
            throw std::invalid_argument(std::string("TrialConfig: ") + name + " must be finite");
        }
    };
    finite(learning_rate, "learning_rate");
    finite(weight_decay, "weight_decay");
    finite(es_threshold, "es_threshold");
    finite(optimizer_eps, "optimizer_eps");
    if (!(task_dropout >= 0.0 && task_dropout < 1.0)) {
        throw std::invalid_argument("TrialConfig: task_dropout must be in [0,1)");
    }
    if (warmup_steps < 0) throw std::invalid_argument("TrialConfig: warmup_steps must be >= 0");
    if (batch_size < 1) throw std::invalid_argument("TrialConfig: batch_size must be >= 1");
    if (max_epochs < 1) throw std::invalid_argument("TrialConfig: max_epochs must be >= 1");
    if (es_patience_epochs < 1) {
        throw std::invalid_argument("TrialConfig: es_patience_epochs must be >= 1");
    }
    if (optimizer_eps <= 0.0) throw std::invalid_argument("TrialConfig: optimizer_eps must be > 0");
    if (!(optimizer_beta1 >= 0.0 && optimizer_beta1 < 1.0) ||
        !(optimizer_beta2 >= 0.0 && optimizer_beta2 < 1.0)) {
        throw std::invalid_argument("TrialConfig: optimizer betas must be in [0,1)");
    }
    truncation.validate();
}

namespace {

// Adam with decoupled weight decay and linear warmup into a constant
// learning rate.
class AdamW {
public:
    AdamW(std::size_t n, const TrialConfig& config)
        : config_(&config), m_(n, 0.0), v_(n, 0.0) {}

    void step(std::span<double> params, std::span<const double> grads,
              std::span<const std::uint8_t> decay_mask) {
        ++step_count_;
        double lr = config_->learning_rate;
        if (config_->warmup_steps > 0) {
            lr *= std::min(1.0, static_cast<double>(step_count_) /
                                    static_cast<double>(config_->warmup_steps));
        }
        const double b1 = config_->optimizer_beta1;
        const double b2 = config_->optimizer_beta2;
        const double bc1 = 1.0 - std::pow(b1, static_cast<double>(step_count_));
        const double bc2 = 1.0 - std::pow(b2, static_cast<double>(step_count_));
        for (std::size_t i = 0; i < params.size(); ++i) {
            m_[i] = b1 * m_[i] + (1.0 - b1) * grads[i];
            v_[i] = b2 * v_[i] + (1.0 - b2) * grads[i] * grads[i];
            const double m_hat = m_[i] / bc1;
            const double v_hat = v_[i] / bc2;
            params[i] -= lr * m_hat / (std::sqrt(v_hat) + config_->optimizer_eps);
            if (config_->weight_decay != 0.0 && (decay_mask.empty() || decay_mask[i])) {
                params[i] -= lr * config_->weight_decay * params[i];
            }
        }
    }

private:
    const TrialConfig* config_;
    std::vector<double> m_;
    std::vector<double> v_;
    long step_count_ = 0;
};

struct HeadModel {
    int dim = 0;
    std::vector<double> params;  // [W (K x dim) | b (K)]
    std::vector<std::uint8_t> decay_mask;

    HeadModel(int d, std::uint64_t seed) : dim(d) {
        const std::size_t w_size = static_cast<std::size_t>(kNumClasses) * static_cast<std::size_t>(d);
        params.assign(w_size + kNumClasses, 0.0);
        decay_mask.assign(params.size(), 1);
        for (std::size_t i = w_size; i < params.size(); ++i) decay_mask[i] = 0;
        Rng rng(mix64(seed, 0x11eadULL));
        for (std::size_t i = 0; i < w_size; ++i) params[i] = 0.02 * rng.normal();
    }

    std::array<double, kNumClasses> logits(std::span<const double> features) const {
        std::array<double, kNumClasses> out{};
        const std::size_t d = static_cast<std::size_t>(dim);
        for (int k = 0; k < kNumClasses; ++k) {
            double acc = params[static_cast<std::size_t>(kNumClasses) * d + static_cast<std::size_t>(k)];
            const std::size_t row = static_cast<std::size_t>(k) * d;
            for (std::size_t j = 0; j < d; ++j) acc += params[row + j] * features[j];
            out[static_cast<std::size_t>(k)] = acc;
        }
        return out;
    }
};

std::vector<TokenSequence> tokenize_all(const Dataset& dataset, EncoderBackend& backend,
                                        const TokenBudgetPlan& plan) {
    std::vector<TokenSequence> out;
    out.reserve(dataset.size());
    for (const auto& ex : dataset.examples) {
        out.push_back(truncate(backend.tokenize(ex.text), plan));
    }
    return out;
}

void require_finite_logits(const std::array<double, kNumClasses>& logits) {
    for (double v : logits) {
        if (!std::isfinite(v)) {
            throw TrialDiverged("training diverged: non-finite logits");
        }
    }
}

}  // namespace

FoldResult train_one(const TrialConfig& config, const Dataset& train, const Dataset& dev,
                     EncoderBackend& backend, const std::string& model_id, int fold_index) {
    config.validate();
    if (train.empty() || dev.empty()) {
        throw std::invalid_argument("train_one: train and dev must be non-empty");
    }

    Dataset resampled;
    const Dataset* train_set = &train;
    ClassWeights weights = ClassWeights::ones();
    switch (config.imbalance_strategy) {
        case ImbalanceStrategy::none:
            break;
        case ImbalanceStrategy::undersample:
            resampled = undersample(train, mix64(config.seed, 0x5a3eULL));
            train_set = &resampled;
            break;
        case ImbalanceStrategy::oversample:
            resampled = oversample(train, mix64(config.seed, 0x05e4ULL));
            train_set = &resampled;
            break;
        case ImbalanceStrategy::weights:
            weights = compute_class_weights(label_counts(train));
            break;
    }

    backend.reset_parameters(mix64(config.seed, 0xb0acULL));
    const auto train_tokens = tokenize_all(*train_set, backend, config.truncation);
    const auto dev_tokens = tokenize_all(dev, backend, config.truncation);

    const int dim = backend.feature_dim();
    HeadModel head(dim, config.seed);
    std::vector<double> head_grad(head.params.size(), 0.0);
    AdamW head_opt(head.params.size(), config);
    const bool backend_trainable = backend.trainable();
    AdamW backend_opt(backend.parameters().size(), config);

    std::vector<int> dev_truths;
    dev_truths.reserve(dev.size());
    for (const auto& ex : dev.examples) dev_truths.push_back(ex.label);

    Rng dropout_rng(mix64(config.seed, 0xd407ULL));
    EarlyStopper stopper(config.es_patience_epochs, config.es_threshold);
    std::vector<PredictionRecord> best_predictions;
    int epochs_run = 0;

    const std::size_t n_train = train_set->size();
    const std::size_t d = static_cast<std::size_t>(dim);
    const std::size_t w_size = static_cast<std::size_t>(kNumClasses) * d;

    for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
        epochs_run = epoch;

        std::vector<std::size_t> order(n_train);
        std::iota(order.begin(), order.end(), 0);
        Rng epoch_rng(mix64(config.seed, 0xe000ULL + static_cast<std::uint64_t>(epoch)));
        epoch_rng.shuffle(order);

        for (std::size_t start = 0; start < n_train; start += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t end = std::min(n_train, start + static_cast<std::size_t>(config.batch_size));
            const double inv_batch = 1.0 / static_cast<double>(end - start);

            std::fill(head_grad.begin(), head_grad.end(), 0.0);
            if (backend_trainable) backend.zero_gradients();

            double batch_loss = 0.0;
            for (std::size_t pos = start; pos < end; ++pos) {
                const std::size_t idx = order[pos];
                const auto& example = train_set->examples[idx];
                const auto& tokens = train_tokens[idx];

                std::unique_ptr<EncodeCache> cache;
                auto features =
                    backend.pooled_representation(tokens, backend_trainable ? &cache : nullptr);

                // Inverted dropout on the pooled features.
                std::vector<double> mask(d, 1.0);
                if (config.task_dropout > 0.0) {
                    const double keep_scale = 1.0 / (1.0 - config.task_dropout);
                    for (std::size_t j = 0; j < d; ++j) {
                        mask[j] = dropout_rng.uniform() < config.task_dropout ? 0.0 : keep_scale;
                        features[j] *= mask[j];
                    }
                }

                const auto logits = head.logits(features);
                require_finite_logits(logits);
                batch_loss += weighted_cross_entropy(logits, example.label, weights);

                auto d_logits = weighted_cross_entropy_grad(logits, example.label, weights);
                for (double& g : d_logits) g *= inv_batch;

                for (int k = 0; k < kNumClasses; ++k) {
                    const std::size_t row = static_cast<std::size_t>(k) * d;
                    const double gk = d_logits[static_cast<std::size_t>(k)];
                    for (std::size_t j = 0; j < d; ++j) head_grad[row + j] += gk * features[j];
                    head_grad[w_size + static_cast<std::size_t>(k)] += gk;
                }

                if (backend_trainable) {
                    std::vector<double> d_features(d, 0.0);
                    for (std::size_t j = 0; j < d; ++j) {
                        double acc = 0.0;
                        for (int k = 0; k < kNumClasses; ++k) {
                            acc += head.params[static_cast<std::size_t>(k) * d + j] *
                                   d_logits[static_cast<std::size_t>(k)];
                        }
                        d_features[j] = acc * mask[j];
                    }
                    backend.backward(tokens, *cache, d_features);
                }
            }

            batch_loss *= inv_batch;
            if (!std::isfinite(batch_loss)) {
                throw TrialDiverged("training diverged: non-finite loss at epoch " +
                                    std::to_string(epoch));
            }
            head_opt.step(head.params, head_grad, head.decay_mask);
            if (backend_trainable) {
                backend_opt.step(backend.parameters(), backend.gradients(), backend.decay_mask());
            }
        }

        // Epoch-end evaluation on dev with the current parameters.
        std::vector<int> preds;
        preds.reserve(dev.size());
        std::vector<PredictionRecord> records;
        records.reserve(dev.size());
        for (std::size_t i = 0; i < dev.size(); ++i) {
            const auto features = backend.pooled_representation(dev_tokens[i]);
            const auto logits = head.logits(features);
            require_finite_logits(logits);
            preds.push_back(argmax_label(logits));
            PredictionRecord rec;
            rec.example_id = dev.examples[i].id;
            rec.model_id = model_id;
            rec.fold = fold_index;
            rec.logits = logits;
            records.push_back(std::move(rec));
        }
        const double f1 = macro_f1(dev_truths, preds);
        const bool stop = stopper.observe(f1);
        if (stopper.is_new_best()) best_predictions = std::move(records);
        if (stop) break;
    }

    FoldResult result;
    result.fold_index = fold_index;
    result.best_dev_macro_f1 = stopper.best();
    result.epochs_run = epochs_run;
    result.predictions = std::move(best_predictions);
    return result;
}

namespace {

void apply_axis(TrialConfig& config, const std::string& name, double value) {
    if (name == "learning_rate") {
        config.learning_rate = value;
    } else if (name == "task_dropout") {
        config.task_dropout = value;
    } else if (name == "warmup_steps") {
        config.warmup_steps = static_cast<int>(std::llround(value));
    } else if (name == "weight_decay") {
        config.weight_decay = value;
    } else {
        throw std::invalid_argument("grid_search: unknown axis \"" + name +
                                    "\"; expected learning_rate, task_dropout, warmup_steps or "
                                    "weight_decay");
    }
}

bool beats_on_ties(const TrialConfig& challenger, const TrialConfig& incumbent) {
    if (challenger.learning_rate != incumbent.learning_rate) {
        return challenger.learning_rate < incumbent.learning_rate;
    }
    return challenger.task_dropout < incumbent.task_dropout;
}

}  // namespace

GridSearchResult grid_search(const GridAxes& grid, const TrialConfig& fixed, const Dataset& train,
                             const Dataset& dev, EncoderBackend& backend) {
    if (grid.empty()) throw std::invalid_argument("grid_search: grid must be non-empty");
    for (const auto& [name, values] : grid) {
        if (values.empty()) {
            throw std::invalid_argument("grid_search: axis \"" + name + "\" has no values");
        }
    }

    GridSearchResult result;
    result.best = fixed;
    bool have_best = false;

    std::vector<std::size_t> odometer(grid.size(), 0);
    while (true) {
        TrialConfig config = fixed;
        for (std::size_t axis = 0; axis < grid.size(); ++axis) {
            apply_axis(config, grid[axis].first, grid[axis].second[odometer[axis]]);
        }

        TrialLogEntry entry;
        entry.config = config;
        double score = -std::numeric_limits<double>::infinity();
        const auto t0 = std::chrono::steady_clock::now();
        try {
            const FoldResult r = train_one(config, train, dev, backend);
            entry.dev_macro_f1 = r.best_dev_macro_f1;
            entry.epochs_run = r.epochs_run;
            score = r.best_dev_macro_f1;
        } catch (const TrialDiverged& e) {
            entry.error = e.what();
        }
        entry.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        result.log.push_back(entry);

        const bool better =
            !have_best || score > result.best_dev_macro_f1 ||
            (score == result.best_dev_macro_f1 && beats_on_ties(config, result.best));
        if (better) {
            result.best = config;
            result.best_dev_macro_f1 = score;
            have_best = true;
        }

        // Advance the odometer, last axis fastest.
        std::size_t axis = grid.size();
        while (axis > 0) {
            --axis;
            if (++odometer[axis] < grid[axis].second.size()) break;
            odometer[axis] = 0;
            if (axis == 0) return result;
        }
    }
}

CrossValidationResult cross_validate(const TrialConfig& config, const Dataset& combined,
                                     const FoldAssignment& folds, EncoderBackend& backend,
                                     const std::string& model_id) {
    validate_fold_cover(folds, combined);
    if (folds.k < 2) throw std::invalid_argument("cross_validate: need at least 2 folds");

    CrossValidationResult result;
    std::vector<double> scores;
    for (int fold = 0; fold < folds.k; ++fold) {
        Dataset train_split;
        train_split.split_tag = SplitTag::train;
        Dataset dev_split;
        dev_split.split_tag = SplitTag::dev;
        for (const auto& ex : combined.examples) {
            if (folds.fold_of(ex.id) == fold) {
                dev_split.examples.push_back(ex);
            } else {
                train_split.examples.push_back(ex);
            }
        }
        if (dev_split.empty()) {
            throw std::runtime_error("cross_validate: fold " + std::to_string(fold) +
                                     " has no validation examples");
        }
        TrialConfig fold_config = config;
        fold_config.seed = mix64(config.seed, 0xf01dULL + static_cast<std::uint64_t>(fold));
        result.folds.push_back(
            train_one(fold_config, train_split, dev_split, backend, model_id, fold));
        scores.push_back(result.folds.back().best_dev_macro_f1);
    }
    result.mean_macro_f1 = cv_mean(scores);
    return result;
}

namespace {

json trial_config_json(const TrialConfig& c) {
    json j;
    j["learning_rate"] = c.learning_rate;
    j["task_dropout"] = c.task_dropout;
    j["warmup_steps"] = c.warmup_steps;
    j["weight_decay"] = c.weight_decay;
    j["batch_size"] = c.batch_size;
    j["max_epochs"] = c.max_epochs;
    j["optimizer_eps"] = c.optimizer_eps;
    j["optimizer_beta1"] = c.optimizer_beta1;
    j["optimizer_beta2"] = c.optimizer_beta2;
    j["es_patience_epochs"] = c.es_patience_epochs;
    j["es_threshold"] = c.es_threshold;
    j["seed"] = c.seed;
    j["truncation"] = {{"max_len", c.truncation.max_len},
                       {"n_special", c.truncation.n_special},
                       {"head_fraction", c.truncation.head_fraction}};
    j["imbalance_strategy"] = imbalance_strategy_name(c.imbalance_strategy);
    return j;
}

}  // namespace

std::string trial_log_line(const TrialLogEntry& entry) {
    json j;
    j["config"] = trial_config_json(entry.config);
    j["dev_macro_f1"] = entry.dev_macro_f1 ? json(*entry.dev_macro_f1) : json(nullptr);
    j["epochs_run"] = entry.epochs_run;
    j["wall_seconds"] = entry.wall_seconds;
    if (!entry.error.empty()) j["error"] = entry.error;
    return j.dump();
}

void append_trial_log(const TrialLogEntry& entry, const std::filesystem::path& path) {
    auto parent = path.parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    std::ofstream out(path, std::ios::app);
    if (!out) throw std::runtime_error("cannot open trial log: " + path.string());
    out << trial_log_line(entry) << "\n";
}

}  // namespace depsev
