#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "depsev/dataset.hpp"

namespace depsev {

/// Raw classifier outputs for one example from one (model, fold) pair.
struct PredictionRecord {
    std::string example_id;
    std::string model_id;
    int fold = 0;
    std::array<double, kNumClasses> logits{};
};

enum class CombinatorKind { logits_mean, softmax_mean, voting, regression_mean };

std::string combinator_name(CombinatorKind kind);
CombinatorKind parse_combinator(std::string_view s);

/// Selects records of one model; fold is either a concrete index or empty,
/// which matches any fold of that model.
struct MemberSelector {
    std::string model_id;
    std::optional<int> fold;
};

/// One combinator stage applies across all member records; two stages
/// apply the first within each model's records and the second across the
/// per-model results.
struct EnsembleSpec {
    std::vector<CombinatorKind> stages;
    std::vector<MemberSelector> members;

    void validate() const;
};

/// Argmax with ties broken toward the higher label (greater severity).
int argmax_label(std::span<const double> scores);

std::array<double, kNumClasses> softmax(const std::array<double, kNumClasses>& logits);

int combine_logits_mean(std::span<const PredictionRecord> records);
int combine_softmax_mean(std::span<const PredictionRecord> records);
int combine_voting(std::span<const PredictionRecord> records);

/// Each record contributes its argmax label as an integer; the mean is
/// rounded to the nearest label, halves toward higher severity.
int combine_regression_mean(std::span<const PredictionRecord> records);

int combine(CombinatorKind kind, std::span<const PredictionRecord> records);

/// Applies the spec to all records. Output pairs (example_id, label) follow
/// the first-appearance order of example ids in `records`. Throws when some
/// (member, example) pair has no record, listing the gaps.
std::vector<std::pair<std::string, int>> run_ensemble(const EnsembleSpec& spec,
                                                      std::span<const PredictionRecord> records);

// --- persistence ---

std::vector<PredictionRecord> load_prediction_records(const std::filesystem::path& path);
void save_prediction_records(std::span<const PredictionRecord> records,
                             const std::filesystem::path& path);

EnsembleSpec load_ensemble_spec(const std::filesystem::path& path);

/// Two-column `pid,label_string` file using the canonical label names.
void save_submission(const std::vector<std::pair<std::string, int>>& labels,
                     const std::filesystem::path& path);
std::vector<std::pair<std::string, int>> load_submission(const std::filesystem::path& path);

}  // namespace depsev
