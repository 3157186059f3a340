#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace depsev {

/// Severity labels are ordinal: 0 = not depressed, 1 = moderately
/// depressed, 2 = severely depressed.
inline constexpr int kNumClasses = 3;

enum class SplitTag { train, dev, combined, test };

std::string split_tag_name(SplitTag tag);
SplitTag parse_split_tag(std::string_view s);

struct LabeledExample {
    std::string id;
    std::string text;
    int label = 0;
};

struct Dataset {
    std::vector<LabeledExample> examples;
    SplitTag split_tag = SplitTag::train;

    std::size_t size() const { return examples.size(); }
    bool empty() const { return examples.empty(); }
};

/// Canonical label name for output files ("Not depression", "Moderately",
/// "Severe").
std::string label_name(int label);

/// Case-insensitive label parsing; accepts the canonical names and their
/// documented variants. Throws std::runtime_error listing accepted labels.
int parse_label(std::string_view s);

/// Loads a `pid,text,label` delimiter-separated file. Row order is
/// preserved. Malformed rows, empty texts, unknown labels and duplicate
/// ids raise errors naming the offending line.
Dataset load_dataset(const std::filesystem::path& path, SplitTag tag);

/// Inverse of load_dataset; text fields round-trip byte-exactly.
void save_dataset(const Dataset& dataset, const std::filesystem::path& path);

/// Per-label counts; every label in [0, kNumClasses) is present.
std::map<int, std::size_t> label_counts(const Dataset& dataset);

/// Trim plus internal whitespace collapse; the key used for duplicate
/// detection.
std::string normalize_text(std::string_view text);

/// Removes examples whose normalized text was already seen, keeping the
/// first occurrence in input order. Idempotent.
std::pair<Dataset, std::size_t> deduplicate(const Dataset& dataset);

/// Concatenates two datasets, enforcing id uniqueness across both.
Dataset concat_datasets(const Dataset& a, const Dataset& b, SplitTag tag);

struct FoldAssignment {
    int k = 0;
    std::uint64_t seed = 0;
    /// (id, fold) in dataset order; the serialization order.
    std::vector<std::pair<std::string, int>> rows;
    /// id -> fold lookup.
    std::unordered_map<std::string, int> by_id;

    int fold_of(const std::string& id) const;
};

/// Deterministic stratified k-fold split. Within each class, members are
/// shuffled under the seed and dealt round-robin, so per-fold class counts
/// differ by at most one and per-fold label proportions track the global
/// ones. Throws if any class has fewer than k members, naming the class.
FoldAssignment stratified_kfold(const Dataset& dataset, int k, std::uint64_t seed);

/// Writes/reads the two-column `pid,fold` file.
void save_folds(const FoldAssignment& folds, const std::filesystem::path& path);
FoldAssignment load_folds(const std::filesystem::path& path);

/// Checks that the assignment covers exactly the dataset's ids.
void validate_fold_cover(const FoldAssignment& folds, const Dataset& dataset);

/// True when every fold's per-label share is within `tolerance_pp`
/// percentage points of the global share.
bool stratification_within(const Dataset& dataset, const FoldAssignment& folds,
                           double tolerance_pp);

}  // namespace depsev
