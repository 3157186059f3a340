#include "depsev/dataset.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "depsev/csv.hpp"
#include "depsev/util.hpp"

namespace depsev {

std::string split_tag_name(SplitTag tag) {
    switch (tag) {
        case SplitTag::train: return "train";
        case SplitTag::dev: return "dev";
        case SplitTag::combined: return "combined";
        case SplitTag::test: return "test";
    }
    return "unknown";
}

SplitTag parse_split_tag(std::string_view s) {
    if (s == "train") return SplitTag::train;
    if (s == "dev") return SplitTag::dev;
    if (s == "combined") return SplitTag::combined;
    if (s == "test") return SplitTag::test;
    throw std::runtime_error("unknown split tag: " + std::string(s));
}

std::string label_name(int label) {
    switch (label) {
        case 0: return "Not depression";
        case 1: return "Moderately";
        case 2: return "Severe";
    }
    throw std::invalid_argument("label out of range: " + std::to_string(label));
}

namespace {

const std::vector<std::pair<std::string, int>>& label_aliases() {
    static const std::vector<std::pair<std::string, int>> aliases = {
        {"not depression", 0}, {"not depressed", 0},
        {"moderate", 1},       {"moderately", 1},     {"moderately depressed", 1},
        {"severe", 2},         {"severe depression", 2}, {"severely depressed", 2},
    };
    return aliases;
}

std::string accepted_labels_message() {
    std::ostringstream ss;
    ss << "accepted labels (case-insensitive):";
    for (const auto& [name, label] : label_aliases()) ss << " \"" << name << "\"";
    return ss.str();
}

}  // namespace

int parse_label(std::string_view s) {
    const std::string key = to_lower(collapse_whitespace(s));
    for (const auto& [name, label] : label_aliases()) {
        if (key == name) return label;
    }
    throw std::runtime_error("unknown label \"" + std::string(s) + "\"; " +
                             accepted_labels_message());
}

Dataset load_dataset(const std::filesystem::path& path, SplitTag tag) {
    const auto records = parse_csv_file(path);
    if (records.empty()) {
        throw std::runtime_error(path.string() + ": empty file, expected header pid,text,label");
    }
    const auto& header = records.front().fields;
    if (header.size() != 3 || to_lower(trim(header[0])) != "pid" ||
        to_lower(trim(header[1])) != "text" || to_lower(trim(header[2])) != "label") {
        throw std::runtime_error(path.string() + ":1: expected header pid,text,label");
    }

    Dataset dataset;
    dataset.split_tag = tag;
    dataset.examples.reserve(records.size() - 1);
    std::unordered_set<std::string> seen_ids;
    for (std::size_t i = 1; i < records.size(); ++i) {
        const auto& rec = records[i];
        const std::string where = path.string() + ":" + std::to_string(rec.line);
        if (rec.fields.size() != 3) {
            throw std::runtime_error(where + ": malformed row, expected 3 fields, got " +
                                     std::to_string(rec.fields.size()));
        }
        LabeledExample ex;
        ex.id = trim(rec.fields[0]);
        ex.text = rec.fields[1];
        if (ex.id.empty()) {
            throw std::runtime_error(where + ": empty pid");
        }
        if (trim(ex.text).empty()) {
            throw std::runtime_error(where + ": empty text");
        }
        try {
            ex.label = parse_label(rec.fields[2]);
        } catch (const std::exception& e) {
            throw std::runtime_error(where + ": " + e.what());
        }
        if (!seen_ids.insert(ex.id).second) {
            throw std::runtime_error(where + ": duplicate pid \"" + ex.id + "\"");
        }
        dataset.examples.push_back(std::move(ex));
    }
    return dataset;
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
    std::string out = "pid,text,label\n";
    for (const auto& ex : dataset.examples) {
        out += format_csv_row({ex.id, ex.text, label_name(ex.label)});
    }
    write_file_atomic(path, out);
}

std::map<int, std::size_t> label_counts(const Dataset& dataset) {
    std::map<int, std::size_t> counts;
    for (int c = 0; c < kNumClasses; ++c) counts[c] = 0;
    for (const auto& ex : dataset.examples) ++counts[ex.label];
    return counts;
}

std::string normalize_text(std::string_view text) {
    return collapse_whitespace(text);
}

std::pair<Dataset, std::size_t> deduplicate(const Dataset& dataset) {
    Dataset out;
    out.split_tag = dataset.split_tag;
    std::unordered_set<std::string> seen;
    std::size_t removed = 0;
    for (const auto& ex : dataset.examples) {
        if (seen.insert(normalize_text(ex.text)).second) {
            out.examples.push_back(ex);
        } else {
            ++removed;
        }
    }
    return {std::move(out), removed};
}

Dataset concat_datasets(const Dataset& a, const Dataset& b, SplitTag tag) {
    Dataset out;
    out.split_tag = tag;
    out.examples.reserve(a.size() + b.size());
    std::unordered_set<std::string> seen;
    for (const auto* src : {&a, &b}) {
        for (const auto& ex : src->examples) {
            if (!seen.insert(ex.id).second) {
                throw std::runtime_error("duplicate pid across datasets: \"" + ex.id + "\"");
            }
            out.examples.push_back(ex);
        }
    }
    return out;
}

int FoldAssignment::fold_of(const std::string& id) const {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw std::runtime_error("id not in fold assignment: \"" + id + "\"");
    return it->second;
}

FoldAssignment stratified_kfold(const Dataset& dataset, int k, std::uint64_t seed) {
    if (k < 2) throw std::invalid_argument("stratified_kfold: k must be >= 2");
    const auto counts = label_counts(dataset);
    for (const auto& [label, count] : counts) {
        if (count > 0 && count < static_cast<std::size_t>(k)) {
            throw std::runtime_error("stratified_kfold: class \"" + label_name(label) + "\" has " +
                                     std::to_string(count) + " members, fewer than k=" +
                                     std::to_string(k));
        }
    }

    // Per class: shuffle member positions under a class-derived seed, then
    // deal round-robin. The start fold rotates with the class so no fold
    // systematically collects every class's remainder.
    std::vector<int> fold_by_pos(dataset.size(), -1);
    for (int label = 0; label < kNumClasses; ++label) {
        std::vector<std::size_t> positions;
        for (std::size_t i = 0; i < dataset.size(); ++i) {
            if (dataset.examples[i].label == label) positions.push_back(i);
        }
        if (positions.empty()) continue;
        Rng rng(mix64(seed, static_cast<std::uint64_t>(label)));
        rng.shuffle(positions);
        for (std::size_t j = 0; j < positions.size(); ++j) {
            fold_by_pos[positions[j]] = static_cast<int>((j + label) % static_cast<std::size_t>(k));
        }
    }

    FoldAssignment fa;
    fa.k = k;
    fa.seed = seed;
    fa.rows.reserve(dataset.size());
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        fa.rows.emplace_back(dataset.examples[i].id, fold_by_pos[i]);
        fa.by_id.emplace(dataset.examples[i].id, fold_by_pos[i]);
    }
    return fa;
}

void save_folds(const FoldAssignment& folds, const std::filesystem::path& path) {
    std::string out = "pid,fold\n";
    for (const auto& [id, fold] : folds.rows) {
        out += format_csv_row({id, std::to_string(fold)});
    }
    write_file_atomic(path, out);
}

FoldAssignment load_folds(const std::filesystem::path& path) {
    const auto records = parse_csv_file(path);
    if (records.empty() || records.front().fields.size() != 2 ||
        to_lower(trim(records.front().fields[0])) != "pid" ||
        to_lower(trim(records.front().fields[1])) != "fold") {
        throw std::runtime_error(path.string() + ": expected header pid,fold");
    }
    FoldAssignment fa;
    int max_fold = -1;
    for (std::size_t i = 1; i < records.size(); ++i) {
        const auto& rec = records[i];
        const std::string where = path.string() + ":" + std::to_string(rec.line);
        if (rec.fields.size() != 2) {
            throw std::runtime_error(where + ": malformed row, expected 2 fields");
        }
        int fold = 0;
        try {
            fold = std::stoi(rec.fields[1]);
        } catch (const std::exception&) {
            throw std::runtime_error(where + ": fold is not an integer: \"" + rec.fields[1] + "\"");
        }
        if (fold < 0) throw std::runtime_error(where + ": negative fold index");
        const std::string id = trim(rec.fields[0]);
        if (!fa.by_id.emplace(id, fold).second) {
            throw std::runtime_error(where + ": duplicate pid \"" + id + "\"");
        }
        fa.rows.emplace_back(id, fold);
        max_fold = std::max(max_fold, fold);
    }
    fa.k = max_fold + 1;
    return fa;
}

void validate_fold_cover(const FoldAssignment& folds, const Dataset& dataset) {
    std::vector<std::string> missing;
    for (const auto& ex : dataset.examples) {
        if (folds.by_id.find(ex.id) == folds.by_id.end()) missing.push_back(ex.id);
    }
    if (!missing.empty()) {
        throw std::runtime_error("fold assignment missing " + std::to_string(missing.size()) +
                                 " dataset ids, first: \"" + missing.front() + "\"");
    }
    if (folds.by_id.size() != dataset.size()) {
        throw std::runtime_error("fold assignment covers " + std::to_string(folds.by_id.size()) +
                                 " ids but dataset has " + std::to_string(dataset.size()));
    }
}

bool stratification_within(const Dataset& dataset, const FoldAssignment& folds,
                           double tolerance_pp) {
    if (dataset.empty() || folds.k <= 0) return true;
    const auto global = label_counts(dataset);
    std::vector<std::map<int, std::size_t>> per_fold(folds.k);
    std::vector<std::size_t> fold_sizes(folds.k, 0);
    for (const auto& ex : dataset.examples) {
        const int f = folds.fold_of(ex.id);
        ++per_fold[f][ex.label];
        ++fold_sizes[f];
    }
    for (int f = 0; f < folds.k; ++f) {
        if (fold_sizes[f] == 0) return false;
        for (int label = 0; label < kNumClasses; ++label) {
            const double global_share =
                static_cast<double>(global.at(label)) / static_cast<double>(dataset.size());
            std::size_t n = 0;
            auto it = per_fold[f].find(label);
            if (it != per_fold[f].end()) n = it->second;
            const double fold_share = static_cast<double>(n) / static_cast<double>(fold_sizes[f]);
            if (std::abs(fold_share - global_share) > tolerance_pp / 100.0) return false;
        }
    }
    return true;
}

}  // namespace depsev
