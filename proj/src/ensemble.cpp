#include "depsev/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>
#include <tuple>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "depsev/csv.hpp"
#include "depsev/util.hpp"

namespace depsev {

using nlohmann::json;

std::string combinator_name(CombinatorKind kind) {
    switch (kind) {
        case CombinatorKind::logits_mean: return "logits_mean";
        case CombinatorKind::softmax_mean: return "softmax_mean";
        case CombinatorKind::voting: return "voting";
        case CombinatorKind::regression_mean: return "regression_mean";
    }
    return "unknown";
}

CombinatorKind parse_combinator(std::string_view s) {
    if (s == "logits_mean") return CombinatorKind::logits_mean;
    if (s == "softmax_mean") return CombinatorKind::softmax_mean;
    if (s == "voting") return CombinatorKind::voting;
    if (s == "regression_mean") return CombinatorKind::regression_mean;
    throw std::invalid_argument("unknown combinator \"" + std::string(s) +
                                "\"; expected logits_mean, softmax_mean, voting or regression_mean");
}

void EnsembleSpec::validate() const {
    if (members.empty()) throw std::invalid_argument("ensemble spec: members must be non-empty");
    if (stages.empty() || stages.size() > 2) {
        throw std::invalid_argument("ensemble spec: expected 1 or 2 stages, got " +
                                    std::to_string(stages.size()));
    }
}

int argmax_label(std::span<const double> scores) {
    if (scores.empty()) throw std::invalid_argument("argmax_label: empty scores");
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i) {
        if (scores[i] >= scores[best]) best = i;  // >= keeps the higher label on ties
    }
    return static_cast<int>(best);
}

std::array<double, kNumClasses> softmax(const std::array<double, kNumClasses>& logits) {
    double max_logit = logits[0];
    for (double v : logits) max_logit = std::max(max_logit, v);
    std::array<double, kNumClasses> out{};
    double sum = 0.0;
    for (std::size_t j = 0; j < logits.size(); ++j) {
        out[j] = std::exp(logits[j] - max_logit);
        sum += out[j];
    }
    for (double& v : out) v /= sum;
    return out;
}

namespace {

void require_records(std::span<const PredictionRecord> records, const char* who) {
    if (records.empty()) {
        throw std::invalid_argument(std::string(who) + ": at least one record required");
    }
    for (const auto& r : records) {
        for (double v : r.logits) {
            if (!std::isfinite(v)) {
                throw std::invalid_argument(std::string(who) + ": non-finite logit in record for example \"" +
                                            r.example_id + "\"");
            }
        }
    }
}

}  // namespace

int combine_logits_mean(std::span<const PredictionRecord> records) {
    require_records(records, "combine_logits_mean");
    std::array<double, kNumClasses> mean{};
    for (const auto& r : records) {
        for (std::size_t j = 0; j < mean.size(); ++j) mean[j] += r.logits[j];
    }
    for (double& v : mean) v /= static_cast<double>(records.size());
    return argmax_label(mean);
}

int combine_softmax_mean(std::span<const PredictionRecord> records) {
    require_records(records, "combine_softmax_mean");
    std::array<double, kNumClasses> mean{};
    for (const auto& r : records) {
        const auto p = softmax(r.logits);
        for (std::size_t j = 0; j < mean.size(); ++j) mean[j] += p[j];
    }
    for (double& v : mean) v /= static_cast<double>(records.size());
    return argmax_label(mean);
}

int combine_voting(std::span<const PredictionRecord> records) {
    require_records(records, "combine_voting");
    std::array<double, kNumClasses> votes{};
    for (const auto& r : records) {
        votes[static_cast<std::size_t>(argmax_label(r.logits))] += 1.0;
    }
    return argmax_label(votes);
}

int combine_regression_mean(std::span<const PredictionRecord> records) {
    require_records(records, "combine_regression_mean");
    double sum = 0.0;
    for (const auto& r : records) sum += static_cast<double>(argmax_label(r.logits));
    const double mean = sum / static_cast<double>(records.size());
    const int rounded = static_cast<int>(std::floor(mean + 0.5));  // halves toward severity
    return std::clamp(rounded, 0, kNumClasses - 1);
}

int combine(CombinatorKind kind, std::span<const PredictionRecord> records) {
    switch (kind) {
        case CombinatorKind::logits_mean: return combine_logits_mean(records);
        case CombinatorKind::softmax_mean: return combine_softmax_mean(records);
        case CombinatorKind::voting: return combine_voting(records);
        case CombinatorKind::regression_mean: return combine_regression_mean(records);
    }
    throw std::invalid_argument("combine: unknown combinator kind");
}

namespace {

bool selector_matches(const MemberSelector& m, const PredictionRecord& r) {
    return r.model_id == m.model_id && (!m.fold.has_value() || *m.fold == r.fold);
}

std::string selector_str(const MemberSelector& m) {
    return "(model=" + m.model_id + ", fold=" + (m.fold ? std::to_string(*m.fold) : "*") + ")";
}

}  // namespace

std::vector<std::pair<std::string, int>> run_ensemble(const EnsembleSpec& spec,
                                                      std::span<const PredictionRecord> records) {
    spec.validate();

    // Index records per example, rejecting duplicate (example, model, fold) entries.
    std::vector<std::string> example_order;
    std::unordered_map<std::string, std::vector<const PredictionRecord*>> by_example;
    std::set<std::tuple<std::string, std::string, int>> seen;
    for (const auto& r : records) {
        if (!seen.emplace(r.example_id, r.model_id, r.fold).second) {
            throw std::runtime_error("duplicate prediction record for example \"" + r.example_id +
                                     "\" from model \"" + r.model_id + "\" fold " +
                                     std::to_string(r.fold));
        }
        auto [it, inserted] = by_example.try_emplace(r.example_id);
        if (inserted) example_order.push_back(r.example_id);
        it->second.push_back(&r);
    }

    // Completeness: every example needs at least one record per member selector.
    std::vector<std::string> gaps;
    for (const auto& id : example_order) {
        const auto& recs = by_example[id];
        for (const auto& m : spec.members) {
            const bool found = std::any_of(recs.begin(), recs.end(),
                                           [&](const PredictionRecord* r) { return selector_matches(m, *r); });
            if (!found) gaps.push_back(selector_str(m) + " example \"" + id + "\"");
        }
    }
    if (!gaps.empty()) {
        std::ostringstream ss;
        ss << "missing prediction records for " << gaps.size() << " (member, example) pair(s):";
        const std::size_t show = std::min<std::size_t>(gaps.size(), 20);
        for (std::size_t i = 0; i < show; ++i) ss << "\n  " << gaps[i];
        if (gaps.size() > show) ss << "\n  ... and " << (gaps.size() - show) << " more";
        throw std::runtime_error(ss.str());
    }

    std::vector<std::pair<std::string, int>> out;
    out.reserve(example_order.size());
    for (const auto& id : example_order) {
        const auto& recs = by_example[id];

        // Matched records in member order, deduplicated across overlapping selectors.
        std::vector<PredictionRecord> matched;
        std::set<const PredictionRecord*> taken;
        std::vector<std::string> model_order;
        for (const auto& m : spec.members) {
            for (const PredictionRecord* r : recs) {
                if (!selector_matches(m, *r) || !taken.insert(r).second) continue;
                matched.push_back(*r);
                if (std::find(model_order.begin(), model_order.end(), r->model_id) ==
                    model_order.end()) {
                    model_order.push_back(r->model_id);
                }
            }
        }

        int label = 0;
        if (spec.stages.size() == 1) {
            label = combine(spec.stages[0], matched);
        } else {
            // Stage 1 within each model, stage 2 across the per-model labels
            // (carried as one-hot records).
            std::vector<PredictionRecord> stage2;
            for (const auto& model : model_order) {
                std::vector<PredictionRecord> group;
                for (const auto& r : matched) {
                    if (r.model_id == model) group.push_back(r);
                }
                const int model_label = combine(spec.stages[0], group);
                PredictionRecord synth;
                synth.example_id = id;
                synth.model_id = model;
                synth.fold = -1;
                synth.logits.fill(0.0);
                synth.logits[static_cast<std::size_t>(model_label)] = 1.0;
                stage2.push_back(std::move(synth));
            }
            label = combine(spec.stages[1], stage2);
        }
        out.emplace_back(id, label);
    }
    return out;
}

std::vector<PredictionRecord> load_prediction_records(const std::filesystem::path& path) {
    const std::string content = read_file(path);
    std::vector<PredictionRecord> records;
    std::size_t line_no = 0;
    std::istringstream in(content);
    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const std::string where = path.string() + ":" + std::to_string(line_no);
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw std::runtime_error(where + ": invalid JSON: " + e.what());
        }
        PredictionRecord r;
        try {
            r.example_id = j.at("example_id").get<std::string>();
            r.model_id = j.at("model_id").get<std::string>();
            r.fold = j.at("fold").get<int>();
            const auto& logits = j.at("logits");
            if (!logits.is_array() || logits.size() != kNumClasses) {
                throw std::runtime_error("logits must be an array of " +
                                         std::to_string(kNumClasses) + " numbers");
            }
            for (std::size_t i = 0; i < r.logits.size(); ++i) {
                r.logits[i] = logits[i].get<double>();
                if (!std::isfinite(r.logits[i])) throw std::runtime_error("non-finite logit");
            }
        } catch (const std::exception& e) {
            throw std::runtime_error(where + ": " + e.what());
        }
        records.push_back(std::move(r));
    }
    return records;
}

void save_prediction_records(std::span<const PredictionRecord> records,
                             const std::filesystem::path& path) {
    std::string out;
    for (const auto& r : records) {
        json j;
        j["example_id"] = r.example_id;
        j["model_id"] = r.model_id;
        j["fold"] = r.fold;
        j["logits"] = r.logits;
        out += j.dump();
        out += "\n";
    }
    write_file_atomic(path, out);
}

EnsembleSpec load_ensemble_spec(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw std::runtime_error(path.string() + ": invalid JSON: " + e.what());
    }
    EnsembleSpec spec;
    if (j.contains("stages")) {
        for (const auto& s : j.at("stages")) {
            spec.stages.push_back(parse_combinator(s.get<std::string>()));
        }
        if (j.contains("kind")) {
            throw std::runtime_error(path.string() + ": give either \"kind\" or \"stages\", not both");
        }
    } else if (j.contains("kind")) {
        spec.stages.push_back(parse_combinator(j.at("kind").get<std::string>()));
    } else {
        throw std::runtime_error(path.string() + ": spec needs a \"kind\" or a \"stages\" list");
    }
    if (!j.contains("members") || !j.at("members").is_array()) {
        throw std::runtime_error(path.string() + ": spec needs a \"members\" array");
    }
    for (const auto& m : j.at("members")) {
        MemberSelector sel;
        sel.model_id = m.at("model_id").get<std::string>();
        if (m.contains("fold") && !m.at("fold").is_null()) {
            if (m.at("fold").is_string()) {
                const auto s = m.at("fold").get<std::string>();
                if (s != "*") {
                    throw std::runtime_error(path.string() + ": fold must be an integer or \"*\"");
                }
            } else {
                sel.fold = m.at("fold").get<int>();
            }
        }
        spec.members.push_back(std::move(sel));
    }
    spec.validate();
    return spec;
}

void save_submission(const std::vector<std::pair<std::string, int>>& labels,
                     const std::filesystem::path& path) {
    std::string out = "pid,label_string\n";
    for (const auto& [id, label] : labels) {
        out += format_csv_row({id, label_name(label)});
    }
    write_file_atomic(path, out);
}

std::vector<std::pair<std::string, int>> load_submission(const std::filesystem::path& path) {
    const auto records = parse_csv_file(path);
    if (records.empty() || records.front().fields.size() != 2 ||
        to_lower(trim(records.front().fields[0])) != "pid") {
        throw std::runtime_error(path.string() + ": expected header pid,label_string");
    }
    std::vector<std::pair<std::string, int>> out;
    for (std::size_t i = 1; i < records.size(); ++i) {
        const auto& rec = records[i];
        if (rec.fields.size() != 2) {
            throw std::runtime_error(path.string() + ":" + std::to_string(rec.line) +
                                     ": malformed row, expected 2 fields");
        }
        out.emplace_back(trim(rec.fields[0]), parse_label(rec.fields[1]));
    }
    return out;
}

}  // namespace depsev
