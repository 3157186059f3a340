#include "depsev/pretrain_corpus.hpp"

#include <iostream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "depsev/csv.hpp"
#include "depsev/dataset.hpp"
#include "depsev/util.hpp"

namespace depsev {

using nlohmann::json;

std::string community_category_name(CommunityCategory c) {
    return c == CommunityCategory::mental_health ? "mental_health" : "control";
}

CommunityCategory parse_community_category(std::string_view s) {
    if (s == "mental_health") return CommunityCategory::mental_health;
    if (s == "control") return CommunityCategory::control;
    throw std::invalid_argument("unknown community category \"" + std::string(s) +
                                "\"; expected mental_health or control");
}

std::vector<RawPost> FixtureClient::top_posts(const std::string& community, std::size_t limit,
                                              TopWindow window) {
    (void)window;  // fixtures carry a single ranking
    ++call_count_;
    const auto path = dir_ / (community + ".json");
    if (!std::filesystem::exists(path)) {
        throw ClientError(community, "fixture client: no fixture for community \"" + community +
                                         "\" at " + path.string());
    }
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw ClientError(community, "fixture client: invalid JSON in " + path.string() + ": " +
                                         e.what());
    }
    std::vector<RawPost> posts;
    for (const auto& p : j.at("posts")) {
        RawPost post;
        post.id = p.at("id").get<std::string>();
        post.author = p.at("author").get<std::string>();
        post.text = p.at("text").get<std::string>();
        post.kind = p.value("kind", "submission");
        posts.push_back(std::move(post));
        if (posts.size() == limit) break;
    }
    return posts;
}

std::uint64_t sample_quota(const CommunitySpec& community) {
    return community.follower_count * 2 / 100;
}

std::string pseudonymize(std::string_view author, std::uint64_t key) {
    const std::uint64_t h = fnv1a64(author, mix64(key, 0xa0a0ULL));
    return "u" + hex64(h);
}

std::vector<CorpusDocument> fetch_top(const CommunitySpec& community, std::size_t quota,
                                      CommunityClient& client, std::uint64_t anonymize_key,
                                      TopWindow window) {
    if (quota == 0) return {};
    const auto posts = client.top_posts(community.name, quota, window);
    if (posts.size() < quota) {
        std::cerr << "warning: community \"" << community.name << "\" returned " << posts.size()
                  << " of " << quota << " requested posts\n";
    }
    std::vector<CorpusDocument> documents;
    documents.reserve(std::min(quota, posts.size()));
    for (std::size_t i = 0; i < posts.size() && i < quota; ++i) {
        CorpusDocument doc;
        doc.doc_id = community.name + "/" + posts[i].id;
        doc.community = community.name;
        doc.text = posts[i].text;
        doc.author_token = pseudonymize(posts[i].author, anonymize_key);
        doc.kind = posts[i].kind;
        documents.push_back(std::move(doc));
    }
    return documents;
}

std::pair<std::vector<CorpusDocument>, std::size_t> dedup_corpus(
    const std::vector<CorpusDocument>& documents) {
    std::vector<CorpusDocument> kept;
    std::unordered_set<std::string> seen;
    std::size_t removed = 0;
    for (const auto& doc : documents) {
        if (seen.insert(normalize_text(doc.text)).second) {
            kept.push_back(doc);
        } else {
            ++removed;
        }
    }
    return {std::move(kept), removed};
}

PartitionReport partition_report(std::span<const CorpusDocument> documents,
                                 std::span<const CommunitySpec> communities) {
    std::unordered_map<std::string, CommunityCategory> categories;
    for (const auto& c : communities) categories.emplace(c.name, c.category);

    PartitionReport report;
    for (const auto& doc : documents) {
        auto it = categories.find(doc.community);
        if (it == categories.end()) {
            throw std::runtime_error("partition_report: document from unknown community \"" +
                                     doc.community + "\"");
        }
        if (it->second == CommunityCategory::mental_health) {
            ++report.mental_health_count;
        } else {
            ++report.control_count;
        }
        report.bytes += doc.text.size();
    }
    return report;
}

std::vector<CommunitySpec> load_communities(const std::filesystem::path& path) {
    const auto records = parse_csv_file(path);
    if (records.empty() || records.front().fields.size() != 3 ||
        to_lower(trim(records.front().fields[0])) != "name") {
        throw std::runtime_error(path.string() + ": expected header name,follower_count,category");
    }
    std::vector<CommunitySpec> communities;
    std::unordered_set<std::string> seen;
    for (std::size_t i = 1; i < records.size(); ++i) {
        const auto& rec = records[i];
        const std::string where = path.string() + ":" + std::to_string(rec.line);
        if (rec.fields.size() != 3) {
            throw std::runtime_error(where + ": malformed row, expected 3 fields");
        }
        CommunitySpec c;
        c.name = trim(rec.fields[0]);
        if (c.name.empty()) throw std::runtime_error(where + ": empty community name");
        if (!seen.insert(c.name).second) {
            throw std::runtime_error(where + ": duplicate community \"" + c.name + "\"");
        }
        try {
            c.follower_count = std::stoull(trim(rec.fields[1]));
        } catch (const std::exception&) {
            throw std::runtime_error(where + ": follower_count is not a nonnegative integer: \"" +
                                     rec.fields[1] + "\"");
        }
        try {
            c.category = parse_community_category(trim(rec.fields[2]));
        } catch (const std::exception& e) {
            throw std::runtime_error(where + ": " + e.what());
        }
        communities.push_back(std::move(c));
    }
    return communities;
}

void save_corpus_jsonl(std::span<const CorpusDocument> documents,
                       const std::filesystem::path& path) {
    std::string out;
    for (const auto& doc : documents) {
        json j;
        j["doc_id"] = doc.doc_id;
        j["community"] = doc.community;
        j["text"] = doc.text;
        j["author_token"] = doc.author_token;
        j["kind"] = doc.kind;
        out += j.dump();
        out += "\n";
    }
    write_file_atomic(path, out);
}

std::vector<CorpusDocument> load_corpus_jsonl(const std::filesystem::path& path) {
    const std::string content = read_file(path);
    std::vector<CorpusDocument> documents;
    std::istringstream in(content);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                     ": invalid JSON: " + e.what());
        }
        CorpusDocument doc;
        doc.doc_id = j.at("doc_id").get<std::string>();
        doc.community = j.at("community").get<std::string>();
        doc.text = j.at("text").get<std::string>();
        doc.author_token = j.at("author_token").get<std::string>();
        doc.kind = j.value("kind", "submission");
        documents.push_back(std::move(doc));
    }
    return documents;
}

}  // namespace depsev
