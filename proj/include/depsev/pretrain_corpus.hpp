#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace depsev {

enum class CommunityCategory { mental_health, control };

std::string community_category_name(CommunityCategory c);
CommunityCategory parse_community_category(std::string_view s);

struct CommunitySpec {
    std::string name;
    std::uint64_t follower_count = 0;
    CommunityCategory category = CommunityCategory::control;
};

/// One curated document. author_token is a keyed pseudonym, never the raw
/// username.
struct CorpusDocument {
    std::string doc_id;
    std::string community;
    std::string text;
    std::string author_token;
    std::string kind;  // "submission" or "comment"
};

enum class TopWindow { all_time, year };

struct RawPost {
    std::string id;
    std::string author;
    std::string text;
    std::string kind;
};

/// Raised on client failures; carries the community so callers can retry.
struct ClientError : std::runtime_error {
    std::string community;
    ClientError(const std::string& community_name, const std::string& message)
        : std::runtime_error(message), community(community_name) {}
};

/// Source of ranked posts for a community. Implementations own paging,
/// rate limits and credentials.
class CommunityClient {
public:
    virtual ~CommunityClient() = default;
    /// Up to `limit` posts in the client's "top" order for the window.
    virtual std::vector<RawPost> top_posts(const std::string& community, std::size_t limit,
                                           TopWindow window) = 0;
};

/// Serves canned posts from <dir>/<community>.json files.
class FixtureClient : public CommunityClient {
public:
    explicit FixtureClient(std::filesystem::path dir) : dir_(std::move(dir)) {}

    std::vector<RawPost> top_posts(const std::string& community, std::size_t limit,
                                   TopWindow window) override;

    int call_count() const { return call_count_; }

private:
    std::filesystem::path dir_;
    int call_count_ = 0;
};

/// Sampling quota: floor of 2% of the community's follower count.
std::uint64_t sample_quota(const CommunitySpec& community);

/// Stable keyed pseudonym for a username; identical within a key, not
/// reversible without it.
std::string pseudonymize(std::string_view author, std::uint64_t key);

/// Fetches at most `quota` top-ranked posts and pseudonymizes authors
/// before anything can be persisted. Quota 0 skips the client entirely.
/// A short page is accepted with a warning on stderr.
std::vector<CorpusDocument> fetch_top(const CommunitySpec& community, std::size_t quota,
                                      CommunityClient& client, std::uint64_t anonymize_key,
                                      TopWindow window = TopWindow::all_time);

/// Exact dedup over normalized text, first occurrence wins; idempotent.
std::pair<std::vector<CorpusDocument>, std::size_t> dedup_corpus(
    const std::vector<CorpusDocument>& documents);

struct PartitionReport {
    std::size_t mental_health_count = 0;
    std::size_t control_count = 0;
    std::size_t bytes = 0;

    PartitionReport() = default;
    PartitionReport(std::size_t mh, std::size_t ctrl, std::size_t b)
        : mental_health_count(mh), control_count(ctrl), bytes(b) {}
    bool operator==(const PartitionReport&) const = default;
};

/// Per-category document counts and total UTF-8 text bytes. Category is
/// resolved through the supplied community list.
PartitionReport partition_report(std::span<const CorpusDocument> documents,
                                 std::span<const CommunitySpec> communities);

/// `name,follower_count,category` delimiter-separated file.
std::vector<CommunitySpec> load_communities(const std::filesystem::path& path);

void save_corpus_jsonl(std::span<const CorpusDocument> documents,
                       const std::filesystem::path& path);
std::vector<CorpusDocument> load_corpus_jsonl(const std::filesystem::path& path);

}  // namespace depsev
