#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace depsev {

/// Declarative run configuration: a flat map of dotted keys
/// (e.g. "trainer.learning_rate") to JSON values. Files may nest objects;
/// nesting flattens to dotted keys. CLI overrides win over file values.
class Config {
public:
    Config() = default;

    static Config from_file(const std::filesystem::path& path);

    /// `key=value` with value parsed as JSON when possible, else kept as a
    /// string.
    void set_override(const std::string& assignment);
    void set(const std::string& key, nlohmann::json value);

    bool has(const std::string& key) const;

    double get_double(const std::string& key, double fallback) const;
    int get_int(const std::string& key, int fallback) const;
    std::uint64_t get_uint64(const std::string& key, std::uint64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    std::vector<double> get_double_list(const std::string& key) const;

    const std::map<std::string, nlohmann::json>& entries() const { return entries_; }

    /// Flat JSON object of all keys, for run manifests.
    nlohmann::json to_json() const;

private:
    const nlohmann::json* find(const std::string& key) const;

    std::map<std::string, nlohmann::json> entries_;
};

}  // namespace depsev
