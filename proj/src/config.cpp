#include "depsev/config.hpp"

#include <stdexcept>

#include "depsev/util.hpp"

namespace depsev {

using nlohmann::json;

namespace {

void flatten_into(const std::string& prefix, const json& value,
                  std::map<std::string, json>& out) {
    if (value.is_object()) {
        for (const auto& [key, child] : value.items()) {
            flatten_into(prefix.empty() ? key : prefix + "." + key, child, out);
        }
    } else {
        out[prefix] = value;
    }
}

}  // namespace

Config Config::from_file(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw std::runtime_error(path.string() + ": invalid JSON config: " + e.what());
    }
    if (!j.is_object()) {
        throw std::runtime_error(path.string() + ": config must be a JSON object");
    }
    Config config;
    flatten_into("", j, config.entries_);
    return config;
}

void Config::set_override(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw std::invalid_argument("config override must look like key=value, got \"" +
                                    assignment + "\"");
    }
    const std::string key = trim(assignment.substr(0, eq));
    const std::string raw = assignment.substr(eq + 1);
    json value = json::parse(raw, nullptr, false);
    if (value.is_discarded()) value = raw;  // keep as plain string
    set(key, std::move(value));
}

void Config::set(const std::string& key, json value) {
    entries_[key] = std::move(value);
}

bool Config::has(const std::string& key) const {
    return entries_.find(key) != entries_.end();
}

const json* Config::find(const std::string& key) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? nullptr : &it->second;
}

double Config::get_double(const std::string& key, double fallback) const {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_number()) throw std::runtime_error("config key \"" + key + "\" must be a number");
    return v->get<double>();
}

int Config::get_int(const std::string& key, int fallback) const {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_number_integer()) {
        throw std::runtime_error("config key \"" + key + "\" must be an integer");
    }
    return v->get<int>();
}

std::uint64_t Config::get_uint64(const std::string& key, std::uint64_t fallback) const {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_number_integer() || (v->is_number_integer() && v->get<long long>() < 0)) {
        throw std::runtime_error("config key \"" + key + "\" must be a nonnegative integer");
    }
    return v->get<std::uint64_t>();
}

bool Config::get_bool(const std::string& key, bool fallback) const {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_boolean()) throw std::runtime_error("config key \"" + key + "\" must be a boolean");
    return v->get<bool>();
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_string()) throw std::runtime_error("config key \"" + key + "\" must be a string");
    return v->get<std::string>();
}

std::vector<double> Config::get_double_list(const std::string& key) const {
    const json* v = find(key);
    if (!v) return {};
    if (!v->is_array()) throw std::runtime_error("config key \"" + key + "\" must be an array");
    std::vector<double> out;
    for (const auto& item : *v) {
        if (!item.is_number()) {
            throw std::runtime_error("config key \"" + key + "\" must contain only numbers");
        }
        out.push_back(item.get<double>());
    }
    return out;
}

json Config::to_json() const {
    json j = json::object();
    for (const auto& [key, value] : entries_) j[key] = value;
    return j;
}

}  // namespace depsev
