#include "depsev/backend_external.hpp"

#include <stdexcept>

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace depsev {

using nlohmann::json;

struct ExternalHttpBackend::Impl {
    std::string base_url;
    mutable httplib::Client client;
    std::string model_name;
    int dim = 0;

    explicit Impl(const std::string& url) : base_url(url), client(url) {
        client.set_connection_timeout(10);
        client.set_read_timeout(120);
    }

    json request(const char* method, const std::string& path, const json* body) const {
        httplib::Result res = [&] {
            if (body) return client.Post(path, body->dump(), "application/json");
            return std::string(method) == "GET" ? client.Get(path)
                                                : client.Post(path, "", "application/json");
        }();
        if (!res) {
            throw std::runtime_error("external backend: cannot reach " + base_url + path + " (" +
                                     httplib::to_string(res.error()) + ")");
        }
        if (res->status != 200) {
            throw std::runtime_error("external backend: " + base_url + path + " returned status " +
                                     std::to_string(res->status));
        }
        try {
            return json::parse(res->body);
        } catch (const json::exception& e) {
            throw std::runtime_error("external backend: invalid JSON from " + path + ": " + e.what());
        }
    }

    void fetch_info() {
        const json info = request("GET", "/info", nullptr);
        model_name = info.at("name").get<std::string>();
        dim = info.at("dim").get<int>();
        if (dim < 1) throw std::runtime_error("external backend: /info reported dim < 1");
    }
};

ExternalHttpBackend::ExternalHttpBackend(const std::string& base_url)
    : impl_(std::make_unique<Impl>(base_url)) {
    impl_->fetch_info();
}

ExternalHttpBackend::~ExternalHttpBackend() = default;

std::string ExternalHttpBackend::name() const {
    return "external:" + impl_->model_name;
}

TokenSequence ExternalHttpBackend::tokenize(const std::string& text) const {
    json body;
    body["text"] = text;
    const json reply = impl_->request("POST", "/tokenize", &body);
    return reply.at("tokens").get<TokenSequence>();
}

int ExternalHttpBackend::feature_dim() const {
    return impl_->dim;
}

std::vector<double> ExternalHttpBackend::pooled_representation(
    const TokenSequence& seq, std::unique_ptr<EncodeCache>* cache) {
    if (cache) cache->reset();
    json body;
    body["tokens"] = seq;
    const json reply = impl_->request("POST", "/encode", &body);
    auto features = reply.at("features").get<std::vector<double>>();
    if (features.size() != static_cast<std::size_t>(impl_->dim)) {
        throw std::runtime_error("external backend: /encode returned " +
                                 std::to_string(features.size()) + " features, expected " +
                                 std::to_string(impl_->dim));
    }
    return features;
}

}  // namespace depsev
