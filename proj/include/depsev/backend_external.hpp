#pragma once

#include <memory>
#include <string>

#include "depsev/backend.hpp"

namespace depsev {

/// Adapter for full-scale encoders served out of process. The server
/// exposes GET /info -> {"name","dim"}, POST /tokenize {"text"} ->
/// {"tokens"} and POST /encode {"tokens"} -> {"features"}. The adapter is
/// frozen: only the classifier head on top of it trains.
class ExternalHttpBackend : public EncoderBackend {
public:
    explicit ExternalHttpBackend(const std::string& base_url);
    ~ExternalHttpBackend() override;

    std::string name() const override;
    TokenSequence tokenize(const std::string& text) const override;
    int feature_dim() const override;
    std::vector<double> pooled_representation(const TokenSequence& seq,
                                              std::unique_ptr<EncodeCache>* cache) override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace depsev
