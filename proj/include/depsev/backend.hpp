#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "depsev/truncation.hpp"

namespace depsev {

/// Opaque per-sequence forward state kept for a following backward pass.
struct EncodeCache {
    virtual ~EncodeCache() = default;
};

/// Pluggable text encoder. Tokenization is deterministic; the pooled
/// representation is the sequence-start token's final features. Trainable
/// backends expose a flat parameter/gradient view that an optimizer can
/// drive; frozen backends return empty spans.
class EncoderBackend {
public:
    virtual ~EncoderBackend() = default;

    virtual std::string name() const = 0;
    virtual TokenSequence tokenize(const std::string& text) const = 0;
    virtual int feature_dim() const = 0;

    /// Pooled representation of an (already truncated) sequence. When
    /// `cache` is non-null the call stores forward state for backward().
    virtual std::vector<double> pooled_representation(const TokenSequence& seq,
                                                      std::unique_ptr<EncodeCache>* cache) = 0;

    std::vector<double> pooled_representation(const TokenSequence& seq) {
        return pooled_representation(seq, nullptr);
    }

    /// Accumulates parameter gradients for one sequence given the upstream
    /// gradient on the pooled features. No-op for frozen backends.
    virtual void backward(const TokenSequence& seq, const EncodeCache& cache,
                          std::span<const double> d_features) {
        (void)seq;
        (void)cache;
        (void)d_features;
    }

    virtual std::span<double> parameters() { return {}; }
    virtual std::span<double> gradients() { return {}; }
    /// One flag per parameter: whether weight decay applies (biases opt out).
    virtual std::span<const std::uint8_t> decay_mask() const { return {}; }
    virtual void zero_gradients() {}
    virtual void reset_parameters(std::uint64_t seed) { (void)seed; }

    bool trainable() { return !parameters().empty(); }
};

/// Lowercases, splits on non-alphanumeric runs and hashes each word into
/// [1, vocab); id 0 is reserved for the sequence-start marker.
TokenSequence hashed_word_tokens(const std::string& text, int vocab);

/// Frozen encoder: mean of per-token pseudo-random embedding rows, i.e. a
/// fixed random projection of the token count vector. Only the classifier
/// head on top of it trains.
class ToyLinearBackend : public EncoderBackend {
public:
    explicit ToyLinearBackend(std::uint64_t seed = 7, int dim = 64, int vocab = 1 << 15);

    std::string name() const override { return "toy-linear"; }
    TokenSequence tokenize(const std::string& text) const override;
    int feature_dim() const override { return dim_; }
    std::vector<double> pooled_representation(const TokenSequence& seq,
                                              std::unique_ptr<EncodeCache>* cache) override;

private:
    std::uint64_t seed_;
    int dim_;
    int vocab_;
};

/// Small trainable transformer encoder: hashed token embeddings plus
/// sinusoidal positions, one single-head self-attention block with a
/// residual feed-forward layer, pooled at the prepended start token.
class ToyTransformerBackend : public EncoderBackend {
public:
    explicit ToyTransformerBackend(std::uint64_t seed = 7, int dim = 24, int vocab = 512);

    std::string name() const override { return "toy-transformer"; }
    TokenSequence tokenize(const std::string& text) const override;
    int feature_dim() const override { return dim_; }
    std::vector<double> pooled_representation(const TokenSequence& seq,
                                              std::unique_ptr<EncodeCache>* cache) override;
    void backward(const TokenSequence& seq, const EncodeCache& cache,
                  std::span<const double> d_features) override;

    std::span<double> parameters() override { return params_; }
    std::span<double> gradients() override { return grads_; }
    std::span<const std::uint8_t> decay_mask() const override { return decay_mask_; }
    void zero_gradients() override;
    void reset_parameters(std::uint64_t seed) override;

    std::size_t parameter_count() const { return params_.size(); }

private:
    // Flat parameter layout: [E | Wq | Wk | Wv | Wo | W1 | b1 | W2 | b2].
    struct Layout {
        std::size_t e, wq, wk, wv, wo, w1, b1, w2, b2, total;
    };
    Layout layout() const;

    int dim_;
    int vocab_;
    int hidden_;
    std::uint64_t seed_;
    std::vector<double> params_;
    std::vector<double> grads_;
    std::vector<std::uint8_t> decay_mask_;
};

struct BackendOptions {
    std::string name = "toy-linear";
    std::uint64_t seed = 7;
    int dim = 0;        // 0 = backend default
    int vocab = 0;      // 0 = backend default
    std::string url;    // external backend only
};

std::unique_ptr<EncoderBackend> make_backend(const BackendOptions& options);

}  // namespace depsev
