#include "depsev/backend.hpp"

#include <cmath>
#include <stdexcept>

#include "depsev/backend_external.hpp"
#include "depsev/util.hpp"

namespace depsev {

TokenSequence hashed_word_tokens(const std::string& text, int vocab) {
    if (vocab < 2) throw std::invalid_argument("hashed_word_tokens: vocab must be >= 2");
    TokenSequence tokens;
    std::string word;
    auto flush = [&]() {
        if (word.empty()) return;
        const std::uint64_t h = fnv1a64(word);
        tokens.push_back(1 + static_cast<int>(h % static_cast<std::uint64_t>(vocab - 1)));
        word.clear();
    };
    for (char c : text) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
        if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '\'') {
            word.push_back(c);
        } else {
            flush();
        }
    }
    flush();
    return tokens;
}

// --- ToyLinearBackend ---

ToyLinearBackend::ToyLinearBackend(std::uint64_t seed, int dim, int vocab)
    : seed_(seed), dim_(dim), vocab_(vocab) {
    if (dim < 1) throw std::invalid_argument("ToyLinearBackend: dim must be >= 1");
}

TokenSequence ToyLinearBackend::tokenize(const std::string& text) const {
    return hashed_word_tokens(text, vocab_);
}

std::vector<double> ToyLinearBackend::pooled_representation(const TokenSequence& seq,
                                                            std::unique_ptr<EncodeCache>* cache) {
    if (cache) cache->reset();
    std::vector<double> features(static_cast<std::size_t>(dim_), 0.0);
    if (seq.empty()) return features;
    for (int t : seq) {
        for (int j = 0; j < dim_; ++j) {
            const std::uint64_t h =
                mix64(mix64(seed_, static_cast<std::uint64_t>(t)), static_cast<std::uint64_t>(j));
            const double u = static_cast<double>(h >> 11) * 0x1.0p-53;  // [0,1)
            features[static_cast<std::size_t>(j)] += 2.0 * u - 1.0;
        }
    }
    for (double& f : features) f /= static_cast<double>(seq.size());
    return features;
}

// --- ToyTransformerBackend ---

namespace {

struct TransformerCache : EncodeCache {
    std::vector<double> x;   // N x m, rows with positions added
    std::vector<double> q0;  // m
    std::vector<double> k;   // N x m
    std::vector<double> v;   // N x m
    std::vector<double> a;   // N
    std::vector<double> h;   // m
    std::vector<double> u;   // m
    std::vector<double> z1;  // hidden
};

double positional(int pos, int a, int m) {
    const double exponent = static_cast<double>(a - (a % 2)) / static_cast<double>(m);
    const double freq = std::exp(-std::log(10000.0) * exponent);
    const double angle = static_cast<double>(pos) * freq;
    return (a % 2 == 0) ? std::sin(angle) : std::cos(angle);
}

}  // namespace

ToyTransformerBackend::ToyTransformerBackend(std::uint64_t seed, int dim, int vocab)
    : dim_(dim), vocab_(vocab), hidden_(2 * dim), seed_(seed) {
    if (dim < 2) throw std::invalid_argument("ToyTransformerBackend: dim must be >= 2");
    const Layout lay = layout();
    params_.assign(lay.total, 0.0);
    grads_.assign(lay.total, 0.0);
    decay_mask_.assign(lay.total, 1);
    for (std::size_t i = lay.b1; i < lay.w2; ++i) decay_mask_[i] = 0;
    for (std::size_t i = lay.b2; i < lay.total; ++i) decay_mask_[i] = 0;
    reset_parameters(seed);
}

ToyTransformerBackend::Layout ToyTransformerBackend::layout() const {
    const std::size_t m = static_cast<std::size_t>(dim_);
    const std::size_t v = static_cast<std::size_t>(vocab_);
    const std::size_t h = static_cast<std::size_t>(hidden_);
    Layout lay{};
    lay.e = 0;
    lay.wq = lay.e + v * m;
    lay.wk = lay.wq + m * m;
    lay.wv = lay.wk + m * m;
    lay.wo = lay.wv + m * m;
    lay.w1 = lay.wo + m * m;
    lay.b1 = lay.w1 + m * h;
    lay.w2 = lay.b1 + h;
    lay.b2 = lay.w2 + h * m;
    lay.total = lay.b2 + m;
    return lay;
}

void ToyTransformerBackend::reset_parameters(std::uint64_t seed) {
    seed_ = seed;
    const Layout lay = layout();
    Rng rng(mix64(seed, 0x7f4a7c15ULL));
    const double m = static_cast<double>(dim_);
    auto fill = [&](std::size_t begin, std::size_t end, double stddev) {
        for (std::size_t i = begin; i < end; ++i) params_[i] = stddev * rng.normal();
    };
    fill(lay.e, lay.wq, 0.5);
    const double proj_std = 1.0 / std::sqrt(m);
    fill(lay.wq, lay.wk, proj_std);
    fill(lay.wk, lay.wv, proj_std);
    fill(lay.wv, lay.wo, proj_std);
    fill(lay.wo, lay.w1, proj_std);
    fill(lay.w1, lay.b1, std::sqrt(2.0 / m));
    std::fill(params_.begin() + static_cast<std::ptrdiff_t>(lay.b1),
              params_.begin() + static_cast<std::ptrdiff_t>(lay.w2), 0.0);
    fill(lay.w2, lay.b2, std::sqrt(2.0 / static_cast<double>(hidden_)));
    std::fill(params_.begin() + static_cast<std::ptrdiff_t>(lay.b2), params_.end(), 0.0);
    zero_gradients();
}

TokenSequence ToyTransformerBackend::tokenize(const std::string& text) const {
    return hashed_word_tokens(text, vocab_);
}

void ToyTransformerBackend::zero_gradients() {
    std::fill(grads_.begin(), grads_.end(), 0.0);
}

std::vector<double> ToyTransformerBackend::pooled_representation(
    const TokenSequence& seq, std::unique_ptr<EncodeCache>* cache) {
    const Layout lay = layout();
    const int m = dim_;
    const std::size_t n = seq.size() + 1;  // start token prepended
    auto token_at = [&](std::size_t i) -> int { return i == 0 ? 0 : seq[i - 1]; };

    auto state = std::make_unique<TransformerCache>();
    TransformerCache& c = *state;
    c.x.assign(n * static_cast<std::size_t>(m), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const int t = token_at(i);
        if (t < 0 || t >= vocab_) {
            throw std::invalid_argument("toy-transformer: token id out of range: " +
                                        std::to_string(t));
        }
        for (int a = 0; a < m; ++a) {
            c.x[i * static_cast<std::size_t>(m) + static_cast<std::size_t>(a)] =
                params_[lay.e + static_cast<std::size_t>(t) * static_cast<std::size_t>(m) +
                        static_cast<std::size_t>(a)] +
                positional(static_cast<int>(i), a, m);
        }
    }

    auto matvec = [&](std::size_t w_base, const double* row, double* out_vec) {
        for (int b = 0; b < m; ++b) {
            double acc = 0.0;
            for (int a = 0; a < m; ++a) {
                acc += row[a] * params_[w_base + static_cast<std::size_t>(a) * static_cast<std::size_t>(m) +
                                        static_cast<std::size_t>(b)];
            }
            out_vec[b] = acc;
        }
    };

    c.q0.assign(static_cast<std::size_t>(m), 0.0);
    matvec(lay.wq, c.x.data(), c.q0.data());
    c.k.assign(n * static_cast<std::size_t>(m), 0.0);
    c.v.assign(n * static_cast<std::size_t>(m), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        matvec(lay.wk, c.x.data() + j * static_cast<std::size_t>(m),
               c.k.data() + j * static_cast<std::size_t>(m));
        matvec(lay.wv, c.x.data() + j * static_cast<std::size_t>(m),
               c.v.data() + j * static_cast<std::size_t>(m));
    }

    const double scale = 1.0 / std::sqrt(static_cast<double>(m));
    std::vector<double> scores(n, 0.0);
    double max_score = -1e300;
    for (std::size_t j = 0; j < n; ++j) {
        double acc = 0.0;
        for (int b = 0; b < m; ++b) {
            acc += c.q0[static_cast<std::size_t>(b)] *
                   c.k[j * static_cast<std::size_t>(m) + static_cast<std::size_t>(b)];
        }
        scores[j] = acc * scale;
        max_score = std::max(max_score, scores[j]);
    }
    c.a.assign(n, 0.0);
    double sum_exp = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        c.a[j] = std::exp(scores[j] - max_score);
        sum_exp += c.a[j];
    }
    for (std::size_t j = 0; j < n; ++j) c.a[j] /= sum_exp;

    c.h.assign(static_cast<std::size_t>(m), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        for (int b = 0; b < m; ++b) {
            c.h[static_cast<std::size_t>(b)] +=
                c.a[j] * c.v[j * static_cast<std::size_t>(m) + static_cast<std::size_t>(b)];
        }
    }

    c.u.assign(static_cast<std::size_t>(m), 0.0);
    for (int cc = 0; cc < m; ++cc) {
        double acc = 0.0;
        for (int b = 0; b < m; ++b) {
            acc += c.h[static_cast<std::size_t>(b)] *
                   params_[lay.wo + static_cast<std::size_t>(b) * static_cast<std::size_t>(m) +
                           static_cast<std::size_t>(cc)];
        }
        c.u[static_cast<std::size_t>(cc)] = c.x[static_cast<std::size_t>(cc)] + acc;
    }

    c.z1.assign(static_cast<std::size_t>(hidden_), 0.0);
    for (int p = 0; p < hidden_; ++p) {
        double acc = params_[lay.b1 + static_cast<std::size_t>(p)];
        for (int cc = 0; cc < m; ++cc) {
            acc += c.u[static_cast<std::size_t>(cc)] *
                   params_[lay.w1 + static_cast<std::size_t>(cc) * static_cast<std::size_t>(hidden_) +
                           static_cast<std::size_t>(p)];
        }
        c.z1[static_cast<std::size_t>(p)] = acc;
    }

    std::vector<double> features(static_cast<std::size_t>(m), 0.0);
    for (int cc = 0; cc < m; ++cc) {
        double acc = c.u[static_cast<std::size_t>(cc)] + params_[lay.b2 + static_cast<std::size_t>(cc)];
        for (int p = 0; p < hidden_; ++p) {
            const double r = std::max(0.0, c.z1[static_cast<std::size_t>(p)]);
            acc += r * params_[lay.w2 + static_cast<std::size_t>(p) * static_cast<std::size_t>(m) +
                               static_cast<std::size_t>(cc)];
        }
        features[static_cast<std::size_t>(cc)] = acc;
    }

    if (cache) *cache = std::move(state);
    return features;
}

void ToyTransformerBackend::backward(const TokenSequence& seq, const EncodeCache& cache,
                                     std::span<const double> d_features) {
    const auto& c = dynamic_cast<const TransformerCache&>(cache);
    const Layout lay = layout();
    const int m = dim_;
    const std::size_t n = seq.size() + 1;
    auto token_at = [&](std::size_t i) -> int { return i == 0 ? 0 : seq[i - 1]; };
    if (d_features.size() != static_cast<std::size_t>(m)) {
        throw std::invalid_argument("toy-transformer backward: feature gradient size mismatch");
    }

    // FFN with residual: f = u + W2^T relu(z1) + b2.
    std::vector<double> dz1(static_cast<std::size_t>(hidden_), 0.0);
    for (int p = 0; p < hidden_; ++p) {
        if (c.z1[static_cast<std::size_t>(p)] <= 0.0) continue;
        double acc = 0.0;
        for (int cc = 0; cc < m; ++cc) {
            acc += params_[lay.w2 + static_cast<std::size_t>(p) * static_cast<std::size_t>(m) +
                           static_cast<std::size_t>(cc)] *
                   d_features[static_cast<std::size_t>(cc)];
        }
        dz1[static_cast<std::size_t>(p)] = acc;
    }
    for (int cc = 0; cc < m; ++cc) {
        grads_[lay.b2 + static_cast<std::size_t>(cc)] += d_features[static_cast<std::size_t>(cc)];
        for (int p = 0; p < hidden_; ++p) {
            const double r = std::max(0.0, c.z1[static_cast<std::size_t>(p)]);
            grads_[lay.w2 + static_cast<std::size_t>(p) * static_cast<std::size_t>(m) +
                   static_cast<std::size_t>(cc)] += r * d_features[static_cast<std::size_t>(cc)];
        }
    }
    std::vector<double> du(d_features.begin(), d_features.end());
    for (int cc = 0; cc < m; ++cc) {
        double acc = 0.0;
        for (int p = 0; p < hidden_; ++p) {
            acc += params_[lay.w1 + static_cast<std::size_t>(cc) * static_cast<std::size_t>(hidden_) +
                           static_cast<std::size_t>(p)] *
                   dz1[static_cast<std::size_t>(p)];
        }
        du[static_cast<std::size_t>(cc)] += acc;
    }
    for (int p = 0; p < hidden_; ++p) {
        grads_[lay.b1 + static_cast<std::size_t>(p)] += dz1[static_cast<std::size_t>(p)];
        for (int cc = 0; cc < m; ++cc) {
            grads_[lay.w1 + static_cast<std::size_t>(cc) * static_cast<std::size_t>(hidden_) +
                   static_cast<std::size_t>(p)] +=
                c.u[static_cast<std::size_t>(cc)] * dz1[static_cast<std::size_t>(p)];
        }
    }

    // Residual attention output: u = x_0 + Wo^T h.
    std::vector<double> dx(n * static_cast<std::size_t>(m), 0.0);
    for (int a = 0; a < m; ++a) dx[static_cast<std::size_t>(a)] += du[static_cast<std::size_t>(a)];
    std::vector<double> dh(static_cast<std::size_t>(m), 0.0);
    for (int b = 0; b < m; ++b) {
        double acc = 0.0;
        for (int cc = 0; cc < m; ++cc) {
            acc += params_[lay.wo + static_cast<std::size_t>(b) * static_cast<std::size_t>(m) +
                           static_cast<std::size_t>(cc)] *
                   du[static_cast<std::size_t>(cc)];
            grads_[lay.wo + static_cast<std::size_t>(b) * static_cast<std::size_t>(m) +
                   static_cast<std::size_t>(cc)] +=
                c.h[static_cast<std::size_t>(b)] * du[static_cast<std::size_t>(cc)];
        }
        dh[static_cast<std::size_t>(b)] = acc;
    }

    // h = sum_j a_j v_j.
    std::vector<double> da(n, 0.0);
    std::vector<double> dv(n * static_cast<std::size_t>(m), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        double acc = 0.0;
        for (int b = 0; b < m; ++b) {
            acc += dh[static_cast<std::size_t>(b)] *
                   c.v[j * static_cast<std::size_t>(m) + static_cast<std::size_t>(b)];
            dv[j * static_cast<std::size_t>(m) + static_cast<std::size_t>(b)] =
                c.a[j] * dh[static_cast<std::size_t>(b)];
        }
        da[j] = acc;
    }

    // Softmax backward.
    double dot = 0.0;
    for (std::size_t j = 0; j < n; ++j) dot += c.a[j] * da[j];
    std::vector<double> ds(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) ds[j] = c.a[j] * (da[j] - dot);

    // Scores s_j = q0 . k_j / sqrt(m).
    const double scale = 1.0 / std::sqrt(static_cast<double>(m));
    std::vector<double> dq0(static_cast<std::size_t>(m), 0.0);
    std::vector<double> dk(n * static_cast<std::size_t>(m), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        for (int b = 0; b < m; ++b) {
            dq0[static_cast<std::size_t>(b)] +=
                ds[j] * c.k[j * static_cast<std::size_t>(m) + static_cast<std::size_t>(b)] * scale;
            dk[j * static_cast<std::size_t>(m) + static_cast<std::size_t>(b)] =
                ds[j] * c.q0[static_cast<std::size_t>(b)] * scale;
        }
    }

    // Projections q0 = Wq^T x_0, k_j = Wk^T x_j, v_j = Wv^T x_j.
    auto backprop_proj = [&](std::size_t w_base, const double* row_x, const double* d_out,
                             double* d_row_x) {
        for (int a = 0; a < m; ++a) {
            double acc = 0.0;
            for (int b = 0; b < m; ++b) {
                const std::size_t idx = w_base + static_cast<std::size_t>(a) * static_cast<std::size_t>(m) +
                                        static_cast<std::size_t>(b);
                acc += params_[idx] * d_out[b];
                grads_[idx] += row_x[a] * d_out[b];
            }
            d_row_x[a] += acc;
        }
    };
    backprop_proj(lay.wq, c.x.data(), dq0.data(), dx.data());
    for (std::size_t j = 0; j < n; ++j) {
        backprop_proj(lay.wk, c.x.data() + j * static_cast<std::size_t>(m),
                      dk.data() + j * static_cast<std::size_t>(m),
                      dx.data() + j * static_cast<std::size_t>(m));
        backprop_proj(lay.wv, c.x.data() + j * static_cast<std::size_t>(m),
                      dv.data() + j * static_cast<std::size_t>(m),
                      dx.data() + j * static_cast<std::size_t>(m));
    }

    // Embedding rows (positional terms are constants).
    for (std::size_t i = 0; i < n; ++i) {
        const int t = token_at(i);
        for (int a = 0; a < m; ++a) {
            grads_[lay.e + static_cast<std::size_t>(t) * static_cast<std::size_t>(m) +
                   static_cast<std::size_t>(a)] +=
                dx[i * static_cast<std::size_t>(m) + static_cast<std::size_t>(a)];
        }
    }
}

std::unique_ptr<EncoderBackend> make_backend(const BackendOptions& options) {
    if (options.name == "toy-linear") {
        return std::make_unique<ToyLinearBackend>(options.seed, options.dim ? options.dim : 64,
                                                  options.vocab ? options.vocab : (1 << 15));
    }
    if (options.name == "toy-transformer") {
        return std::make_unique<ToyTransformerBackend>(options.seed, options.dim ? options.dim : 24,
                                                       options.vocab ? options.vocab : 512);
    }
    if (options.name == "external") {
        if (options.url.empty()) {
            throw std::invalid_argument("external backend requires backend.url");
        }
        return std::make_unique<ExternalHttpBackend>(options.url);
    }
    throw std::invalid_argument("unknown backend \"" + options.name +
                                "\"; expected toy-linear, toy-transformer or external");
}

}  // namespace depsev
