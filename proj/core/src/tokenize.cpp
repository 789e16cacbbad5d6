#include "faultformer/tokenize.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "faultformer/fft.hpp"
#include "faultformer/init.hpp"

namespace ff {

std::string tokenizer_name(TokenizerId id) {
    switch (id) {
        case TokenizerId::constant: return "constant";
        case TokenizerId::cnn: return "cnn";
        case TokenizerId::fourier: return "fourier";
    }
    throw std::logic_error("tokenizer_name: bad id");
}

TokenizerId tokenizer_from_name(const std::string& name) {
    if (name == "constant") return TokenizerId::constant;
    if (name == "cnn") return TokenizerId::cnn;
    if (name == "fourier") return TokenizerId::fourier;
    throw std::invalid_argument("unknown tokenizer '" + name + "'");
}

TokenSequence tokenize_constant(const std::vector<double>& x, std::size_t d) {
    if (d == 0 || x.size() % d != 0)
        throw std::invalid_argument("tokenize_constant: d=" + std::to_string(d) +
                                    " does not divide signal length " +
                                    std::to_string(x.size()));
    TokenSequence ts;
    ts.tokens = x;
    ts.n_tokens = x.size() / d;
    ts.token_dim = d;
    ts.tokenizer_id = TokenizerId::constant;
    ts.source_length = x.size();
    return ts;
}

TokenSequence tokenize_fourier(const std::vector<double>& x, const FourierTokenConfig& cfg) {
    const std::size_t L = x.size();
    if (L < 2 * cfg.n_modes)
        throw std::invalid_argument("tokenize_fourier: length " + std::to_string(L) +
                                    " has fewer than " + std::to_string(cfg.n_modes) +
                                    " non-redundant bins");
    const auto X = fft(x);
    // Real input: bins [0, L/2] carry the whole spectrum.
    const std::size_t half = L / 2;
    std::vector<std::size_t> bins(half + 1);
    for (std::size_t k = 0; k <= half; ++k) bins[k] = k;
    std::stable_sort(bins.begin(), bins.end(), [&](std::size_t a, std::size_t b) {
        const double ma = std::abs(X[a]), mb = std::abs(X[b]);
        if (ma != mb) return ma > mb;
        return a < b;
    });
    TokenSequence ts;
    ts.n_tokens = cfg.n_modes;
    ts.token_dim = 3;
    ts.tokenizer_id = TokenizerId::fourier;
    ts.source_length = L;
    ts.tokens.resize(cfg.n_modes * 3);
    const double scale = 1.0 / static_cast<double>(L);
    const double fnorm = cfg.normalize_freq ? 1.0 / static_cast<double>(half) : 1.0;
    for (std::size_t i = 0; i < cfg.n_modes; ++i) {
        const std::size_t k = bins[i];
        ts.tokens[i * 3 + 0] = X[k].real() * scale;
        ts.tokens[i * 3 + 1] = X[k].imag() * scale;
        ts.tokens[i * 3 + 2] = static_cast<double>(k) * fnorm;
    }
    return ts;
}

CnnTokenizer CnnTokenizer::init(Rng& rng) {
    CnnTokenizer t;
    t.w1 = xavier_uniform({4, 1, 4}, 1 * 4, 4 * 4, rng);
    t.b1 = Tensor::zeros({4}, true);
    t.w2 = xavier_uniform({8, 4, 4}, 4 * 4, 8 * 4, rng);
    t.b2 = Tensor::zeros({8}, true);
    return t;
}

ParamList CnnTokenizer::params(const std::string& prefix) const {
    return {{prefix + ".w1", w1},
            {prefix + ".b1", b1},
            {prefix + ".w2", w2},
            {prefix + ".b2", b2}};
}

Tensor CnnTokenizer::forward(const std::vector<double>& x) const {
    if (x.size() < 16)
        throw std::invalid_argument("cnn tokenizer: signal length " + std::to_string(x.size()) +
                                    " too short");
    Tensor in = Tensor::from({1, x.size()}, x);
    // left_pad = kernel - stride keeps output length at ceil(L/stride).
    Tensor h = conv1d(in, w1, b1, 2, 2);
    h = gelu(h);
    h = conv1d(h, w2, b2, 2, 2);
    return transpose(h);  // {L/4, 8}
}

TokenSequence tokenize_cnn(const std::vector<double>& x, const CnnTokenizer& tok) {
    Tensor out = tok.forward(x);
    TokenSequence ts;
    ts.tokens = out.data();
    ts.n_tokens = out.rows();
    ts.token_dim = out.cols();
    ts.tokenizer_id = TokenizerId::cnn;
    ts.source_length = x.size();
    return ts;
}

}  // namespace ff
