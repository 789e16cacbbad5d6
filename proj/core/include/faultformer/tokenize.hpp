#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "faultformer/optim.hpp"
#include "faultformer/tensor.hpp"

namespace ff {

enum class TokenizerId { constant, cnn, fourier };

std::string tokenizer_name(TokenizerId id);
TokenizerId tokenizer_from_name(const std::string& name);

struct TokenSequence {
    std::vector<double> tokens;  // n_tokens x token_dim, row-major
    std::size_t n_tokens = 0;
    std::size_t token_dim = 0;
    TokenizerId tokenizer_id = TokenizerId::constant;
    std::size_t source_length = 0;

    double at(std::size_t t, std::size_t c) const { return tokens[t * token_dim + c]; }
};

// Row-major reshape of a length-L signal into L/d tokens of width d.
TokenSequence tokenize_constant(const std::vector<double>& x, std::size_t d);

struct FourierTokenConfig {
    std::size_t n_modes = 40;
    bool normalize_freq = true;  // store bin / (L/2) instead of the raw bin
};

// FFT the signal, rank the non-redundant bins k in [0, L/2] by magnitude,
// and emit the top modes as (Re, Im, frequency) tokens in descending
// magnitude order (ties to the lower bin). Spectrum values are scaled by
// 1/L so a unit sinusoid contributes amplitude 1/2.
TokenSequence tokenize_fourier(const std::vector<double>& x, const FourierTokenConfig& cfg = {});

// Trainable two-conv tokenizer: conv(k=4,s=2,1->4), GELU, conv(k=4,s=2,
// 4->8), left-padded so lengths are exactly L/2 then L/4 for even L.
struct CnnTokenizer {
    Tensor w1, b1, w2, b2;

    static CnnTokenizer init(Rng& rng);
    ParamList params(const std::string& prefix = "cnn_tokenizer") const;

    // Differentiable path; returns an {L/4, 8} token matrix on the graph.
    Tensor forward(const std::vector<double>& x) const;
};

// Detached convenience wrapper over CnnTokenizer::forward.
TokenSequence tokenize_cnn(const std::vector<double>& x, const CnnTokenizer& tok);

}  // namespace ff
