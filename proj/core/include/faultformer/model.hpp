#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "faultformer/optim.hpp"
#include "faultformer/tensor.hpp"
#include "faultformer/tokenize.hpp"

namespace ff {

enum class FfVariant { plain, glu };

struct EncoderConfig {
    std::size_t model_dim = 256;
    std::size_t n_heads = 32;
    std::size_t n_layers = 4;
    double dropout = 0.3;
    std::size_t ff_hidden_dim = 0;  // 0 means 4 * model_dim
    FfVariant ff_variant = FfVariant::plain;
    std::size_t input_dim = 3;
    std::size_t n_classes = 10;
    bool mlp_embedder = false;
    double layer_norm_eps = 1e-5;

    void validate() const;
    std::size_t head_dim() const { return model_dim / n_heads; }
    std::size_t ff_hidden() const { return ff_hidden_dim ? ff_hidden_dim : 4 * model_dim; }

    std::string to_json() const;
    static EncoderConfig from_json(const std::string& s);
};

struct EncoderLayerParams {
    Tensor wq, wk, wv, wo, bo;
    Tensor ff_w1, ff_b1, ff_w2, ff_b2, ff_w3;  // ff_w3 only for the GLU variant
    Tensor ln1_gamma, ln1_beta, ln2_gamma, ln2_beta;
};

struct EncoderState {
    EncoderConfig cfg;
    Tensor embed_w1, embed_b1;  // input_dim -> model_dim
    Tensor embed_w2, embed_b2;  // second stage when mlp_embedder is set
    Tensor class_token;         // {1, model_dim}
    std::vector<EncoderLayerParams> layers;
    Tensor cls_w, cls_b;                            // model_dim -> n_classes
    Tensor recon_w1, recon_b1, recon_w2, recon_b2;  // MLP decoder back to input_dim

    static EncoderState init(const EncoderConfig& cfg, Rng& rng);

    ParamList params() const;
    // Embedder plus encoder layers: the part that transfers from
    // pretraining into fine-tuning.
    ParamList encoder_params() const;
    ParamList head_params() const;
};

enum class EncodeMode { classify, reconstruct };

// Per-layer attention capture: layer -> flat [n_heads, n, n] softmax rows.
struct AttnCapture {
    std::size_t n_heads = 0;
    std::size_t seq_len = 0;
    std::vector<std::vector<double>> layers;
};

// classify: embed, prepend the class token at position 0, run the stack,
// project row 0 to logits {1, n_classes}. reconstruct: embed without the
// class token and decode every position back to input_dim.
Tensor encode(const TokenSequence& tokens, const EncoderState& st, EncodeMode mode, Rng& rng,
              bool training, AttnCapture* capture = nullptr);

// Differentiable variant for graph-producing tokenizers (CNN): tokens is
// an {n, input_dim} tensor already on the tape.
Tensor encode_tensor(const Tensor& tokens, const EncoderState& st, EncodeMode mode, Rng& rng,
                     bool training, AttnCapture* capture = nullptr);

struct AttnScores {
    std::size_t n_heads = 0;
    std::size_t n_tokens = 0;          // includes the class position
    std::vector<double> scores;        // n_heads x n_tokens
};

// Class-token query row against all keys, per head, at one layer.
AttnScores attention_scores(const TokenSequence& tokens, const EncoderState& st,
                            std::size_t layer);

// Benchmark CNN: five conv stages, adaptive pool to 8 positions, then the
// 512/526/n_classes linear stack.
struct CnnBaseline {
    double dropout = 0.3;
    std::size_t n_classes = 10;
    Tensor cw1, cb1, cw2, cb2, cw3, cb3, cw4, cb4, cw5, cb5;
    Tensor fw1, fb1, fw2, fb2, fw3, fb3;

    static CnnBaseline init(std::size_t n_classes, Rng& rng);
    ParamList params() const;
    Tensor forward(const TokenSequence& tokens, Rng& rng, bool training) const;
};

// Benchmark MLP over a pooled 8x256 view of the token sequence.
struct MlpBaseline {
    double dropout = 0.3;
    std::size_t n_classes = 10;
    Tensor w1, b1, w2, b2, w3, b3, w4, b4, w5, b5;

    static MlpBaseline init(std::size_t n_classes, Rng& rng);
    ParamList params() const;
    Tensor forward(const TokenSequence& tokens, Rng& rng, bool training) const;
};

}  // namespace ff
