#include "faultformer/model.hpp"

#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "faultformer/init.hpp"

namespace ff {

using nlohmann::json;

void EncoderConfig::validate() const {
    if (model_dim == 0 || n_heads == 0 || n_layers == 0 || input_dim == 0 || n_classes == 0)
        throw std::invalid_argument("encoder config: zero-sized field");
    if (model_dim % n_heads != 0)
        throw std::invalid_argument("encoder config: model_dim " + std::to_string(model_dim) +
                                    " not divisible by n_heads " + std::to_string(n_heads));
    if (head_dim() % 2 != 0)
        throw std::invalid_argument("encoder config: head_dim " + std::to_string(head_dim()) +
                                    " must be even for rotary embeddings");
    if (dropout < 0.0 || dropout >= 1.0)
        throw std::invalid_argument("encoder config: dropout must be in [0,1)");
}

std::string EncoderConfig::to_json() const {
    json j = {{"model_dim", model_dim},
              {"n_heads", n_heads},
              {"n_layers", n_layers},
              {"dropout", dropout},
              {"ff_hidden_dim", ff_hidden_dim},
              {"ff_variant", ff_variant == FfVariant::glu ? "glu" : "plain"},
              {"input_dim", input_dim},
              {"n_classes", n_classes},
              {"mlp_embedder", mlp_embedder},
              {"layer_norm_eps", layer_norm_eps}};
    return j.dump();
}

EncoderConfig EncoderConfig::from_json(const std::string& s) {
    const json j = json::parse(s);
    EncoderConfig c;
    c.model_dim = j.at("model_dim").get<std::size_t>();
    c.n_heads = j.at("n_heads").get<std::size_t>();
    c.n_layers = j.at("n_layers").get<std::size_t>();
    c.dropout = j.at("dropout").get<double>();
    c.ff_hidden_dim = j.at("ff_hidden_dim").get<std::size_t>();
    c.ff_variant = j.at("ff_variant").get<std::string>() == "glu" ? FfVariant::glu
                                                                  : FfVariant::plain;
    c.input_dim = j.at("input_dim").get<std::size_t>();
    c.n_classes = j.at("n_classes").get<std::size_t>();
    c.mlp_embedder = j.at("mlp_embedder").get<bool>();
    c.layer_norm_eps = j.at("layer_norm_eps").get<double>();
    c.validate();
    return c;
}

namespace {

Tensor ones(std::size_t n) {
    return Tensor::from({n}, std::vector<double>(n, 1.0), true);
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
    return add_rowvec(matmul(x, w), b);
}

}  // namespace

EncoderState EncoderState::init(const EncoderConfig& cfg, Rng& rng) {
    cfg.validate();
    EncoderState st;
    st.cfg = cfg;
    const std::size_t d = cfg.model_dim, in = cfg.input_dim, h = cfg.ff_hidden();
    if (cfg.mlp_embedder) {
        st.embed_w1 = xavier_uniform({in, d}, in, d, rng);
        st.embed_b1 = Tensor::zeros({d}, true);
        st.embed_w2 = xavier_uniform({d, d}, d, d, rng);
        st.embed_b2 = Tensor::zeros({d}, true);
    } else {
        st.embed_w1 = xavier_uniform({in, d}, in, d, rng);
        st.embed_b1 = Tensor::zeros({d}, true);
    }
    st.class_token = normal_init({1, d}, 0.0, 0.02, rng);
    for (std::size_t l = 0; l < cfg.n_layers; ++l) {
        EncoderLayerParams lp;
        lp.wq = xavier_uniform({d, d}, d, d, rng);
        lp.wk = xavier_uniform({d, d}, d, d, rng);
        lp.wv = xavier_uniform({d, d}, d, d, rng);
        lp.wo = xavier_uniform({d, d}, d, d, rng);
        lp.bo = Tensor::zeros({d}, true);
        lp.ff_w1 = xavier_uniform({d, h}, d, h, rng);
        lp.ff_b1 = Tensor::zeros({h}, true);
        lp.ff_w2 = xavier_uniform({h, d}, h, d, rng);
        lp.ff_b2 = Tensor::zeros({d}, true);
        if (cfg.ff_variant == FfVariant::glu) lp.ff_w3 = xavier_uniform({d, h}, d, h, rng);
        lp.ln1_gamma = ones(d);
        lp.ln1_beta = Tensor::zeros({d}, true);
        lp.ln2_gamma = ones(d);
        lp.ln2_beta = Tensor::zeros({d}, true);
        st.layers.push_back(std::move(lp));
    }
    st.cls_w = xavier_uniform({d, cfg.n_classes}, d, cfg.n_classes, rng);
    st.cls_b = Tensor::zeros({cfg.n_classes}, true);
    st.recon_w1 = xavier_uniform({d, d}, d, d, rng);
    st.recon_b1 = Tensor::zeros({d}, true);
    st.recon_w2 = xavier_uniform({d, in}, d, in, rng);
    st.recon_b2 = Tensor::zeros({in}, true);
    return st;
}

ParamList EncoderState::encoder_params() const {
    ParamList p;
    p.push_back({"embed.w1", embed_w1});
    p.push_back({"embed.b1", embed_b1});
    if (cfg.mlp_embedder) {
        p.push_back({"embed.w2", embed_w2});
        p.push_back({"embed.b2", embed_b2});
    }
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const auto& lp = layers[l];
        const std::string pre = "layer" + std::to_string(l) + ".";
        p.push_back({pre + "wq", lp.wq});
        p.push_back({pre + "wk", lp.wk});
        p.push_back({pre + "wv", lp.wv});
        p.push_back({pre + "wo", lp.wo});
        p.push_back({pre + "bo", lp.bo});
        p.push_back({pre + "ff_w1", lp.ff_w1});
        p.push_back({pre + "ff_b1", lp.ff_b1});
        p.push_back({pre + "ff_w2", lp.ff_w2});
        p.push_back({pre + "ff_b2", lp.ff_b2});
        if (cfg.ff_variant == FfVariant::glu) p.push_back({pre + "ff_w3", lp.ff_w3});
        p.push_back({pre + "ln1_gamma", lp.ln1_gamma});
        p.push_back({pre + "ln1_beta", lp.ln1_beta});
        p.push_back({pre + "ln2_gamma", lp.ln2_gamma});
        p.push_back({pre + "ln2_beta", lp.ln2_beta});
    }
    return p;
}

ParamList EncoderState::head_params() const {
    return {{"class_token", class_token}, {"cls.w", cls_w},       {"cls.b", cls_b},
            {"recon.w1", recon_w1},       {"recon.b1", recon_b1}, {"recon.w2", recon_w2},
            {"recon.b2", recon_b2}};
}

ParamList EncoderState::params() const {
    ParamList p = encoder_params();
    for (auto& hp : head_params()) p.push_back(hp);
    return p;
}

namespace {

Tensor embed(const Tensor& tokens, const EncoderState& st) {
    Tensor h = linear(tokens, st.embed_w1, st.embed_b1);
    if (st.cfg.mlp_embedder) h = linear(gelu(h), st.embed_w2, st.embed_b2);
    return h;
}

Tensor attention_block(const Tensor& x, const EncoderLayerParams& lp, const EncoderConfig& cfg,
                       const std::vector<std::size_t>& positions, Rng& rng, bool training,
                       std::vector<double>* capture) {
    const std::size_t n = x.rows();
    const std::size_t hd = cfg.head_dim();
    Tensor q = matmul(x, lp.wq);
    Tensor k = matmul(x, lp.wk);
    Tensor v = matmul(x, lp.wv);
    std::vector<Tensor> heads;
    heads.reserve(cfg.n_heads);
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(hd));
    for (std::size_t h = 0; h < cfg.n_heads; ++h) {
        Tensor qh = rope(slice_cols(q, h * hd, (h + 1) * hd), positions);
        Tensor kh = rope(slice_cols(k, h * hd, (h + 1) * hd), positions);
        Tensor vh = slice_cols(v, h * hd, (h + 1) * hd);
        Tensor scores = scale(matmul(qh, transpose(kh)), inv_sqrt_d);
        Tensor attn = softmax(scores);
        if (capture)
            capture->insert(capture->end(), attn.data().begin(), attn.data().end());
        attn = dropout(attn, cfg.dropout, rng, training);
        heads.push_back(matmul(attn, vh));
    }
    (void)n;
    Tensor cat = concat_cols(heads);
    return linear(cat, lp.wo, lp.bo);
}

Tensor feed_forward(const Tensor& x, const EncoderLayerParams& lp, const EncoderConfig& cfg) {
    if (cfg.ff_variant == FfVariant::glu) {
        Tensor gate = gelu(matmul(x, lp.ff_w1));
        Tensor val = matmul(x, lp.ff_w3);
        return add_rowvec(matmul(mul(gate, val), lp.ff_w2), lp.ff_b2);
    }
    Tensor h = gelu(linear(x, lp.ff_w1, lp.ff_b1));
    return linear(h, lp.ff_w2, lp.ff_b2);
}

Tensor encoder_layer(const Tensor& x, const EncoderLayerParams& lp, const EncoderConfig& cfg,
                     const std::vector<std::size_t>& positions, Rng& rng, bool training,
                     std::vector<double>* capture) {
    // Post-norm residual wiring.
    Tensor a = attention_block(x, lp, cfg, positions, rng, training, capture);
    a = dropout(a, cfg.dropout, rng, training);
    Tensor xa = layer_norm(add(a, x), lp.ln1_gamma, lp.ln1_beta, cfg.layer_norm_eps);
    Tensor f = feed_forward(xa, lp, cfg);
    f = dropout(f, cfg.dropout, rng, training);
    return layer_norm(add(f, xa), lp.ln2_gamma, lp.ln2_beta, cfg.layer_norm_eps);
}

}  // namespace

Tensor encode_tensor(const Tensor& tokens, const EncoderState& st, EncodeMode mode, Rng& rng,
                     bool training, AttnCapture* capture) {
    if (tokens.rows() == 0) throw std::logic_error("encode: empty token sequence");
    if (tokens.cols() != st.cfg.input_dim)
        throw std::invalid_argument("encode: token width " + std::to_string(tokens.cols()) +
                                    " does not match input_dim " +
                                    std::to_string(st.cfg.input_dim));
    Tensor h = embed(tokens, st);
    if (mode == EncodeMode::classify) h = concat_rows({st.class_token, h});
    const std::size_t n = h.rows();
    std::vector<std::size_t> positions(n);
    for (std::size_t i = 0; i < n; ++i) positions[i] = i;
    if (capture) {
        capture->n_heads = st.cfg.n_heads;
        capture->seq_len = n;
        capture->layers.clear();
    }
    for (const auto& lp : st.layers) {
        std::vector<double>* cap = nullptr;
        if (capture) {
            capture->layers.emplace_back();
            cap = &capture->layers.back();
        }
        h = encoder_layer(h, lp, st.cfg, positions, rng, training, cap);
    }
    if (mode == EncodeMode::classify)
        return linear(slice_rows(h, 0, 1), st.cls_w, st.cls_b);
    Tensor r = gelu(linear(h, st.recon_w1, st.recon_b1));
    return linear(r, st.recon_w2, st.recon_b2);
}

Tensor encode(const TokenSequence& tokens, const EncoderState& st, EncodeMode mode, Rng& rng,
              bool training, AttnCapture* capture) {
    if (tokens.n_tokens == 0) throw std::logic_error("encode: empty token sequence");
    Tensor t = Tensor::from({tokens.n_tokens, tokens.token_dim}, tokens.tokens);
    return encode_tensor(t, st, mode, rng, training, capture);
}

AttnScores attention_scores(const TokenSequence& tokens, const EncoderState& st,
                            std::size_t layer) {
    if (layer >= st.cfg.n_layers)
        throw std::out_of_range("attention_scores: layer " + std::to_string(layer) + " out of " +
                                std::to_string(st.cfg.n_layers));
    AttnCapture cap;
    Rng rng(0);
    encode(tokens, st, EncodeMode::classify, rng, false, &cap);
    AttnScores out;
    out.n_heads = cap.n_heads;
    out.n_tokens = cap.seq_len;
    out.scores.resize(out.n_heads * out.n_tokens);
    const auto& flat = cap.layers[layer];  // [n_heads, n, n]
    for (std::size_t h = 0; h < out.n_heads; ++h)
        for (std::size_t j = 0; j < out.n_tokens; ++j)
            out.scores[h * out.n_tokens + j] = flat[h * cap.seq_len * cap.seq_len + j];
    return out;
}

// --- baselines -----------------------------------------------------------

namespace {

void check_token_channels(const TokenSequence& tokens, std::size_t expected) {
    if (tokens.token_dim != expected)
        throw std::invalid_argument("baseline: expected token_dim " + std::to_string(expected) +
                                    ", got " + std::to_string(tokens.token_dim));
}

Tensor tokens_channels_first(const TokenSequence& tokens) {
    // {n, d} row-major -> {d, n}
    std::vector<double> out(tokens.tokens.size());
    for (std::size_t t = 0; t < tokens.n_tokens; ++t)
        for (std::size_t c = 0; c < tokens.token_dim; ++c)
            out[c * tokens.n_tokens + t] = tokens.at(t, c);
    return Tensor::from({tokens.token_dim, tokens.n_tokens}, std::move(out));
}

Tensor conv_xavier(std::size_t cout, std::size_t cin, std::size_t k, Rng& rng) {
    return xavier_uniform({cout, cin, k}, cin * k, cout * k, rng);
}

}  // namespace

CnnBaseline CnnBaseline::init(std::size_t n_classes, Rng& rng) {
    CnnBaseline m;
    m.n_classes = n_classes;
    m.cw1 = conv_xavier(32, 8, 10, rng);
    m.cb1 = Tensor::zeros({32}, true);
    m.cw2 = conv_xavier(256, 32, 5, rng);
    m.cb2 = Tensor::zeros({256}, true);
    m.cw3 = conv_xavier(512, 256, 3, rng);
    m.cb3 = Tensor::zeros({512}, true);
    m.cw4 = conv_xavier(256, 512, 3, rng);
    m.cb4 = Tensor::zeros({256}, true);
    m.cw5 = conv_xavier(256, 256, 3, rng);
    m.cb5 = Tensor::zeros({256}, true);
    m.fw1 = xavier_uniform({2048, 512}, 2048, 512, rng);
    m.fb1 = Tensor::zeros({512}, true);
    m.fw2 = xavier_uniform({512, 526}, 512, 526, rng);
    m.fb2 = Tensor::zeros({526}, true);
    m.fw3 = xavier_uniform({526, n_classes}, 526, n_classes, rng);
    m.fb3 = Tensor::zeros({n_classes}, true);
    return m;
}

ParamList CnnBaseline::params() const {
    return {{"cnn.cw1", cw1}, {"cnn.cb1", cb1}, {"cnn.cw2", cw2}, {"cnn.cb2", cb2},
            {"cnn.cw3", cw3}, {"cnn.cb3", cb3}, {"cnn.cw4", cw4}, {"cnn.cb4", cb4},
            {"cnn.cw5", cw5}, {"cnn.cb5", cb5}, {"cnn.fw1", fw1}, {"cnn.fb1", fb1},
            {"cnn.fw2", fw2}, {"cnn.fb2", fb2}, {"cnn.fw3", fw3}, {"cnn.fb3", fb3}};
}

Tensor CnnBaseline::forward(const TokenSequence& tokens, Rng& rng, bool training) const {
    check_token_channels(tokens, 8);
    Tensor x = tokens_channels_first(tokens);  // {8, L}
    x = gelu(conv1d(x, cw1, cb1, 2, 8));       // {32, L/2}
    x = gelu(conv1d(x, cw2, cb2, 1, 4));       // {256, L/2}
    x = gelu(conv1d(x, cw3, cb3, 1, 2));       // {512, L/2}
    x = gelu(conv1d(x, cw4, cb4, 1, 2));       // {256, L/2}
    x = conv1d(x, cw5, cb5, 2, 1);             // {256, L/4}
    x = adaptive_avg_pool(x, 8);               // {256, 8}
    x = reshape(x, {1, 2048});
    x = ff::dropout(x, this->dropout, rng, training);
    x = gelu(add_rowvec(matmul(x, fw1), fb1));
    x = ff::dropout(x, this->dropout, rng, training);
    x = gelu(add_rowvec(matmul(x, fw2), fb2));
    return add_rowvec(matmul(x, fw3), fb3);
}

MlpBaseline MlpBaseline::init(std::size_t n_classes, Rng& rng) {
    MlpBaseline m;
    m.n_classes = n_classes;
    m.w1 = xavier_uniform({2048, 1024}, 2048, 1024, rng);
    m.b1 = Tensor::zeros({1024}, true);
    m.w2 = xavier_uniform({1024, 1024}, 1024, 1024, rng);
    m.b2 = Tensor::zeros({1024}, true);
    m.w3 = xavier_uniform({1024, 512}, 1024, 512, rng);
    m.b3 = Tensor::zeros({512}, true);
    m.w4 = xavier_uniform({512, 256}, 512, 256, rng);
    m.b4 = Tensor::zeros({256}, true);
    m.w5 = xavier_uniform({256, n_classes}, 256, n_classes, rng);
    m.b5 = Tensor::zeros({n_classes}, true);
    return m;
}

ParamList MlpBaseline::params() const {
    return {{"mlp.w1", w1}, {"mlp.b1", b1}, {"mlp.w2", w2}, {"mlp.b2", b2}, {"mlp.w3", w3},
            {"mlp.b3", b3}, {"mlp.w4", w4}, {"mlp.b4", b4}, {"mlp.w5", w5}, {"mlp.b5", b5}};
}

Tensor MlpBaseline::forward(const TokenSequence& tokens, Rng& rng, bool training) const {
    check_token_channels(tokens, 8);
    Tensor x = tokens_channels_first(tokens);  // {8, L}
    x = adaptive_avg_pool(x, 256);             // {8, 256}: time axis pooled to 256
    x = reshape(x, {1, 2048});
    x = ff::dropout(x, this->dropout, rng, training);
    x = gelu(add_rowvec(matmul(x, w1), b1));
    x = ff::dropout(x, this->dropout, rng, training);
    x = gelu(add_rowvec(matmul(x, w2), b2));
    x = gelu(add_rowvec(matmul(x, w3), b3));
    x = gelu(add_rowvec(matmul(x, w4), b4));
    return add_rowvec(matmul(x, w5), b5);
}

}  // namespace ff
