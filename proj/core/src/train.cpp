#include "faultformer/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include <json.hpp>

#include "binio.hpp"
#include "faultformer/init.hpp"

namespace ff {

using nlohmann::json;

// --- masking -------------------------------------------------------------

std::size_t MaskPlan::masked_count() const {
    std::size_t n = 0;
    for (bool m : masked) n += m ? 1 : 0;
    return n;
}

void MaskRatios::validate() const {
    if (mask_p < 0.0 || mask_p > 1.0) throw std::invalid_argument("mask: mask_p must be in [0,1]");
    if (zero_frac < 0.0 || random_frac < 0.0 || zero_frac + random_frac > 1.0)
        throw std::invalid_argument("mask: action fractions must be non-negative and sum <= 1");
}

std::pair<TokenSequence, MaskPlan> apply_mask(const TokenSequence& tokens,
                                              const MaskRatios& ratios, Rng& rng) {
    ratios.validate();
    if (tokens.n_tokens == 0) throw std::logic_error("apply_mask: empty token sequence");
    double lo = tokens.tokens[0], hi = tokens.tokens[0];
    for (double v : tokens.tokens) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    TokenSequence corrupted = tokens;
    MaskPlan plan;
    plan.masked.assign(tokens.n_tokens, false);
    plan.action.assign(tokens.n_tokens, MaskAction::keep);
    for (std::size_t t = 0; t < tokens.n_tokens; ++t) {
        if (rng.uniform() >= ratios.mask_p) continue;
        plan.masked[t] = true;
        const double a = rng.uniform();
        if (a < ratios.zero_frac) {
            plan.action[t] = MaskAction::zero;
            for (std::size_t c = 0; c < tokens.token_dim; ++c)
                corrupted.tokens[t * tokens.token_dim + c] = 0.0;
        } else if (a < ratios.zero_frac + ratios.random_frac) {
            plan.action[t] = MaskAction::random;
            for (std::size_t c = 0; c < tokens.token_dim; ++c)
                corrupted.tokens[t * tokens.token_dim + c] = rng.uniform(lo, hi);
        } else {
            plan.action[t] = MaskAction::keep;
        }
    }
    return {std::move(corrupted), std::move(plan)};
}

// --- tokenizer dispatch --------------------------------------------------

std::size_t TokenizerSpec::token_dim() const {
    switch (id) {
        case TokenizerId::constant: return constant_d;
        case TokenizerId::cnn: return 8;
        case TokenizerId::fourier: return 3;
    }
    throw std::logic_error("tokenizer spec: bad id");
}

TokenSequence run_tokenizer(const TokenizerSpec& spec, const std::vector<double>& x,
                            const CnnTokenizer* cnn_tok) {
    switch (spec.id) {
        case TokenizerId::constant: return tokenize_constant(x, spec.constant_d);
        case TokenizerId::fourier: return tokenize_fourier(x, spec.fourier);
        case TokenizerId::cnn:
            if (!cnn_tok) throw std::logic_error("run_tokenizer: cnn tokenizer state missing");
            return tokenize_cnn(x, *cnn_tok);
    }
    throw std::logic_error("run_tokenizer: bad id");
}

// --- classifiers ---------------------------------------------------------

TransformerClassifier::TransformerClassifier(EncoderState state, TokenizerSpec tok,
                                             std::optional<CnnTokenizer> cnn_tok)
    : state_(std::move(state)), tok_(tok), cnn_tok_(std::move(cnn_tok)) {
    if (tok_.id == TokenizerId::cnn && !cnn_tok_)
        throw std::invalid_argument("transformer: cnn tokenizer selected but not provided");
    if (state_.cfg.input_dim != tok_.token_dim())
        throw std::invalid_argument("transformer: encoder input_dim " +
                                    std::to_string(state_.cfg.input_dim) +
                                    " does not match tokenizer width " +
                                    std::to_string(tok_.token_dim()));
}

Tensor TransformerClassifier::logits(const std::vector<double>& signal, Rng& rng,
                                     bool training) {
    if (tok_.id == TokenizerId::cnn) {
        Tensor tokens = cnn_tok_->forward(signal);
        return encode_tensor(tokens, state_, EncodeMode::classify, rng, training);
    }
    const TokenSequence tokens = run_tokenizer(tok_, signal, nullptr);
    return encode(tokens, state_, EncodeMode::classify, rng, training);
}

ParamList TransformerClassifier::params() const {
    ParamList p = state_.params();
    if (cnn_tok_)
        for (auto& tp : cnn_tok_->params()) p.push_back(tp);
    return p;
}

CnnClassifier::CnnClassifier(CnnBaseline model, std::size_t constant_d)
    : model_(std::move(model)), constant_d_(constant_d) {}

Tensor CnnClassifier::logits(const std::vector<double>& signal, Rng& rng, bool training) {
    return model_.forward(tokenize_constant(signal, constant_d_), rng, training);
}

ParamList CnnClassifier::params() const { return model_.params(); }

MlpClassifier::MlpClassifier(MlpBaseline model, std::size_t constant_d)
    : model_(std::move(model)), constant_d_(constant_d) {}

Tensor MlpClassifier::logits(const std::vector<double>& signal, Rng& rng, bool training) {
    return model_.forward(tokenize_constant(signal, constant_d_), rng, training);
}

ParamList MlpClassifier::params() const { return model_.params(); }

// --- training loops ------------------------------------------------------

namespace {

void check_finite_loss(double loss, std::size_t step) {
    if (!std::isfinite(loss))
        throw TrainingError("training aborted: non-finite loss at step " + std::to_string(step));
}

std::size_t argmax(const std::vector<double>& v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = i;
    return best;
}

}  // namespace

double pretrain_step(const std::vector<const SignalSample*>& batch, EncoderState& state,
                     const TokenizerSpec& tok, const CnnTokenizer* cnn_tok, AdamW& opt,
                     const LrSchedule& sched, const MaskRatios& ratios, Rng& mask_rng,
                     Rng& model_rng) {
    if (tok.id == TokenizerId::cnn)
        throw std::invalid_argument("pretraining supports the constant and fourier tokenizers");
    (void)cnn_tok;
    std::vector<Tensor> losses;
    for (const SignalSample* s : batch) {
        const TokenSequence target = run_tokenizer(tok, s->values, nullptr);
        auto [corrupted, plan] = apply_mask(target, ratios, mask_rng);
        Tensor in = Tensor::from({corrupted.n_tokens, corrupted.token_dim}, corrupted.tokens);
        Tensor recon = encode_tensor(in, state, EncodeMode::reconstruct, model_rng, true);
        losses.push_back(mse_masked_rows(recon, target.tokens, plan.masked));
    }
    Tensor loss = mean_of(losses);
    check_finite_loss(loss.item(), opt.step_count() + 1);
    // A fully unmasked batch yields a constant zero loss and no update.
    if (loss.requires_grad()) {
        opt.zero_grad();
        backward(loss);
        opt.set_lr(onecycle_lr(opt.step_count(), sched));
        opt.step();
    }
    return loss.item();
}

std::vector<double> pretrain_run(const DataView& data, EncoderState& state,
                                 const TokenizerSpec& tok, CnnTokenizer* cnn_tok,
                                 const TrainOptions& opts, std::size_t epochs) {
    if (tok.id == TokenizerId::cnn)
        throw std::invalid_argument("pretraining supports the constant and fourier tokenizers");
    (void)cnn_tok;
    AdamW opt(state.params(), opts.adamw);
    LrSchedule sched = opts.sched;
    const std::size_t steps_per_epoch =
        (data.size() + opts.batch_size - 1) / opts.batch_size;
    if (sched.total_steps < steps_per_epoch * epochs)
        sched.total_steps = std::max<std::size_t>(steps_per_epoch * epochs,
                                                  sched.warmup_steps + 1);
    std::vector<double> epoch_losses;
    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
        std::vector<std::size_t> order(data.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        Rng shuffle_rng = Rng::stream(opts.seed, 0x50000000ULL + epoch);
        shuffle(order, shuffle_rng);
        Rng mask_rng = Rng::stream(opts.seed, 0x51000000ULL + epoch);
        Rng model_rng = Rng::stream(opts.seed, 0x52000000ULL + epoch);
        double loss_sum = 0.0;
        std::size_t n_batches = 0;
        for (std::size_t b0 = 0; b0 < order.size(); b0 += opts.batch_size) {
            const std::size_t b1 = std::min(order.size(), b0 + opts.batch_size);
            std::vector<Tensor> losses;
            for (std::size_t i = b0; i < b1; ++i) {
                const SignalSample& s = data.sample(order[i]);
                const TokenSequence target = run_tokenizer(tok, s.values, nullptr);
                auto [corrupted, plan] = apply_mask(target, opts.mask, mask_rng);
                Tensor in =
                    Tensor::from({corrupted.n_tokens, corrupted.token_dim}, corrupted.tokens);
                Tensor recon = encode_tensor(in, state, EncodeMode::reconstruct, model_rng, true);
                losses.push_back(mse_masked_rows(recon, target.tokens, plan.masked));
            }
            Tensor loss = mean_of(losses);
            check_finite_loss(loss.item(), opt.step_count() + 1);
            loss_sum += loss.item();
            ++n_batches;
            if (loss.requires_grad()) {
                opt.zero_grad();
                backward(loss);
                opt.set_lr(onecycle_lr(opt.step_count(), sched));
                opt.step();
            }
        }
        epoch_losses.push_back(n_batches ? loss_sum / static_cast<double>(n_batches) : 0.0);
    }
    return epoch_losses;
}

TrainMetrics finetune_epoch(const DataView& train, const DataView& test,
                            SignalClassifier& model, AdamW& opt, const TrainOptions& opts,
                            std::size_t epoch, std::size_t steps_done) {
    (void)steps_done;
    const auto t0 = std::chrono::steady_clock::now();
    const int n_classes = train.ds->n_classes;
    std::vector<std::size_t> order(train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng shuffle_rng = Rng::stream(opts.seed, 0x60000000ULL + epoch);
    shuffle(order, shuffle_rng);
    Rng model_rng = Rng::stream(opts.seed, 0x61000000ULL + epoch);
    double loss_sum = 0.0;
    std::size_t n_batches = 0;
    double last_lr = opt.lr();
    for (std::size_t b0 = 0; b0 < order.size(); b0 += opts.batch_size) {
        const std::size_t b1 = std::min(order.size(), b0 + opts.batch_size);
        std::vector<Tensor> losses;
        for (std::size_t i = b0; i < b1; ++i) {
            const SignalSample& s = train.sample(order[i]);
            if (!s.label || *s.label >= n_classes)
                throw std::invalid_argument("finetune: bad label on training sample");
            // Per-sample augmentation stream keyed by the sample's index.
            Rng aug_rng = Rng::stream(opts.augment.rng_seed ^ (0x70000000ULL + epoch),
                                      train.indices[order[i]]);
            const std::vector<double> x = augment_sample(s.values, opts.augment, aug_rng);
            Tensor lg = model.logits(x, model_rng, true);
            losses.push_back(
                cross_entropy_logits(lg, static_cast<std::size_t>(*s.label)));
        }
        Tensor loss = mean_of(losses);
        check_finite_loss(loss.item(), opt.step_count() + 1);
        loss_sum += loss.item();
        ++n_batches;
        opt.zero_grad();
        backward(loss);
        last_lr = onecycle_lr(opt.step_count(), opts.sched);
        opt.set_lr(last_lr);
        opt.step();
    }
    TrainMetrics m = evaluate(test, model);
    m.epoch = epoch;
    m.train_loss = n_batches ? loss_sum / static_cast<double>(n_batches) : 0.0;
    m.lr = last_lr;
    m.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return m;
}

TrainMetrics evaluate(const DataView& test, SignalClassifier& model) {
    if (test.size() == 0) throw std::logic_error("evaluate: empty test set");
    const auto t0 = std::chrono::steady_clock::now();
    const auto nc = static_cast<std::size_t>(test.ds->n_classes);
    TrainMetrics m;
    m.confusion.assign(nc * nc, 0);
    Rng rng(0);  // unused: dropout is off in eval mode
    std::size_t correct = 0;
    for (std::size_t i = 0; i < test.size(); ++i) {
        const SignalSample& s = test.sample(i);
        if (!s.label) throw std::logic_error("evaluate: unlabeled test sample");
        const Tensor lg = model.logits(s.values, rng, false);
        const std::size_t pred = argmax(lg.data());
        const auto truth = static_cast<std::size_t>(*s.label);
        ++m.confusion[truth * nc + pred];
        if (pred == truth) ++correct;
    }
    m.test_accuracy = static_cast<double>(correct) / static_cast<double>(test.size());
    m.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return m;
}

// --- checkpointing -------------------------------------------------------

namespace {

constexpr char kCkptMagic[5] = {'F', 'F', 'C', 'K', '1'};
constexpr char kCkptVersion = 1;

}  // namespace

void write_checkpoint_file(const CheckpointData& ckpt, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("checkpoint: cannot open '" + path + "' for writing");
    out.write(kCkptMagic, 5);
    out.put(kCkptVersion);
    detail::put_u32(out, static_cast<std::uint32_t>(ckpt.arch_json.size()));
    out.write(ckpt.arch_json.data(), static_cast<std::streamsize>(ckpt.arch_json.size()));
    detail::put_u32(out, static_cast<std::uint32_t>(ckpt.records.size()));
    for (const auto& [name, shape, values] : ckpt.records) {
        detail::put_u32(out, static_cast<std::uint32_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        detail::put_u32(out, static_cast<std::uint32_t>(shape.size()));
        for (auto d : shape) detail::put_u32(out, static_cast<std::uint32_t>(d));
        for (float v : values) detail::put_f32(out, v);
    }
    detail::put_u32(out, static_cast<std::uint32_t>(ckpt.rng_state.size()));
    out.write(ckpt.rng_state.data(), static_cast<std::streamsize>(ckpt.rng_state.size()));
    if (!out) throw std::runtime_error("checkpoint: write failed for '" + path + "'");
}

CheckpointData read_checkpoint_file(const std::string& path) {
    detail::LeReader r;
    r.open(path, "checkpoint");
    char magic[5];
    r.read(magic, 5, "magic");
    if (std::memcmp(magic, kCkptMagic, 5) != 0)
        throw std::runtime_error("checkpoint '" + path + "': bad magic at byte offset 0");
    char version;
    r.read(&version, 1, "version");
    if (version != kCkptVersion)
        throw std::runtime_error("checkpoint '" + path + "': unsupported version " +
                                 std::to_string(static_cast<int>(version)));
    CheckpointData ckpt;
    ckpt.arch_json = r.str(r.u32("descriptor length"), "descriptor");
    const std::uint32_t n = r.u32("record count");
    for (std::uint32_t i = 0; i < n; ++i) {
        std::string name = r.str(r.u32("record name length"), "record name");
        const std::uint32_t rank = r.u32("record rank");
        Shape shape(rank);
        std::size_t numel = 1;
        for (auto& d : shape) {
            d = r.u32("record dims");
            numel *= d;
        }
        std::vector<float> values(numel);
        for (auto& v : values) v = r.f32("record values");
        ckpt.records.emplace_back(std::move(name), std::move(shape), std::move(values));
    }
    ckpt.rng_state = r.str(r.u32("rng state length"), "rng state");
    return ckpt;
}

void save_checkpoint(const EncoderState& state, const TokenizerSpec& tok,
                     const CnnTokenizer* cnn_tok, const std::string& rng_state,
                     const std::string& path, const AdamW* opt) {
    CheckpointData ckpt;
    json arch;
    arch["encoder"] = json::parse(state.cfg.to_json());
    arch["tokenizer"] = tokenizer_name(tok.id);
    arch["constant_d"] = tok.constant_d;
    arch["fourier_modes"] = tok.fourier.n_modes;
    arch["fourier_normalize_freq"] = tok.fourier.normalize_freq;
    if (opt) arch["opt_step"] = opt->step_count();
    ckpt.arch_json = arch.dump();
    ckpt.rng_state = rng_state;
    ParamList params = state.params();
    if (cnn_tok)
        for (auto& p : cnn_tok->params()) params.push_back(p);
    for (const auto& p : params) {
        std::vector<float> values(p.tensor.size());
        for (std::size_t i = 0; i < values.size(); ++i)
            values[i] = static_cast<float>(p.tensor.data()[i]);
        ckpt.records.emplace_back(p.name, p.tensor.shape(), std::move(values));
    }
    if (opt) {
        const auto& ps = opt->params();
        for (std::size_t i = 0; i < ps.size(); ++i) {
            std::vector<float> m(opt->first_moments()[i].begin(), opt->first_moments()[i].end());
            std::vector<float> v(opt->second_moments()[i].begin(),
                                 opt->second_moments()[i].end());
            ckpt.records.emplace_back("__opt_m__." + ps[i].name, ps[i].tensor.shape(),
                                      std::move(m));
            ckpt.records.emplace_back("__opt_v__." + ps[i].name, ps[i].tensor.shape(),
                                      std::move(v));
        }
    }
    write_checkpoint_file(ckpt, path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
    const CheckpointData ckpt = read_checkpoint_file(path);
    json arch;
    try {
        arch = json::parse(ckpt.arch_json);
    } catch (const json::exception& e) {
        throw std::runtime_error("checkpoint '" + path + "': bad descriptor JSON: " + e.what());
    }
    LoadedCheckpoint out;
    out.rng_state = ckpt.rng_state;
    const EncoderConfig cfg = EncoderConfig::from_json(arch.at("encoder").dump());
    out.tok.id = tokenizer_from_name(arch.at("tokenizer").get<std::string>());
    out.tok.constant_d = arch.at("constant_d").get<std::size_t>();
    out.tok.fourier.n_modes = arch.at("fourier_modes").get<std::size_t>();
    out.tok.fourier.normalize_freq = arch.at("fourier_normalize_freq").get<bool>();
    if (arch.contains("opt_step")) out.opt_step = arch.at("opt_step").get<std::size_t>();
    Rng init_rng(0);
    out.state = EncoderState::init(cfg, init_rng);
    if (out.tok.id == TokenizerId::cnn) out.cnn_tok = CnnTokenizer::init(init_rng);

    ParamList params = out.state.params();
    if (out.cnn_tok)
        for (auto& p : out.cnn_tok->params()) params.push_back(p);
    std::vector<std::vector<double>> opt_m(params.size()), opt_v(params.size());
    bool has_opt = false;
    for (const auto& [name, shape, values] : ckpt.records) {
        std::string base = name;
        int kind = 0;
        if (base.rfind("__opt_m__.", 0) == 0) {
            base = base.substr(10);
            kind = 1;
        } else if (base.rfind("__opt_v__.", 0) == 0) {
            base = base.substr(10);
            kind = 2;
        }
        auto it = std::find_if(params.begin(), params.end(),
                               [&](const NamedParam& p) { return p.name == base; });
        if (it == params.end())
            throw std::runtime_error("checkpoint '" + path + "': unknown parameter record '" +
                                     name + "'");
        if (it->tensor.shape() != shape)
            throw std::runtime_error("checkpoint '" + path + "': shape mismatch for '" + name +
                                     "': file has " + shape_str(shape) + ", model expects " +
                                     shape_str(it->tensor.shape()));
        const auto idx = static_cast<std::size_t>(it - params.begin());
        if (kind == 0) {
            for (std::size_t i = 0; i < values.size(); ++i)
                it->tensor.data()[i] = static_cast<double>(values[i]);
        } else {
            has_opt = true;
            auto& dst = kind == 1 ? opt_m[idx] : opt_v[idx];
            dst.assign(values.begin(), values.end());
        }
    }
    if (has_opt) {
        out.opt_m = std::move(opt_m);
        out.opt_v = std::move(opt_v);
    }
    return out;
}

EncoderState transfer_for_finetune(const LoadedCheckpoint& pretrained, std::size_t n_classes,
                                   Rng& rng) {
    EncoderConfig cfg = pretrained.state.cfg;
    cfg.n_classes = n_classes;
    EncoderState st = EncoderState::init(cfg, rng);  // fresh head and class token
    ParamList src = pretrained.state.encoder_params();
    ParamList dst = st.encoder_params();
    for (std::size_t i = 0; i < src.size(); ++i) {
        if (src[i].name != dst[i].name || src[i].tensor.shape() != dst[i].tensor.shape())
            throw std::runtime_error("transfer: encoder parameter mismatch at '" + src[i].name +
                                     "'");
        dst[i].tensor.data() = src[i].tensor.data();
    }
    return st;
}

// --- metrics output ------------------------------------------------------

std::string metrics_csv_header() { return "epoch,split,loss,accuracy,lr"; }

std::string metrics_csv_row(const TrainMetrics& m, const std::string& split) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%zu,%s,%.10g,%.10g,%.10g", m.epoch, split.c_str(),
                  m.train_loss, m.test_accuracy, m.lr);
    return buf;
}

}  // namespace ff
