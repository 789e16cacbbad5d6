#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "faultformer/augment.hpp"
#include "faultformer/model.hpp"
#include "faultformer/optim.hpp"
#include "faultformer/signal.hpp"
#include "faultformer/tokenize.hpp"

namespace ff {

struct TrainingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// --- masking -------------------------------------------------------------

enum class MaskAction { zero, random, keep };

struct MaskPlan {
    std::vector<bool> masked;
    std::vector<MaskAction> action;  // meaningful at masked positions only

    std::size_t masked_count() const;
};

struct MaskRatios {
    double mask_p = 0.5;
    double zero_frac = 0.7;
    double random_frac = 0.2;  // remainder is kept untouched

    void validate() const;
};

// Masks each token independently; zeroed/randomized/kept per the ratios.
// Random replacements draw uniformly from the sample's empirical token
// value range.
std::pair<TokenSequence, MaskPlan> apply_mask(const TokenSequence& tokens,
                                              const MaskRatios& ratios, Rng& rng);

// --- tokenizer dispatch --------------------------------------------------

struct TokenizerSpec {
    TokenizerId id = TokenizerId::fourier;
    std::size_t constant_d = 8;
    FourierTokenConfig fourier;

    std::size_t token_dim() const;
};

TokenSequence run_tokenizer(const TokenizerSpec& spec, const std::vector<double>& x,
                            const CnnTokenizer* cnn_tok);

// --- classifiers ---------------------------------------------------------

class SignalClassifier {
public:
    virtual ~SignalClassifier() = default;
    virtual Tensor logits(const std::vector<double>& signal, Rng& rng, bool training) = 0;
    virtual ParamList params() const = 0;
};

class TransformerClassifier : public SignalClassifier {
public:
    TransformerClassifier(EncoderState state, TokenizerSpec tok,
                          std::optional<CnnTokenizer> cnn_tok = std::nullopt);
    Tensor logits(const std::vector<double>& signal, Rng& rng, bool training) override;
    ParamList params() const override;

    EncoderState& state() { return state_; }
    const TokenizerSpec& tokenizer() const { return tok_; }
    const CnnTokenizer* cnn_tokenizer() const { return cnn_tok_ ? &*cnn_tok_ : nullptr; }

private:
    EncoderState state_;
    TokenizerSpec tok_;
    std::optional<CnnTokenizer> cnn_tok_;
};

class CnnClassifier : public SignalClassifier {
public:
    CnnClassifier(CnnBaseline model, std::size_t constant_d = 8);
    Tensor logits(const std::vector<double>& signal, Rng& rng, bool training) override;
    ParamList params() const override;

private:
    CnnBaseline model_;
    std::size_t constant_d_;
};

class MlpClassifier : public SignalClassifier {
public:
    MlpClassifier(MlpBaseline model, std::size_t constant_d = 8);
    Tensor logits(const std::vector<double>& signal, Rng& rng, bool training) override;
    ParamList params() const override;

private:
    MlpBaseline model_;
    std::size_t constant_d_;
};

// --- training loops ------------------------------------------------------

struct DataView {
    const Dataset* ds = nullptr;
    std::vector<std::size_t> indices;

    std::size_t size() const { return indices.size(); }
    const SignalSample& sample(std::size_t i) const { return ds->samples[indices[i]]; }
};

struct TrainMetrics {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double test_accuracy = 0.0;
    std::vector<std::size_t> confusion;  // n_classes x n_classes, row = true class
    double lr = 0.0;
    double wall_seconds = 0.0;
};

struct TrainOptions {
    std::size_t batch_size = 16;
    LrSchedule sched;
    AdamWConfig adamw;
    MaskRatios mask;
    AugmentConfig augment;
    std::uint64_t seed = 0;
};

// One optimizer update on a batch of pretraining samples: mask, encode in
// reconstruct mode, MSE over masked positions only. Returns the loss.
// Aborts on a non-finite loss.
double pretrain_step(const std::vector<const SignalSample*>& batch, EncoderState& state,
                     const TokenizerSpec& tok, const CnnTokenizer* cnn_tok, AdamW& opt,
                     const LrSchedule& sched, const MaskRatios& ratios, Rng& mask_rng,
                     Rng& model_rng);

// Full pretraining loop over `epochs` passes of the view; per-step lr
// follows the one-cycle schedule. Returns per-epoch mean losses.
std::vector<double> pretrain_run(const DataView& data, EncoderState& state,
                                 const TokenizerSpec& tok, CnnTokenizer* cnn_tok,
                                 const TrainOptions& opts, std::size_t epochs);

// One supervised epoch: shuffled minibatches, per-sample augmentation on
// the training path only, cross-entropy, AdamW + one-cycle. Metrics are
// computed on the untouched test view.
TrainMetrics finetune_epoch(const DataView& train, const DataView& test,
                            SignalClassifier& model, AdamW& opt, const TrainOptions& opts,
                            std::size_t epoch, std::size_t steps_done);

TrainMetrics evaluate(const DataView& test, SignalClassifier& model);

// --- checkpointing -------------------------------------------------------

struct CheckpointData {
    std::string arch_json;
    std::vector<std::tuple<std::string, Shape, std::vector<float>>> records;
    std::string rng_state;
};

// FFCK1 container: magic, version byte, length-prefixed JSON descriptor,
// named f32 parameter records, rng-state blob.
void write_checkpoint_file(const CheckpointData& ckpt, const std::string& path);
CheckpointData read_checkpoint_file(const std::string& path);

void save_checkpoint(const EncoderState& state, const TokenizerSpec& tok,
                     const CnnTokenizer* cnn_tok, const std::string& rng_state,
                     const std::string& path, const AdamW* opt = nullptr);

struct LoadedCheckpoint {
    EncoderState state;
    TokenizerSpec tok;
    std::optional<CnnTokenizer> cnn_tok;
    std::string rng_state;
    std::size_t opt_step = 0;
    std::vector<std::vector<double>> opt_m, opt_v;  // empty when absent
};

LoadedCheckpoint load_checkpoint(const std::string& path);

// Copies embedder + encoder layers from a pretrained checkpoint and draws
// a fresh class token and classification head.
EncoderState transfer_for_finetune(const LoadedCheckpoint& pretrained, std::size_t n_classes,
                                   Rng& rng);

// --- metrics output ------------------------------------------------------

std::string metrics_csv_header();
std::string metrics_csv_row(const TrainMetrics& m, const std::string& split);

}  // namespace ff
