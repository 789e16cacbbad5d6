#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "faultformer/model.hpp"
#include "faultformer/signal.hpp"
#include "faultformer/train.hpp"

namespace ff {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class ModelKind { transformer, transformer_pretrained, cnn, mlp };

std::string model_kind_name(ModelKind k);
ModelKind model_kind_from_name(const std::string& name);

struct SyntheticSpec {
    int n_classes = 4;
    std::size_t per_class = 75;
    std::size_t length = 1600;
    double noise_sigma = 0.1;
};

struct ExperimentConfig {
    std::string experiment = "synthetic";  // baseline|scarcity|task_adapt|dataset_adapt|synthetic
    std::string dataset_path;              // SIGB1 bundle; unused for synthetic
    std::string finetune_dataset_path;     // dataset_adapt only
    SyntheticSpec synthetic;
    TokenizerSpec tokenizer;
    double augment_probability = 0.0;
    std::int64_t cutout_window_lo = 100;
    std::int64_t cutout_window_hi = 500;
    ModelKind model = ModelKind::transformer;
    std::string checkpoint_path;  // optional for transformer_pretrained
    EncoderConfig encoder;        // model_dim/heads/layers/dropout/ff overrides
    std::size_t epochs = 40;
    std::size_t pretrain_epochs = 50;
    std::size_t scarcity_n = 400;
    std::uint64_t seed = 0;
    std::size_t n_seeds = 3;
    std::size_t batch_size = 16;
    LrSchedule sched;
    MaskRatios mask;
    std::vector<std::size_t> report_epochs;  // empty: per-experiment default
    std::string output_dir = "runs";

    // Parses the file; relative paths inside resolve against its directory.
    static ExperimentConfig from_json_file(const std::string& path);
    static ExperimentConfig from_json(const std::string& text, const std::string& base_dir = ".");
    std::string to_json() const;
};

struct ResultRow {
    std::string model;
    std::string tokenizer;
    double augment_p = 0.0;
    std::size_t epoch = 0;
    double accuracy = 0.0;  // mean over seeds
};

struct ResultTable {
    std::vector<ResultRow> rows;

    std::string to_csv() const;
};

// Runs the configured experiment over n_seeds seeds and writes the run
// directory: config snapshot, split manifest, per-seed metrics CSV, final
// checkpoints, result table, and an accuracy-vs-epoch SVG.
ResultTable run_experiment(const ExperimentConfig& cfg);

// Shared-split grid: all configs must agree on experiment, data, and split
// seed. Returns the merged table sorted by (tokenizer, model, augment_p).
ResultTable compare_models(const std::vector<ExperimentConfig>& cfgs);

// Line chart of accuracy vs epoch, one polyline per (model, tokenizer,
// augment_p) row group.
std::string render_accuracy_svg(const ResultTable& table);

// Pretrains an encoder on the experiment's pretraining pool and writes a
// checkpoint to out_path. Returns per-epoch mean reconstruction losses.
std::vector<double> run_pretrain(const ExperimentConfig& cfg, const std::string& out_path);

// Materializes the dataset the experiment fine-tunes and tests on
// (synthetic generation or bundle load).
Dataset load_experiment_dataset(const ExperimentConfig& cfg);

}  // namespace ff
