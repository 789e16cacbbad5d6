#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "faultformer/rng.hpp"

namespace ff {

// One fixed-length vibration window.
struct SignalSample {
    std::vector<double> values;
    std::optional<int> label;
    double sample_rate_hz = 1.0;
};

struct Dataset {
    std::vector<SignalSample> samples;
    int n_classes = 0;
    std::size_t window_length = 0;
    std::string name;

    void validate() const;
};

// Index-level description of one experiment split. Pretrain indices are
// treated as unlabeled regardless of what the dataset records. For the
// dataset-adaptation experiment pretrain indices refer to the pretraining
// dataset and train/test indices to the fine-tuning dataset.
struct SplitPlan {
    std::vector<std::size_t> pretrain_indices;
    std::vector<std::size_t> train_indices;
    std::vector<std::size_t> test_indices;
    std::set<int> allowed_classes_pretrain;
    std::set<int> allowed_classes_train;

    std::string to_json() const;
};

enum class ExperimentKind { baseline, scarcity, task_adapt, dataset_adapt };

struct SplitSpec {
    ExperimentKind kind = ExperimentKind::baseline;
    std::size_t scarcity_n = 400;  // in {100, 200, 400}
};

// Cuts a raw recording into disjoint blocks of window_length + 2*trim
// points, dropping `trim` points at each block end; the partial trailing
// block is discarded.
std::vector<SignalSample> window_recording(const std::vector<double>& raw,
                                           std::size_t window_length, std::size_t trim,
                                           double sample_rate_hz = 48000.0);

// Splits the first seconds*rate_hz points into n_splits equal consecutive
// windows.
std::vector<SignalSample> split_paderborn(const std::vector<double>& raw, double seconds = 4.0,
                                          double rate_hz = 64000.0, std::size_t n_splits = 100);

// Seeded per-class stratified split; every class contributes exactly
// train_per_class + test_per_class samples.
void stratified_split(const Dataset& ds, std::size_t train_per_class, std::size_t test_per_class,
                      std::uint64_t seed, std::vector<std::size_t>& train_out,
                      std::vector<std::size_t>& test_out);

// Builds the experiment splits. `finetune_ds` is only consulted for
// dataset adaptation, where `ds` supplies the pretraining pool.
SplitPlan make_split(const Dataset& ds, const SplitSpec& spec, std::uint64_t seed,
                     const Dataset* finetune_ds = nullptr);

// Synthetic dataset: class c is a unit sinusoid at bin 5 + 7c with random
// phase, one random harmonic, and Gaussian noise.
Dataset synth_generate(int n_classes, std::size_t per_class, std::size_t length,
                       double noise_sigma, std::uint64_t seed);

// SIGB1 container: 5 magic bytes, u32-LE length-prefixed JSON header,
// f32-LE values row-major, optional u8 labels.
void save_bundle(const Dataset& ds, const std::string& path);
Dataset load_bundle(const std::string& path);

// CSV import: one sample per row, decimal floats, class label in the last
// column.
Dataset load_csv(const std::string& path, const std::string& name = "csv",
                 double sample_rate_hz = 48000.0);

}  // namespace ff
