// Command-line front end for the signal-classification toolkit.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "faultformer/augment.hpp"
#include "faultformer/experiment.hpp"
#include "faultformer/model.hpp"
#include "faultformer/train.hpp"

namespace fs = std::filesystem;

namespace {

struct CliArgs {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
};

ff::ExperimentConfig load_config(const CliArgs& a) {
    ff::ExperimentConfig cfg = ff::ExperimentConfig::from_json_file(a.config);
    if (a.seed) cfg.seed = *a.seed;
    if (!a.out.empty()) cfg.output_dir = a.out;
    return cfg;
}

fs::path out_root(const ff::ExperimentConfig& cfg, const CliArgs& a) {
    if (!a.out.empty()) return a.out;
    const char* env = std::getenv("FAULTFORMER_OUT");
    if (env && *env) return env;
    return cfg.output_dir;
}

int cmd_pretrain(const CliArgs& a) {
    ff::ExperimentConfig cfg = load_config(a);
    const fs::path dir = out_root(cfg, a);
    fs::create_directories(dir);
    const std::string ckpt = (dir / "pretrained.ffck").string();
    const std::vector<double> losses = ff::run_pretrain(cfg, ckpt);
    for (std::size_t e = 0; e < losses.size(); ++e)
        std::printf("epoch %zu recon_loss %.10g\n", e + 1, losses[e]);
    std::printf("checkpoint %s\n", ckpt.c_str());
    return 0;
}

int cmd_experiment(const CliArgs& a, bool force_pretrained) {
    ff::ExperimentConfig cfg = load_config(a);
    if (force_pretrained) cfg.model = ff::ModelKind::transformer_pretrained;
    if (!a.out.empty()) cfg.output_dir = a.out;
    const ff::ResultTable table = ff::run_experiment(cfg);
    std::fputs(table.to_csv().c_str(), stdout);
    return 0;
}

int cmd_eval(const CliArgs& a) {
    ff::ExperimentConfig cfg = load_config(a);
    if (cfg.checkpoint_path.empty())
        throw ff::ConfigError("eval needs a checkpoint path in the config");
    ff::LoadedCheckpoint ckpt = ff::load_checkpoint(cfg.checkpoint_path);
    ff::TransformerClassifier model(std::move(ckpt.state), ckpt.tok, std::move(ckpt.cnn_tok));
    ff::Dataset ds = ff::load_experiment_dataset(cfg);
    ff::DataView all{&ds, {}};
    for (std::size_t i = 0; i < ds.samples.size(); ++i)
        if (ds.samples[i].label) all.indices.push_back(i);
    if (all.indices.empty()) throw ff::ConfigError("eval dataset has no labeled samples");
    const ff::TrainMetrics m = ff::evaluate(all, model);
    std::printf("samples %zu accuracy %.10g\n", all.size(), m.test_accuracy);
    const int n = ds.n_classes;
    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c)
            std::printf("%zu%c", m.confusion[static_cast<std::size_t>(r * n + c)],
                        c + 1 == n ? '\n' : ' ');
    }
    return 0;
}

int cmd_augment_preview(const CliArgs& a) {
    ff::ExperimentConfig cfg = load_config(a);
    ff::Dataset ds = ff::load_experiment_dataset(cfg);
    if (ds.samples.empty()) throw ff::ConfigError("dataset is empty");
    const std::vector<double>& x = ds.samples.front().values;
    const fs::path dir = out_root(cfg, a);
    fs::create_directories(dir);
    const fs::path csv_path = dir / "augment_preview.csv";
    std::ofstream csv(csv_path);
    csv << "kind,index,before,after\n";
    const char* names[] = {"noise",        "shift",        "cutout",     "crop",
                           "cutout_shift", "cutout_noise", "crop_shift", "crop_noise"};
    ff::AugmentConfig ac;
    ac.probability = 1.0;
    ac.cutout_window_lo = cfg.cutout_window_lo;
    ac.cutout_window_hi = cfg.cutout_window_hi;
    ac.rng_seed = cfg.seed;
    // Draw until every branch has been seen once; each hit is recorded the
    // first time.
    std::vector<bool> seen(8, false);
    ff::Rng rng(cfg.seed);
    std::vector<std::vector<double>> outs(8);
    std::size_t remaining = 8;
    for (std::size_t guard = 0; remaining > 0 && guard < 10000; ++guard) {
        int branch = -1;
        std::vector<double> y = ff::augment_sample(x, ac, rng, branch);
        if (branch >= 0 && !seen[static_cast<std::size_t>(branch)]) {
            seen[static_cast<std::size_t>(branch)] = true;
            outs[static_cast<std::size_t>(branch)] = std::move(y);
            --remaining;
        }
    }
    char buf[96];
    for (int b = 0; b < 8; ++b) {
        for (std::size_t i = 0; i < x.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%s,%zu,%.10g,%.10g\n", names[b], i, x[i],
                          outs[static_cast<std::size_t>(b)][i]);
            csv << buf;
        }
    }
    std::printf("wrote %s\n", csv_path.string().c_str());
    return 0;
}

int cmd_tokenize_dump(const CliArgs& a) {
    ff::ExperimentConfig cfg = load_config(a);
    ff::Dataset ds = ff::load_experiment_dataset(cfg);
    if (ds.samples.empty()) throw ff::ConfigError("dataset is empty");
    std::optional<ff::CnnTokenizer> cnn_tok;
    if (cfg.tokenizer.id == ff::TokenizerId::cnn) {
        ff::Rng rng = ff::Rng::stream(cfg.seed, 0x11);
        cnn_tok = ff::CnnTokenizer::init(rng);
    }
    const ff::TokenSequence seq = ff::run_tokenizer(cfg.tokenizer, ds.samples.front().values,
                                                    cnn_tok ? &*cnn_tok : nullptr);
    const fs::path dir = out_root(cfg, a);
    fs::create_directories(dir);
    const fs::path csv_path = dir / "tokens.csv";
    std::ofstream csv(csv_path);
    csv << "token";
    for (std::size_t c = 0; c < seq.token_dim; ++c) csv << ",c" << c;
    csv << "\n";
    char buf[48];
    for (std::size_t t = 0; t < seq.n_tokens; ++t) {
        csv << t;
        for (std::size_t c = 0; c < seq.token_dim; ++c) {
            std::snprintf(buf, sizeof(buf), ",%.10g", seq.at(t, c));
            csv << buf;
        }
        csv << "\n";
    }
    std::printf("wrote %s (%zu x %zu)\n", csv_path.string().c_str(), seq.n_tokens,
                seq.token_dim);
    return 0;
}

int cmd_attn_dump(const CliArgs& a) {
    ff::ExperimentConfig cfg = load_config(a);
    if (cfg.checkpoint_path.empty())
        throw ff::ConfigError("attn-dump needs a checkpoint path in the config");
    ff::LoadedCheckpoint ckpt = ff::load_checkpoint(cfg.checkpoint_path);
    if (ckpt.tok.id == ff::TokenizerId::cnn)
        throw ff::ConfigError("attn-dump supports constant and fourier tokenized checkpoints");
    ff::Dataset ds = ff::load_experiment_dataset(cfg);
    if (ds.samples.empty()) throw ff::ConfigError("dataset is empty");
    const ff::TokenSequence seq =
        ff::run_tokenizer(ckpt.tok, ds.samples.front().values, nullptr);
    const fs::path dir = out_root(cfg, a);
    fs::create_directories(dir);
    const fs::path csv_path = dir / "attention.csv";
    std::ofstream csv(csv_path);
    csv << "layer,head,token,score\n";
    char buf[64];
    for (std::size_t layer = 0; layer < ckpt.state.cfg.n_layers; ++layer) {
        const ff::AttnScores s = ff::attention_scores(seq, ckpt.state, layer);
        for (std::size_t h = 0; h < s.n_heads; ++h)
            for (std::size_t t = 0; t < s.n_tokens; ++t) {
                std::snprintf(buf, sizeof(buf), "%zu,%zu,%zu,%.10g\n", layer, h, t,
                              s.scores[h * s.n_tokens + t]);
                csv << buf;
            }
    }
    std::printf("wrote %s\n", csv_path.string().c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Transformer-based bearing fault classification toolkit"};
    app.require_subcommand(1);

    CliArgs args;
    const std::vector<std::string> names = {"pretrain",        "finetune",      "eval",
                                            "experiment",      "augment-preview",
                                            "tokenize-dump",   "attn-dump"};
    std::vector<CLI::App*> subs;
    for (const auto& n : names) {
        CLI::App* s = app.add_subcommand(n);
        s->add_option("--config", args.config, "JSON config file")->required();
        s->add_option("--seed", args.seed, "Override the config seed");
        s->add_option("--out", args.out, "Output root directory");
        subs.push_back(s);
    }

    CLI11_PARSE(app, argc, argv);

    try {
        const std::string cmd = app.get_subcommands().front()->get_name();
        if (cmd == "pretrain") return cmd_pretrain(args);
        if (cmd == "finetune") return cmd_experiment(args, /*force_pretrained=*/true);
        if (cmd == "experiment") return cmd_experiment(args, false);
        if (cmd == "eval") return cmd_eval(args);
        if (cmd == "augment-preview") return cmd_augment_preview(args);
        if (cmd == "tokenize-dump") return cmd_tokenize_dump(args);
        if (cmd == "attn-dump") return cmd_attn_dump(args);
        std::cerr << "unknown subcommand\n";
        return 2;
    } catch (const ff::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const ff::TrainingError& e) {
        std::cerr << "training aborted: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
