#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "faultformer/experiment.hpp"

using namespace ff;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    fs::path p = fs::temp_directory_path() / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string tiny_synthetic_json(const fs::path& out) {
    std::ostringstream s;
    s << R"({
      "experiment": "synthetic",
      "synthetic": {"n_classes": 2, "per_class": 10, "length": 128, "noise_sigma": 0.05},
      "tokenizer": {"id": "fourier", "fourier_modes": 8},
      "model": "transformer",
      "encoder": {"model_dim": 16, "n_heads": 4, "n_layers": 1, "dropout": 0.0},
      "epochs": 2, "n_seeds": 1, "batch_size": 8, "seed": 5,
      "lr": {"warmup_steps": 4, "min": 1e-4, "max": 1e-3},
      "output_dir": ")"
      << out.generic_string() << R"("
    })";
    return s.str();
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("config parsing: defaults and validation") {
    ExperimentConfig c = ExperimentConfig::from_json("{}");
    CHECK(c.experiment == "synthetic");
    CHECK(c.epochs == 40);
    CHECK(c.n_seeds == 3);
    CHECK(c.batch_size == 16);
    CHECK(c.tokenizer.id == TokenizerId::fourier);
    CHECK_THROWS_AS(ExperimentConfig::from_json("not json"), ConfigError);
    CHECK_THROWS_AS(ExperimentConfig::from_json(R"({"experiment":"bogus"})"), ConfigError);
    CHECK_THROWS_AS(ExperimentConfig::from_json(R"({"model":"rnn"})"), ConfigError);
    CHECK_THROWS_AS(ExperimentConfig::from_json(R"({"augment_probability": 1.5})"), ConfigError);
    CHECK_THROWS_AS(ExperimentConfig::from_json(R"({"epochs": 0})"), ConfigError);
}

TEST_CASE("config paths resolve relative to the config file") {
    fs::path dir = fresh_dir("ffx_relpath");
    std::ofstream(dir / "cfg.json") << R"({"experiment":"baseline","dataset":"data/d.sigb"})";
    ExperimentConfig c = ExperimentConfig::from_json_file((dir / "cfg.json").string());
    CHECK(fs::path(c.dataset_path).is_absolute());
    CHECK(c.dataset_path == (dir / "data" / "d.sigb").lexically_normal().string());
}

TEST_CASE("config JSON round-trip") {
    ExperimentConfig c = ExperimentConfig::from_json(
        R"({"experiment":"scarcity","scarcity_n":200,"model":"cnn",
            "tokenizer":{"id":"constant","constant_d":8},
            "augment_probability":0.9,"seed":11})");
    ExperimentConfig back = ExperimentConfig::from_json(c.to_json());
    CHECK(back.experiment == "scarcity");
    CHECK(back.scarcity_n == 200);
    CHECK(back.model == ModelKind::cnn);
    CHECK(back.tokenizer.id == TokenizerId::constant);
    CHECK(back.augment_probability == 0.9);
    CHECK(back.seed == 11);
}

TEST_CASE("missing dataset file is a config error") {
    ExperimentConfig c = ExperimentConfig::from_json(
        R"({"experiment":"baseline","dataset":"/nonexistent/x.sigb"})");
    CHECK_THROWS_AS(run_experiment(c), ConfigError);
}

TEST_CASE("run_experiment writes the full artifact set") {
    fs::path out = fresh_dir("ffx_artifacts");
    ExperimentConfig c = ExperimentConfig::from_json(tiny_synthetic_json(out));
    ResultTable t = run_experiment(c);
    REQUIRE(t.rows.size() == 1);
    CHECK(t.rows[0].model == "transformer");
    CHECK(t.rows[0].epoch == 2);
    const fs::path run = out / "synthetic_transformer_fourier_p0";
    for (const char* f : {"config.json", "split.json", "metrics_seed0.csv",
                          "checkpoint_seed0.ffck", "result.csv", "accuracy.svg"})
        CHECK(fs::exists(run / f));
    // Metrics CSV carries the expected header and one row per epoch.
    std::istringstream csv(slurp(run / "metrics_seed0.csv"));
    std::string line;
    std::getline(csv, line);
    CHECK(line == "epoch,split,loss,accuracy,lr");
    int rows = 0;
    while (std::getline(csv, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 2);
}

TEST_CASE("re-running an experiment reproduces the metrics CSV byte-for-byte") {
    fs::path out = fresh_dir("ffx_determinism");
    ExperimentConfig c = ExperimentConfig::from_json(tiny_synthetic_json(out));
    run_experiment(c);
    const fs::path run = out / "synthetic_transformer_fourier_p0";
    const std::string first = slurp(run / "metrics_seed0.csv");
    const std::string first_ckpt = slurp(run / "checkpoint_seed0.ffck");
    run_experiment(c);
    CHECK(slurp(run / "metrics_seed0.csv") == first);
    CHECK(slurp(run / "checkpoint_seed0.ffck") == first_ckpt);
    // A different seed changes the metrics.
    c.seed = 6;
    run_experiment(c);
    CHECK(slurp(run / "metrics_seed0.csv") != first);
}

TEST_CASE("the FAULTFORMER_OUT env var overrides the config output root") {
    fs::path cfg_out = fresh_dir("ffx_env_cfg");
    fs::path env_out = fresh_dir("ffx_env_root");
    ExperimentConfig c = ExperimentConfig::from_json(tiny_synthetic_json(cfg_out));
    setenv("FAULTFORMER_OUT", env_out.c_str(), 1);
    run_experiment(c);
    unsetenv("FAULTFORMER_OUT");
    CHECK(fs::exists(env_out / "synthetic_transformer_fourier_p0" / "result.csv"));
    CHECK(!fs::exists(cfg_out / "synthetic_transformer_fourier_p0"));
}

TEST_CASE("baselines require constant-8 tokens") {
    fs::path out = fresh_dir("ffx_baseline_tok");
    ExperimentConfig c = ExperimentConfig::from_json(tiny_synthetic_json(out));
    c.model = ModelKind::cnn;  // tokenizer still fourier
    CHECK_THROWS_AS(run_experiment(c), ConfigError);
}

TEST_CASE("compare_models enforces a shared split and sorts the grid") {
    fs::path out = fresh_dir("ffx_compare");
    ExperimentConfig a = ExperimentConfig::from_json(tiny_synthetic_json(out));
    ExperimentConfig b = a;
    b.seed = 99;
    CHECK_THROWS_AS(compare_models({a, b}), ConfigError);
    b = a;
    b.augment_probability = 0.5;
    // Length-128 signals need a cutout range that fits.
    b.cutout_window_lo = 10;
    b.cutout_window_hi = 30;
    ResultTable t = compare_models({b, a});  // deliberately unsorted input
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[0].augment_p == 0.0);
    CHECK(t.rows[1].augment_p == 0.5);
    CHECK_THROWS_AS(compare_models({}), ConfigError);
}

TEST_CASE("accuracy SVG is a well-formed deterministic document") {
    ResultTable t;
    t.rows = {{"transformer", "fourier", 0.9, 1, 0.4},
              {"transformer", "fourier", 0.9, 5, 0.8},
              {"cnn", "constant", 0.0, 1, 0.3},
              {"cnn", "constant", 0.0, 5, 0.6}};
    const std::string svg = render_accuracy_svg(t);
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("</svg>") != std::string::npos);
    CHECK(svg.find("polyline") != std::string::npos);
    CHECK(render_accuracy_svg(t) == svg);
}

TEST_CASE("run_pretrain produces a loadable checkpoint") {
    fs::path out = fresh_dir("ffx_pretrain");
    ExperimentConfig c = ExperimentConfig::from_json(tiny_synthetic_json(out));
    c.pretrain_epochs = 2;
    const std::string ckpt = (out / "pre.ffck").string();
    std::vector<double> losses = run_pretrain(c, ckpt);
    CHECK(losses.size() == 2);
    LoadedCheckpoint back = load_checkpoint(ckpt);
    CHECK(back.tok.id == TokenizerId::fourier);
    CHECK(back.state.cfg.model_dim == 16);
}

TEST_CASE("result table CSV layout") {
    ResultTable t;
    t.rows = {{"mlp", "constant", 0.9, 40, 0.8125}};
    CHECK(t.to_csv() == "model,tokenizer,augment_p,epoch,accuracy\nmlp,constant,0.9,40,0.8125\n");
}
