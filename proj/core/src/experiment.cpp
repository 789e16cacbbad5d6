#include "faultformer/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <sstream>

#include <json.hpp>

namespace ff {

using nlohmann::json;
namespace fs = std::filesystem;

std::string model_kind_name(ModelKind k) {
    switch (k) {
        case ModelKind::transformer: return "transformer";
        case ModelKind::transformer_pretrained: return "transformer_pretrained";
        case ModelKind::cnn: return "cnn";
        case ModelKind::mlp: return "mlp";
    }
    throw std::logic_error("model_kind_name: bad kind");
}

ModelKind model_kind_from_name(const std::string& name) {
    if (name == "transformer") return ModelKind::transformer;
    if (name == "transformer_pretrained") return ModelKind::transformer_pretrained;
    if (name == "cnn") return ModelKind::cnn;
    if (name == "mlp") return ModelKind::mlp;
    throw ConfigError("unknown model '" + name + "'");
}

namespace {

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    return j.at(key).get<T>();
}

std::string resolve_path(const std::string& p, const std::string& base) {
    if (p.empty()) return p;
    fs::path fp(p);
    if (fp.is_absolute()) return p;
    return (fs::path(base) / fp).lexically_normal().string();
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str(), fs::path(path).parent_path().string());
}

ExperimentConfig ExperimentConfig::from_json(const std::string& text,
                                             const std::string& base_dir) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    try {
        ExperimentConfig c;
        c.experiment = get_or<std::string>(j, "experiment", c.experiment);
        const std::set<std::string> known = {"baseline", "scarcity", "task_adapt",
                                             "dataset_adapt", "synthetic"};
        if (!known.count(c.experiment))
            throw ConfigError("unknown experiment '" + c.experiment + "'");
        c.dataset_path = resolve_path(get_or<std::string>(j, "dataset", ""), base_dir);
        c.finetune_dataset_path =
            resolve_path(get_or<std::string>(j, "finetune_dataset", ""), base_dir);
        if (j.contains("synthetic")) {
            const json& s = j.at("synthetic");
            c.synthetic.n_classes = get_or<int>(s, "n_classes", c.synthetic.n_classes);
            c.synthetic.per_class = get_or<std::size_t>(s, "per_class", c.synthetic.per_class);
            c.synthetic.length = get_or<std::size_t>(s, "length", c.synthetic.length);
            c.synthetic.noise_sigma = get_or<double>(s, "noise_sigma", c.synthetic.noise_sigma);
        }
        if (j.contains("tokenizer")) {
            const json& t = j.at("tokenizer");
            c.tokenizer.id = tokenizer_from_name(get_or<std::string>(t, "id", "fourier"));
            c.tokenizer.constant_d = get_or<std::size_t>(t, "constant_d", c.tokenizer.constant_d);
            c.tokenizer.fourier.n_modes =
                get_or<std::size_t>(t, "fourier_modes", c.tokenizer.fourier.n_modes);
            c.tokenizer.fourier.normalize_freq =
                get_or<bool>(t, "normalize_freq", c.tokenizer.fourier.normalize_freq);
        }
        c.augment_probability = get_or<double>(j, "augment_probability", c.augment_probability);
        if (c.augment_probability < 0.0 || c.augment_probability > 1.0)
            throw ConfigError("augment_probability must be in [0,1]");
        c.cutout_window_lo = get_or<std::int64_t>(j, "cutout_window_lo", c.cutout_window_lo);
        c.cutout_window_hi = get_or<std::int64_t>(j, "cutout_window_hi", c.cutout_window_hi);
        c.model = model_kind_from_name(get_or<std::string>(j, "model", "transformer"));
        c.checkpoint_path = resolve_path(get_or<std::string>(j, "checkpoint", ""), base_dir);
        if (j.contains("encoder")) {
            const json& e = j.at("encoder");
            c.encoder.model_dim = get_or<std::size_t>(e, "model_dim", c.encoder.model_dim);
            c.encoder.n_heads = get_or<std::size_t>(e, "n_heads", c.encoder.n_heads);
            c.encoder.n_layers = get_or<std::size_t>(e, "n_layers", c.encoder.n_layers);
            c.encoder.dropout = get_or<double>(e, "dropout", c.encoder.dropout);
            c.encoder.ff_hidden_dim =
                get_or<std::size_t>(e, "ff_hidden_dim", c.encoder.ff_hidden_dim);
            c.encoder.ff_variant = get_or<std::string>(e, "ff_variant", "plain") == "glu"
                                       ? FfVariant::glu
                                       : FfVariant::plain;
            c.encoder.mlp_embedder = get_or<bool>(e, "mlp_embedder", c.encoder.mlp_embedder);
        }
        c.epochs = get_or<std::size_t>(j, "epochs", c.epochs);
        c.pretrain_epochs = get_or<std::size_t>(j, "pretrain_epochs", c.pretrain_epochs);
        c.scarcity_n = get_or<std::size_t>(j, "scarcity_n", c.scarcity_n);
        c.seed = get_or<std::uint64_t>(j, "seed", c.seed);
        c.n_seeds = get_or<std::size_t>(j, "n_seeds", c.n_seeds);
        c.batch_size = get_or<std::size_t>(j, "batch_size", c.batch_size);
        if (j.contains("lr")) {
            const json& l = j.at("lr");
            c.sched.warmup_steps = get_or<std::size_t>(l, "warmup_steps", c.sched.warmup_steps);
            c.sched.min_lr = get_or<double>(l, "min", c.sched.min_lr);
            c.sched.max_lr = get_or<double>(l, "max", c.sched.max_lr);
        }
        if (j.contains("mask")) {
            const json& m = j.at("mask");
            c.mask.mask_p = get_or<double>(m, "mask_p", c.mask.mask_p);
            c.mask.zero_frac = get_or<double>(m, "zero_frac", c.mask.zero_frac);
            c.mask.random_frac = get_or<double>(m, "random_frac", c.mask.random_frac);
        }
        c.report_epochs = get_or<std::vector<std::size_t>>(j, "report_epochs", {});
        c.output_dir = resolve_path(get_or<std::string>(j, "output_dir", "runs"), base_dir);
        if (c.model == ModelKind::transformer_pretrained && c.checkpoint_path.empty() &&
            c.experiment == "baseline")
            throw ConfigError("baseline experiment has no pretraining pool; "
                              "transformer_pretrained needs a checkpoint path");
        if (c.epochs == 0 || c.n_seeds == 0 || c.batch_size == 0)
            throw ConfigError("epochs, n_seeds, and batch_size must be positive");
        return c;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad config field: ") + e.what());
    }
}

std::string ExperimentConfig::to_json() const {
    json j;
    j["experiment"] = experiment;
    j["dataset"] = dataset_path;
    j["finetune_dataset"] = finetune_dataset_path;
    j["synthetic"] = {{"n_classes", synthetic.n_classes},
                      {"per_class", synthetic.per_class},
                      {"length", synthetic.length},
                      {"noise_sigma", synthetic.noise_sigma}};
    j["tokenizer"] = {{"id", tokenizer_name(tokenizer.id)},
                      {"constant_d", tokenizer.constant_d},
                      {"fourier_modes", tokenizer.fourier.n_modes},
                      {"normalize_freq", tokenizer.fourier.normalize_freq}};
    j["augment_probability"] = augment_probability;
    j["cutout_window_lo"] = cutout_window_lo;
    j["cutout_window_hi"] = cutout_window_hi;
    j["model"] = model_kind_name(model);
    j["checkpoint"] = checkpoint_path;
    j["encoder"] = {{"model_dim", encoder.model_dim},
                    {"n_heads", encoder.n_heads},
                    {"n_layers", encoder.n_layers},
                    {"dropout", encoder.dropout},
                    {"ff_hidden_dim", encoder.ff_hidden_dim},
                    {"ff_variant", encoder.ff_variant == FfVariant::glu ? "glu" : "plain"},
                    {"mlp_embedder", encoder.mlp_embedder}};
    j["epochs"] = epochs;
    j["pretrain_epochs"] = pretrain_epochs;
    j["scarcity_n"] = scarcity_n;
    j["seed"] = seed;
    j["n_seeds"] = n_seeds;
    j["batch_size"] = batch_size;
    j["lr"] = {{"warmup_steps", sched.warmup_steps},
               {"min", sched.min_lr},
               {"max", sched.max_lr}};
    j["mask"] = {{"mask_p", mask.mask_p},
                 {"zero_frac", mask.zero_frac},
                 {"random_frac", mask.random_frac}};
    j["report_epochs"] = report_epochs;
    j["output_dir"] = output_dir;
    return j.dump(2);
}

std::string ResultTable::to_csv() const {
    std::string out = "model,tokenizer,augment_p,epoch,accuracy\n";
    char buf[160];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%s,%s,%.10g,%zu,%.10g\n", r.model.c_str(),
                      r.tokenizer.c_str(), r.augment_p, r.epoch, r.accuracy);
        out += buf;
    }
    return out;
}

namespace {

struct PreparedData {
    Dataset pretrain_ds;  // dataset the pretrain indices refer to
    Dataset train_ds;     // dataset the train/test indices refer to
    bool two_datasets = false;
    SplitPlan plan;
};

PreparedData prepare_data(const ExperimentConfig& cfg) {
    PreparedData d;
    if (cfg.experiment == "synthetic") {
        d.train_ds = synth_generate(cfg.synthetic.n_classes, cfg.synthetic.per_class,
                                    cfg.synthetic.length, cfg.synthetic.noise_sigma, cfg.seed);
        const std::size_t test_pc = std::max<std::size_t>(1, cfg.synthetic.per_class / 5);
        stratified_split(d.train_ds, cfg.synthetic.per_class - test_pc, test_pc, cfg.seed,
                         d.plan.train_indices, d.plan.test_indices);
        // Pretraining reuses the training pool, unlabeled.
        d.plan.pretrain_indices = d.plan.train_indices;
        for (int c = 0; c < d.train_ds.n_classes; ++c) {
            d.plan.allowed_classes_pretrain.insert(c);
            d.plan.allowed_classes_train.insert(c);
        }
        return d;
    }
    if (cfg.dataset_path.empty())
        throw ConfigError("experiment '" + cfg.experiment + "' needs a dataset path");
    if (!fs::exists(cfg.dataset_path))
        throw ConfigError("dataset file '" + cfg.dataset_path + "' does not exist");
    Dataset ds = load_bundle(cfg.dataset_path);
    SplitSpec spec;
    spec.scarcity_n = cfg.scarcity_n;
    if (cfg.experiment == "baseline") spec.kind = ExperimentKind::baseline;
    else if (cfg.experiment == "scarcity") spec.kind = ExperimentKind::scarcity;
    else if (cfg.experiment == "task_adapt") spec.kind = ExperimentKind::task_adapt;
    else spec.kind = ExperimentKind::dataset_adapt;
    if (spec.kind == ExperimentKind::dataset_adapt) {
        if (cfg.finetune_dataset_path.empty())
            throw ConfigError("dataset_adapt needs a finetune_dataset path");
        if (!fs::exists(cfg.finetune_dataset_path))
            throw ConfigError("dataset file '" + cfg.finetune_dataset_path +
                              "' does not exist");
        Dataset ft = load_bundle(cfg.finetune_dataset_path);
        d.plan = make_split(ds, spec, cfg.seed, &ft);
        d.pretrain_ds = std::move(ds);
        d.train_ds = std::move(ft);
        d.two_datasets = true;
    } else {
        d.plan = make_split(ds, spec, cfg.seed);
        d.train_ds = std::move(ds);
    }
    return d;
}

void check_disjoint(const SplitPlan& plan, bool two_datasets) {
    std::set<std::size_t> test(plan.test_indices.begin(), plan.test_indices.end());
    for (auto i : plan.train_indices)
        if (test.count(i)) throw std::logic_error("split check failed: train overlaps test");
    if (!two_datasets)
        for (auto i : plan.pretrain_indices)
            if (test.count(i))
                throw std::logic_error("split check failed: pretrain overlaps test");
}

std::vector<std::size_t> default_report_epochs(const ExperimentConfig& cfg) {
    if (!cfg.report_epochs.empty()) return cfg.report_epochs;
    if (cfg.experiment == "task_adapt") return {1, 2, 5, 20, 40};
    if (cfg.experiment == "dataset_adapt") return {1, 2, 5, 10, 20};
    return {cfg.epochs};
}

std::unique_ptr<SignalClassifier> build_model(const ExperimentConfig& cfg,
                                              const PreparedData& d, std::uint64_t run_seed,
                                              const TrainOptions& opts) {
    const auto n_classes = static_cast<std::size_t>(d.train_ds.n_classes);
    Rng init_rng = Rng::stream(run_seed, 0x11);
    switch (cfg.model) {
        case ModelKind::cnn:
        case ModelKind::mlp: {
            if (cfg.tokenizer.id != TokenizerId::constant || cfg.tokenizer.constant_d != 8)
                throw ConfigError("cnn/mlp baselines require the constant tokenizer with d=8");
            if (cfg.model == ModelKind::cnn)
                return std::make_unique<CnnClassifier>(CnnBaseline::init(n_classes, init_rng));
            return std::make_unique<MlpClassifier>(MlpBaseline::init(n_classes, init_rng));
        }
        case ModelKind::transformer: {
            EncoderConfig ec = cfg.encoder;
            ec.input_dim = cfg.tokenizer.token_dim();
            ec.n_classes = n_classes;
            EncoderState st = EncoderState::init(ec, init_rng);
            std::optional<CnnTokenizer> ct;
            if (cfg.tokenizer.id == TokenizerId::cnn) ct = CnnTokenizer::init(init_rng);
            return std::make_unique<TransformerClassifier>(std::move(st), cfg.tokenizer,
                                                           std::move(ct));
        }
        case ModelKind::transformer_pretrained: {
            LoadedCheckpoint pre;
            if (!cfg.checkpoint_path.empty()) {
                if (!fs::exists(cfg.checkpoint_path))
                    throw ConfigError("checkpoint '" + cfg.checkpoint_path +
                                      "' does not exist");
                pre = load_checkpoint(cfg.checkpoint_path);
                if (pre.tok.id != cfg.tokenizer.id ||
                    pre.state.cfg.input_dim != cfg.tokenizer.token_dim())
                    throw ConfigError("checkpoint tokenizer (" + tokenizer_name(pre.tok.id) +
                                      ", input_dim " +
                                      std::to_string(pre.state.cfg.input_dim) +
                                      ") does not match configured tokenizer (" +
                                      tokenizer_name(cfg.tokenizer.id) + ", width " +
                                      std::to_string(cfg.tokenizer.token_dim()) + ")");
            } else {
                if (d.plan.pretrain_indices.empty())
                    throw ConfigError("experiment has no pretraining pool and no checkpoint "
                                      "was given");
                EncoderConfig ec = cfg.encoder;
                ec.input_dim = cfg.tokenizer.token_dim();
                ec.n_classes = n_classes;
                Rng pre_rng = Rng::stream(run_seed, 0x12);
                pre.state = EncoderState::init(ec, pre_rng);
                pre.tok = cfg.tokenizer;
                DataView pool{d.two_datasets ? &d.pretrain_ds : &d.train_ds,
                              d.plan.pretrain_indices};
                TrainOptions popts = opts;
                popts.seed = run_seed ^ 0x9E3779B97F4A7C15ULL;
                pretrain_run(pool, pre.state, cfg.tokenizer, nullptr, popts,
                             cfg.pretrain_epochs);
            }
            Rng head_rng = Rng::stream(run_seed, 0x13);
            EncoderState st = transfer_for_finetune(pre, n_classes, head_rng);
            return std::make_unique<TransformerClassifier>(std::move(st), cfg.tokenizer);
        }
    }
    throw std::logic_error("build_model: bad kind");
}

}  // namespace

ResultTable run_experiment(const ExperimentConfig& cfg) {
    PreparedData d = prepare_data(cfg);
    check_disjoint(d.plan, d.two_datasets);
    const std::vector<std::size_t> grid = default_report_epochs(cfg);

    const char* env_root = std::getenv("FAULTFORMER_OUT");
    fs::path out_root = env_root && *env_root ? fs::path(env_root) : fs::path(cfg.output_dir);
    char tag[160];
    std::snprintf(tag, sizeof(tag), "%s_%s_%s_p%g", cfg.experiment.c_str(),
                  model_kind_name(cfg.model).c_str(), tokenizer_name(cfg.tokenizer.id).c_str(),
                  cfg.augment_probability);
    const fs::path run_dir = out_root / tag;
    fs::create_directories(run_dir);
    {
        std::ofstream(run_dir / "config.json") << cfg.to_json() << "\n";
        std::ofstream(run_dir / "split.json") << d.plan.to_json() << "\n";
    }

    DataView train{&d.train_ds, d.plan.train_indices};
    DataView test{&d.train_ds, d.plan.test_indices};

    std::map<std::size_t, double> acc_sum;
    for (std::size_t s = 0; s < cfg.n_seeds; ++s) {
        const std::uint64_t run_seed = cfg.seed + s;
        TrainOptions opts;
        opts.batch_size = cfg.batch_size;
        opts.sched = cfg.sched;
        const std::size_t steps_per_epoch =
            (train.size() + cfg.batch_size - 1) / cfg.batch_size;
        opts.sched.total_steps =
            std::max(steps_per_epoch * cfg.epochs, opts.sched.warmup_steps + 1);
        opts.mask = cfg.mask;
        opts.augment.probability = cfg.augment_probability;
        opts.augment.cutout_window_lo = cfg.cutout_window_lo;
        opts.augment.cutout_window_hi = cfg.cutout_window_hi;
        opts.augment.rng_seed = run_seed;
        opts.seed = run_seed;

        auto model = build_model(cfg, d, run_seed, opts);
        AdamW opt(model->params(), {});
        std::ofstream metrics(run_dir / ("metrics_seed" + std::to_string(s) + ".csv"));
        metrics << metrics_csv_header() << "\n";
        for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
            const TrainMetrics m = finetune_epoch(train, test, *model, opt, opts, epoch,
                                                  opt.step_count());
            metrics << metrics_csv_row(m, "test") << "\n";
            if (std::find(grid.begin(), grid.end(), epoch) != grid.end())
                acc_sum[epoch] += m.test_accuracy;
        }
        // Final checkpoint: encoder-format for transformers, raw records
        // otherwise.
        const std::string ckpt_path =
            (run_dir / ("checkpoint_seed" + std::to_string(s) + ".ffck")).string();
        if (auto* tc = dynamic_cast<TransformerClassifier*>(model.get())) {
            save_checkpoint(tc->state(), tc->tokenizer(), tc->cnn_tokenizer(), "", ckpt_path);
        } else {
            CheckpointData ck;
            ck.arch_json = std::string("{\"model\":\"") + model_kind_name(cfg.model) + "\"}";
            for (const auto& p : model->params()) {
                std::vector<float> values(p.tensor.size());
                for (std::size_t i = 0; i < values.size(); ++i)
                    values[i] = static_cast<float>(p.tensor.data()[i]);
                ck.records.emplace_back(p.name, p.tensor.shape(), std::move(values));
            }
            write_checkpoint_file(ck, ckpt_path);
        }
    }

    ResultTable table;
    for (const std::size_t e : grid) {
        if (e > cfg.epochs) continue;
        ResultRow row;
        row.model = model_kind_name(cfg.model);
        row.tokenizer = tokenizer_name(cfg.tokenizer.id);
        row.augment_p = cfg.augment_probability;
        row.epoch = e;
        row.accuracy = acc_sum[e] / static_cast<double>(cfg.n_seeds);
        table.rows.push_back(row);
    }
    std::ofstream(run_dir / "result.csv") << table.to_csv();
    std::ofstream(run_dir / "accuracy.svg") << render_accuracy_svg(table);
    return table;
}

std::vector<double> run_pretrain(const ExperimentConfig& cfg, const std::string& out_path) {
    if (cfg.tokenizer.id == TokenizerId::cnn)
        throw ConfigError("masked pretraining supports the constant and fourier tokenizers");
    PreparedData d = prepare_data(cfg);
    if (d.plan.pretrain_indices.empty())
        throw ConfigError("experiment '" + cfg.experiment + "' has no pretraining pool");
    EncoderConfig ec = cfg.encoder;
    ec.input_dim = cfg.tokenizer.token_dim();
    ec.n_classes = static_cast<std::size_t>(d.train_ds.n_classes);
    Rng init_rng = Rng::stream(cfg.seed, 0x12);
    EncoderState state = EncoderState::init(ec, init_rng);
    DataView pool{d.two_datasets ? &d.pretrain_ds : &d.train_ds, d.plan.pretrain_indices};
    TrainOptions opts;
    opts.batch_size = cfg.batch_size;
    opts.sched = cfg.sched;
    const std::size_t steps_per_epoch = (pool.size() + cfg.batch_size - 1) / cfg.batch_size;
    opts.sched.total_steps =
        std::max(steps_per_epoch * cfg.pretrain_epochs, opts.sched.warmup_steps + 1);
    opts.mask = cfg.mask;
    opts.seed = cfg.seed;
    std::vector<double> losses =
        pretrain_run(pool, state, cfg.tokenizer, nullptr, opts, cfg.pretrain_epochs);
    fs::create_directories(fs::path(out_path).parent_path().empty()
                               ? fs::path(".")
                               : fs::path(out_path).parent_path());
    save_checkpoint(state, cfg.tokenizer, nullptr, "", out_path);
    return losses;
}

Dataset load_experiment_dataset(const ExperimentConfig& cfg) {
    PreparedData d = prepare_data(cfg);
    return std::move(d.train_ds);
}

ResultTable compare_models(const std::vector<ExperimentConfig>& cfgs) {
    if (cfgs.empty()) throw ConfigError("compare_models: no configurations");
    for (const auto& c : cfgs) {
        if (c.seed != cfgs[0].seed)
            throw ConfigError("compare_models: all configurations must share the split seed");
        if (c.experiment != cfgs[0].experiment || c.dataset_path != cfgs[0].dataset_path)
            throw ConfigError("compare_models: all configurations must share the experiment "
                              "and dataset");
    }
    ResultTable merged;
    for (const auto& c : cfgs) {
        ResultTable t = run_experiment(c);
        merged.rows.insert(merged.rows.end(), t.rows.begin(), t.rows.end());
    }
    std::sort(merged.rows.begin(), merged.rows.end(), [](const ResultRow& a, const ResultRow& b) {
        if (a.tokenizer != b.tokenizer) return a.tokenizer < b.tokenizer;
        if (a.model != b.model) return a.model < b.model;
        if (a.augment_p != b.augment_p) return a.augment_p < b.augment_p;
        return a.epoch < b.epoch;
    });
    return merged;
}

std::string render_accuracy_svg(const ResultTable& table) {
    const int W = 640, H = 400, ml = 60, mr = 20, mt = 20, mb = 40;
    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
        << "\">\n";
    svg << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
    std::size_t max_epoch = 1;
    for (const auto& r : table.rows) max_epoch = std::max(max_epoch, r.epoch);
    auto x_of = [&](double e) {
        return ml + (W - ml - mr) * (e / static_cast<double>(max_epoch));
    };
    auto y_of = [&](double a) { return mt + (H - mt - mb) * (1.0 - a); };
    svg << "<line x1=\"" << ml << "\" y1=\"" << H - mb << "\" x2=\"" << W - mr << "\" y2=\""
        << H - mb << "\" stroke=\"black\"/>\n";
    svg << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << H - mb
        << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 5; ++i) {
        const double a = i / 5.0;
        svg << "<text x=\"8\" y=\"" << y_of(a) + 4 << "\" font-size=\"12\">" << a
            << "</text>\n";
    }
    svg << "<text x=\"" << (W / 2 - 20) << "\" y=\"" << H - 8
        << "\" font-size=\"12\">epoch</text>\n";
    // One polyline per (model, tokenizer, augment_p) group.
    const std::vector<std::string> palette = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                             "#9467bd", "#8c564b"};
    std::map<std::string, std::vector<const ResultRow*>> groups;
    for (const auto& r : table.rows) {
        char key[160];
        std::snprintf(key, sizeof(key), "%s/%s/p%g", r.model.c_str(), r.tokenizer.c_str(),
                      r.augment_p);
        groups[key].push_back(&r);
    }
    std::size_t gi = 0;
    for (const auto& [key, rows] : groups) {
        svg << "<polyline fill=\"none\" stroke=\"" << palette[gi % palette.size()]
            << "\" stroke-width=\"2\" points=\"";
        for (const auto* r : rows)
            svg << x_of(static_cast<double>(r->epoch)) << "," << y_of(r->accuracy) << " ";
        svg << "\"/>\n";
        svg << "<text x=\"" << ml + 10 << "\" y=\"" << mt + 16 * (gi + 1)
            << "\" font-size=\"12\" fill=\"" << palette[gi % palette.size()] << "\">" << key
            << "</text>\n";
        ++gi;
    }
    svg << "</svg>\n";
    return svg.str();
}

}  // namespace ff
