#include "faultformer/signal.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace ff {

using nlohmann::json;

void Dataset::validate() const {
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples[i];
        if (s.values.size() != window_length)
            throw std::invalid_argument("dataset '" + name + "': sample " + std::to_string(i) +
                                        " has length " + std::to_string(s.values.size()) +
                                        ", expected " + std::to_string(window_length));
        if (s.label && (*s.label < 0 || *s.label >= n_classes))
            throw std::invalid_argument("dataset '" + name + "': sample " + std::to_string(i) +
                                        " has label " + std::to_string(*s.label) +
                                        " outside [0," + std::to_string(n_classes) + ")");
        for (double v : s.values)
            if (!std::isfinite(v))
                throw std::invalid_argument("dataset '" + name + "': non-finite value in sample " +
                                            std::to_string(i));
    }
}

std::string SplitPlan::to_json() const {
    json j;
    j["pretrain_indices"] = pretrain_indices;
    j["train_indices"] = train_indices;
    j["test_indices"] = test_indices;
    j["allowed_classes_pretrain"] = std::vector<int>(allowed_classes_pretrain.begin(),
                                                    allowed_classes_pretrain.end());
    j["allowed_classes_train"] = std::vector<int>(allowed_classes_train.begin(),
                                                 allowed_classes_train.end());
    return j.dump(2);
}

std::vector<SignalSample> window_recording(const std::vector<double>& raw,
                                           std::size_t window_length, std::size_t trim,
                                           double sample_rate_hz) {
    const std::size_t block = window_length + 2 * trim;
    if (raw.size() < block)
        throw std::invalid_argument("window_recording: raw length " + std::to_string(raw.size()) +
                                    " shorter than one block of " + std::to_string(block));
    const std::size_t n = raw.size() / block;
    std::vector<SignalSample> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        SignalSample s;
        s.sample_rate_hz = sample_rate_hz;
        const std::size_t start = i * block + trim;
        s.values.assign(raw.begin() + static_cast<std::ptrdiff_t>(start),
                        raw.begin() + static_cast<std::ptrdiff_t>(start + window_length));
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<SignalSample> split_paderborn(const std::vector<double>& raw, double seconds,
                                          double rate_hz, std::size_t n_splits) {
    const auto total = static_cast<std::size_t>(seconds * rate_hz);
    if (raw.size() < total)
        throw std::invalid_argument("split_paderborn: signal has " + std::to_string(raw.size()) +
                                    " points, need " + std::to_string(total));
    if (total % n_splits != 0)
        throw std::invalid_argument("split_paderborn: " + std::to_string(total) +
                                    " points not divisible into " + std::to_string(n_splits));
    const std::size_t w = total / n_splits;
    std::vector<SignalSample> out;
    out.reserve(n_splits);
    for (std::size_t i = 0; i < n_splits; ++i) {
        SignalSample s;
        s.sample_rate_hz = rate_hz;
        s.values.assign(raw.begin() + static_cast<std::ptrdiff_t>(i * w),
                        raw.begin() + static_cast<std::ptrdiff_t>((i + 1) * w));
        out.push_back(std::move(s));
    }
    return out;
}

namespace {

// Per-class index pools, seeded shuffle within each class.
std::map<int, std::vector<std::size_t>> shuffled_class_pools(const Dataset& ds,
                                                             std::uint64_t seed) {
    std::map<int, std::vector<std::size_t>> pools;
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
        if (!ds.samples[i].label)
            throw std::invalid_argument("split: sample " + std::to_string(i) + " is unlabeled");
        pools[*ds.samples[i].label].push_back(i);
    }
    for (auto& [c, pool] : pools) {
        Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(c));
        shuffle(pool, rng);
    }
    return pools;
}

void require_pool(const std::map<int, std::vector<std::size_t>>& pools, int c, std::size_t need) {
    auto it = pools.find(c);
    const std::size_t have = it == pools.end() ? 0 : it->second.size();
    if (have < need)
        throw std::invalid_argument("split: class " + std::to_string(c) + " has " +
                                    std::to_string(have) + " samples, need " +
                                    std::to_string(need));
}

}  // namespace

void stratified_split(const Dataset& ds, std::size_t train_per_class, std::size_t test_per_class,
                      std::uint64_t seed, std::vector<std::size_t>& train_out,
                      std::vector<std::size_t>& test_out) {
    auto pools = shuffled_class_pools(ds, seed);
    for (int c = 0; c < ds.n_classes; ++c)
        require_pool(pools, c, train_per_class + test_per_class);
    train_out.clear();
    test_out.clear();
    for (int c = 0; c < ds.n_classes; ++c) {
        const auto& pool = pools[c];
        train_out.insert(train_out.end(), pool.begin(),
                         pool.begin() + static_cast<std::ptrdiff_t>(train_per_class));
        test_out.insert(test_out.end(),
                        pool.begin() + static_cast<std::ptrdiff_t>(train_per_class),
                        pool.begin() +
                            static_cast<std::ptrdiff_t>(train_per_class + test_per_class));
    }
}

SplitPlan make_split(const Dataset& ds, const SplitSpec& spec, std::uint64_t seed,
                     const Dataset* finetune_ds) {
    SplitPlan plan;
    auto all_classes = [](const Dataset& d) {
        std::set<int> s;
        for (int c = 0; c < d.n_classes; ++c) s.insert(c);
        return s;
    };
    switch (spec.kind) {
        case ExperimentKind::baseline: {
            // 2240 train / 560 test stratified: 224/56 per class over 10 classes.
            if (ds.n_classes != 10)
                throw std::invalid_argument("baseline split expects 10 classes, got " +
                                            std::to_string(ds.n_classes));
            stratified_split(ds, 224, 56, seed, plan.train_indices, plan.test_indices);
            plan.allowed_classes_train = all_classes(ds);
            break;
        }
        case ExperimentKind::scarcity: {
            const std::size_t n = spec.scarcity_n;
            if (n != 100 && n != 200 && n != 400)
                throw std::invalid_argument("scarcity split: n must be 100, 200, or 400");
            auto pools = shuffled_class_pools(ds, seed);
            const auto nc = static_cast<std::size_t>(ds.n_classes);
            // Stratify train and test; remainders go to the lowest classes.
            std::vector<std::size_t> train_c(nc, n / nc), test_c(nc, 100 / nc);
            for (std::size_t i = 0; i < n % nc; ++i) ++train_c[i];
            for (std::size_t i = 0; i < 100 % nc; ++i) ++test_c[i];
            std::vector<std::size_t> rest;
            for (int c = 0; c < ds.n_classes; ++c) {
                const auto uc = static_cast<std::size_t>(c);
                require_pool(pools, c, train_c[uc] + test_c[uc]);
                const auto& pool = pools[c];
                std::size_t off = 0;
                for (std::size_t i = 0; i < train_c[uc]; ++i)
                    plan.train_indices.push_back(pool[off++]);
                for (std::size_t i = 0; i < test_c[uc]; ++i)
                    plan.test_indices.push_back(pool[off++]);
                rest.insert(rest.end(), pool.begin() + static_cast<std::ptrdiff_t>(off),
                            pool.end());
            }
            if (rest.size() < 2000)
                throw std::invalid_argument("scarcity split: only " + std::to_string(rest.size()) +
                                            " samples left for the 2000-sample pretrain pool");
            Rng rng = Rng::stream(seed, 0xC0FFEE);
            shuffle(rest, rng);
            plan.pretrain_indices.assign(rest.begin(), rest.begin() + 2000);
            plan.allowed_classes_pretrain = all_classes(ds);
            plan.allowed_classes_train = all_classes(ds);
            break;
        }
        case ExperimentKind::task_adapt: {
            if (ds.n_classes != 10)
                throw std::invalid_argument("task_adapt split expects 10 classes, got " +
                                            std::to_string(ds.n_classes));
            const std::set<int> heldout = {3, 6, 9};
            auto pools = shuffled_class_pools(ds, seed);
            for (int c = 0; c < ds.n_classes; ++c) {
                if (heldout.count(c)) {
                    require_pool(pools, c, 224 + 56);
                    const auto& pool = pools[c];
                    plan.train_indices.insert(plan.train_indices.end(), pool.begin(),
                                              pool.begin() + 224);
                    plan.test_indices.insert(plan.test_indices.end(), pool.begin() + 224,
                                             pool.begin() + 280);
                    plan.allowed_classes_train.insert(c);
                } else {
                    plan.pretrain_indices.insert(plan.pretrain_indices.end(), pools[c].begin(),
                                                 pools[c].end());
                    plan.allowed_classes_pretrain.insert(c);
                }
            }
            break;
        }
        case ExperimentKind::dataset_adapt: {
            if (!finetune_ds)
                throw std::invalid_argument("dataset_adapt split needs a fine-tuning dataset");
            if (finetune_ds->samples.size() != 58000)
                throw std::invalid_argument("dataset_adapt split expects 58000 fine-tune "
                                            "samples, got " +
                                            std::to_string(finetune_ds->samples.size()));
            for (std::size_t i = 0; i < ds.samples.size(); ++i)
                plan.pretrain_indices.push_back(i);
            plan.allowed_classes_pretrain = all_classes(ds);
            // Exact 46400/11600 via per-class proportional shares with
            // largest-remainder rounding.
            auto pools = shuffled_class_pools(*finetune_ds, seed);
            const std::size_t test_total = 11600;
            std::vector<std::pair<double, int>> rema;
            std::map<int, std::size_t> test_c;
            std::size_t assigned = 0;
            for (const auto& [c, pool] : pools) {
                const double exact = static_cast<double>(pool.size()) * test_total / 58000.0;
                test_c[c] = static_cast<std::size_t>(exact);
                assigned += test_c[c];
                rema.push_back({exact - std::floor(exact), -c});
            }
            std::sort(rema.rbegin(), rema.rend());
            for (std::size_t i = 0; i < test_total - assigned; ++i) ++test_c[-rema[i].second];
            for (const auto& [c, pool] : pools) {
                const std::size_t tc = test_c[c];
                if (pool.size() < tc)
                    throw std::invalid_argument("dataset_adapt split: class " +
                                                std::to_string(c) + " too small");
                plan.test_indices.insert(plan.test_indices.end(), pool.begin(),
                                         pool.begin() + static_cast<std::ptrdiff_t>(tc));
                plan.train_indices.insert(plan.train_indices.end(),
                                          pool.begin() + static_cast<std::ptrdiff_t>(tc),
                                          pool.end());
                plan.allowed_classes_train.insert(c);
            }
            break;
        }
    }
    return plan;
}

Dataset synth_generate(int n_classes, std::size_t per_class, std::size_t length,
                       double noise_sigma, std::uint64_t seed) {
    if (n_classes < 2) throw std::invalid_argument("synth_generate: need at least 2 classes");
    if (noise_sigma < 0.0) throw std::invalid_argument("synth_generate: negative noise sigma");
    Dataset ds;
    ds.n_classes = n_classes;
    ds.window_length = length;
    ds.name = "synthetic";
    const double L = static_cast<double>(length);
    for (int c = 0; c < n_classes; ++c) {
        const std::size_t base_bin = 5 + 7 * static_cast<std::size_t>(c);
        if (base_bin >= length / 2)
            throw std::invalid_argument("synth_generate: class " + std::to_string(c) +
                                        " bin exceeds Nyquist for length " +
                                        std::to_string(length));
        for (std::size_t k = 0; k < per_class; ++k) {
            const std::uint64_t idx = static_cast<std::uint64_t>(c) * per_class + k;
            Rng rng = Rng::stream(seed, idx);
            const double phase = rng.uniform(0.0, 2.0 * M_PI);
            // One harmonic of the base bin, aliasing-safe.
            std::size_t mult = static_cast<std::size_t>(rng.uniform_int(2, 4));
            while (mult > 2 && mult * base_bin >= length / 2) --mult;
            const bool harmonic_ok = mult * base_bin < length / 2;
            const double h_amp = rng.uniform(0.1, 0.5);
            const double h_phase = rng.uniform(0.0, 2.0 * M_PI);
            SignalSample s;
            s.label = c;
            s.sample_rate_hz = L;
            s.values.resize(length);
            for (std::size_t t = 0; t < length; ++t) {
                const double tt = static_cast<double>(t);
                double v = std::sin(2.0 * M_PI * static_cast<double>(base_bin) * tt / L + phase);
                if (harmonic_ok)
                    v += h_amp * std::sin(2.0 * M_PI * static_cast<double>(mult * base_bin) * tt /
                                              L +
                                          h_phase);
                if (noise_sigma > 0.0) v += rng.normal(0.0, noise_sigma);
                s.values[t] = v;
            }
            ds.samples.push_back(std::move(s));
        }
    }
    ds.validate();
    return ds;
}

// --- SIGB1 container -----------------------------------------------------

namespace {

constexpr char kBundleMagic[5] = {'S', 'I', 'G', 'B', '1'};

void put_u32(std::ostream& os, std::uint32_t v) {
    char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                 static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
    os.write(b, 4);
}

void put_f32(std::ostream& os, float f) {
    std::uint32_t v;
    std::memcpy(&v, &f, 4);
    put_u32(os, v);
}

struct Reader {
    std::ifstream in;
    std::size_t offset = 0;
    std::string path;

    void read(char* dst, std::size_t n, const char* what) {
        in.read(dst, static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in.gcount()) != n)
            throw std::runtime_error("bundle '" + path + "': truncated while reading " + what +
                                     " at byte offset " + std::to_string(offset));
        offset += n;
    }

    std::uint32_t u32(const char* what) {
        unsigned char b[4];
        read(reinterpret_cast<char*>(b), 4, what);
        return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
               (static_cast<std::uint32_t>(b[2]) << 16) |
               (static_cast<std::uint32_t>(b[3]) << 24);
    }

    float f32(const char* what) {
        const std::uint32_t v = u32(what);
        float f;
        std::memcpy(&f, &v, 4);
        return f;
    }
};

}  // namespace

void save_bundle(const Dataset& ds, const std::string& path) {
    if (ds.samples.empty()) throw std::invalid_argument("save_bundle: empty dataset");
    ds.validate();
    bool has_labels = true;
    for (const auto& s : ds.samples) has_labels = has_labels && s.label.has_value();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_bundle: cannot open '" + path + "'");
    out.write(kBundleMagic, 5);
    json header = {{"name", ds.name},
                   {"n_samples", ds.samples.size()},
                   {"window_length", ds.window_length},
                   {"sample_rate_hz", ds.samples[0].sample_rate_hz},
                   {"n_classes", ds.n_classes},
                   {"has_labels", has_labels}};
    const std::string hs = header.dump();
    put_u32(out, static_cast<std::uint32_t>(hs.size()));
    out.write(hs.data(), static_cast<std::streamsize>(hs.size()));
    for (const auto& s : ds.samples)
        for (double v : s.values) put_f32(out, static_cast<float>(v));
    if (has_labels)
        for (const auto& s : ds.samples) {
            const char b = static_cast<char>(*s.label);
            out.write(&b, 1);
        }
    if (!out) throw std::runtime_error("save_bundle: write failed for '" + path + "'");
}

Dataset load_bundle(const std::string& path) {
    Reader r;
    r.path = path;
    r.in.open(path, std::ios::binary);
    if (!r.in) throw std::runtime_error("load_bundle: cannot open '" + path + "'");
    char magic[5];
    r.read(magic, 5, "magic");
    if (std::memcmp(magic, kBundleMagic, 5) != 0)
        throw std::runtime_error("bundle '" + path + "': bad magic at byte offset 0");
    const std::uint32_t hlen = r.u32("header length");
    std::string hs(hlen, '\0');
    r.read(hs.data(), hlen, "header");
    json header;
    try {
        header = json::parse(hs);
    } catch (const json::exception& e) {
        throw std::runtime_error("bundle '" + path + "': bad JSON header: " + e.what());
    }
    Dataset ds;
    ds.name = header.at("name").get<std::string>();
    ds.n_classes = header.at("n_classes").get<int>();
    ds.window_length = header.at("window_length").get<std::size_t>();
    const auto n_samples = header.at("n_samples").get<std::size_t>();
    const auto rate = header.at("sample_rate_hz").get<double>();
    const bool has_labels = header.at("has_labels").get<bool>();
    ds.samples.resize(n_samples);
    for (auto& s : ds.samples) {
        s.sample_rate_hz = rate;
        s.values.resize(ds.window_length);
        for (auto& v : s.values) v = static_cast<double>(r.f32("sample values"));
    }
    if (has_labels)
        for (auto& s : ds.samples) {
            char b;
            r.read(&b, 1, "labels");
            s.label = static_cast<int>(static_cast<unsigned char>(b));
        }
    ds.validate();
    return ds;
}

Dataset load_csv(const std::string& path, const std::string& name, double sample_rate_hz) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_csv: cannot open '" + path + "'");
    Dataset ds;
    ds.name = name;
    std::string line;
    std::size_t lineno = 0;
    int max_label = -1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::vector<double> fields;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                fields.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw std::runtime_error("load_csv: '" + path + "' line " +
                                         std::to_string(lineno) + ": bad number '" + cell + "'");
            }
        }
        if (fields.size() < 2)
            throw std::runtime_error("load_csv: '" + path + "' line " + std::to_string(lineno) +
                                     ": need at least one value plus a label");
        SignalSample s;
        s.sample_rate_hz = sample_rate_hz;
        s.label = static_cast<int>(fields.back());
        max_label = std::max(max_label, *s.label);
        fields.pop_back();
        s.values = std::move(fields);
        if (ds.window_length == 0) ds.window_length = s.values.size();
        ds.samples.push_back(std::move(s));
    }
    if (ds.samples.empty()) throw std::runtime_error("load_csv: '" + path + "' has no rows");
    ds.n_classes = max_label + 1;
    ds.validate();
    return ds;
}

}  // namespace ff
