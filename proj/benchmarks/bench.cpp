#include <benchmark/benchmark.h>

#include "faultformer/fft.hpp"
#include "faultformer/model.hpp"
#include "faultformer/tensor.hpp"
#include "faultformer/tokenize.hpp"

using namespace ff;

namespace {

std::vector<double> random_signal(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> x(n);
    for (auto& v : x) v = rng.uniform(-1, 1);
    return x;
}

Tensor random_tensor(const Shape& shape, Rng& rng) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(-1, 1);
    return Tensor::from(shape, std::move(v));
}

void BM_Matmul(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    Rng rng(1);
    Tensor a = random_tensor({n, n}, rng), b = random_tensor({n, n}, rng);
    for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
}
BENCHMARK(BM_Matmul)->Arg(64)->Arg(256);

void BM_FftPow2(benchmark::State& state) {
    auto x = random_signal(static_cast<std::size_t>(state.range(0)), 2);
    for (auto _ : state) benchmark::DoNotOptimize(fft(x));
}
BENCHMARK(BM_FftPow2)->Arg(1024)->Arg(4096);

void BM_FftBluestein(benchmark::State& state) {
    auto x = random_signal(static_cast<std::size_t>(state.range(0)), 3);
    for (auto _ : state) benchmark::DoNotOptimize(fft(x));
}
BENCHMARK(BM_FftBluestein)->Arg(1600)->Arg(2560);

void BM_TokenizeFourier(benchmark::State& state) {
    auto x = random_signal(1600, 4);
    for (auto _ : state) benchmark::DoNotOptimize(tokenize_fourier(x));
}
BENCHMARK(BM_TokenizeFourier);

void BM_TokenizeCnn(benchmark::State& state) {
    auto x = random_signal(1600, 5);
    Rng rng(6);
    CnnTokenizer tok = CnnTokenizer::init(rng);
    for (auto _ : state) benchmark::DoNotOptimize(tokenize_cnn(x, tok));
}
BENCHMARK(BM_TokenizeCnn);

void BM_EncoderForward(benchmark::State& state) {
    EncoderConfig cfg;
    cfg.model_dim = 64;
    cfg.n_heads = 4;
    cfg.n_layers = 2;
    cfg.dropout = 0.0;
    cfg.input_dim = 3;
    cfg.n_classes = 4;
    Rng rng(7);
    EncoderState st = EncoderState::init(cfg, rng);
    TokenSequence t;
    t.n_tokens = 40;
    t.token_dim = 3;
    t.tokens = random_signal(120, 8);
    Rng drng(0);
    for (auto _ : state)
        benchmark::DoNotOptimize(encode(t, st, EncodeMode::classify, drng, false));
}
BENCHMARK(BM_EncoderForward);

void BM_EncoderTrainStep(benchmark::State& state) {
    EncoderConfig cfg;
    cfg.model_dim = 64;
    cfg.n_heads = 4;
    cfg.n_layers = 2;
    cfg.dropout = 0.0;
    cfg.input_dim = 3;
    cfg.n_classes = 4;
    Rng rng(9);
    EncoderState st = EncoderState::init(cfg, rng);
    TokenSequence t;
    t.n_tokens = 40;
    t.token_dim = 3;
    t.tokens = random_signal(120, 10);
    Rng drng(0);
    for (auto _ : state) {
        Tensor loss = cross_entropy_logits(encode(t, st, EncodeMode::classify, drng, true), 1);
        backward(loss);
        benchmark::DoNotOptimize(loss.item());
    }
}
BENCHMARK(BM_EncoderTrainStep);

}  // namespace

BENCHMARK_MAIN();
