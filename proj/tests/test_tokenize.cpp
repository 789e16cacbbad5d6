#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "faultformer/rng.hpp"
#include "faultformer/tokenize.hpp"

using namespace ff;

namespace {

// Direct DFT used as the Fourier tokenizer's oracle.
std::complex<double> dft_bin(const std::vector<double>& x, std::size_t k) {
    std::complex<double> acc = 0;
    const auto n = static_cast<double>(x.size());
    for (std::size_t t = 0; t < x.size(); ++t)
        acc += x[t] * std::polar(1.0, -2.0 * M_PI * static_cast<double>(k * t) / n);
    return acc;
}

}  // namespace

TEST_CASE("constant tokenizer reshapes row-major") {
    std::vector<double> x = {0, 1, 2, 3, 4, 5, 6, 7};
    TokenSequence t = tokenize_constant(x, 4);
    CHECK(t.n_tokens == 2);
    CHECK(t.token_dim == 4);
    CHECK(t.at(0, 0) == 0);
    CHECK(t.at(0, 3) == 3);
    CHECK(t.at(1, 0) == 4);
    CHECK(t.tokens == x);
    CHECK_THROWS(tokenize_constant(x, 3));  // 3 does not divide 8
}

TEST_CASE("tokenizer shapes at L=1600") {
    std::vector<double> x(1600, 0.5);
    CHECK(tokenize_constant(x, 8).n_tokens == 200);
    CHECK(tokenize_constant(x, 8).token_dim == 8);
    TokenSequence f = tokenize_fourier(x);
    CHECK(f.n_tokens == 40);
    CHECK(f.token_dim == 3);
    Rng rng(1);
    CnnTokenizer ct = CnnTokenizer::init(rng);
    TokenSequence c = tokenize_cnn(x, ct);
    CHECK(c.n_tokens == 400);
    CHECK(c.token_dim == 8);
}

TEST_CASE("fourier tokenizer finds a pure tone's bin first") {
    const std::size_t L = 320, bin = 12;
    std::vector<double> x(L);
    for (std::size_t t = 0; t < L; ++t)
        x[t] = std::sin(2.0 * M_PI * static_cast<double>(bin * t) / static_cast<double>(L));
    TokenSequence f = tokenize_fourier(x, {8, true});
    // Top token: frequency channel = bin / (L/2); Re ~ 0, Im ~ -1/2.
    CHECK(f.at(0, 2) == doctest::Approx(static_cast<double>(bin) / 160.0));
    CHECK(f.at(0, 0) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(f.at(0, 1) == doctest::Approx(-0.5));
    // Remaining tokens are numerically empty bins.
    CHECK(std::hypot(f.at(1, 0), f.at(1, 1)) < 1e-9);
}

TEST_CASE("fourier tokens match the DFT oracle with 1/L scaling") {
    Rng rng(3);
    const std::size_t L = 100;
    std::vector<double> x(L);
    for (auto& v : x) v = rng.uniform(-1, 1);
    TokenSequence f = tokenize_fourier(x, {10, false});
    for (std::size_t i = 0; i < f.n_tokens; ++i) {
        const auto k = static_cast<std::size_t>(f.at(i, 2));
        const auto oracle = dft_bin(x, k);
        CHECK(f.at(i, 0) == doctest::Approx(oracle.real() / static_cast<double>(L)));
        CHECK(f.at(i, 1) == doctest::Approx(oracle.imag() / static_cast<double>(L)));
    }
    // Magnitudes are in descending order.
    for (std::size_t i = 1; i < f.n_tokens; ++i)
        CHECK(std::hypot(f.at(i - 1, 0), f.at(i - 1, 1)) >=
              std::hypot(f.at(i, 0), f.at(i, 1)) - 1e-12);
}

TEST_CASE("fourier magnitude ties resolve to the lower bin") {
    // A constant signal has magnitude only in bin 0; all other bins tie at
    // zero and must appear in ascending bin order.
    std::vector<double> x(64, 1.0);
    TokenSequence f = tokenize_fourier(x, {5, false});
    CHECK(f.at(0, 2) == 0.0);
    for (std::size_t i = 1; i < 5; ++i) CHECK(f.at(i, 2) == static_cast<double>(i));
}

TEST_CASE("fourier tokenizer only surveys bins up to L/2") {
    Rng rng(4);
    std::vector<double> x(80);
    for (auto& v : x) v = rng.uniform(-1, 1);
    TokenSequence f = tokenize_fourier(x, {40, false});
    for (std::size_t i = 0; i < f.n_tokens; ++i) CHECK(f.at(i, 2) <= 40.0);
}

TEST_CASE("fourier tokenizer rejects too-short signals") {
    std::vector<double> x(60, 1.0);
    CHECK_THROWS(tokenize_fourier(x, {40, true}));  // needs L >= 80
}

TEST_CASE("cnn tokenizer halves twice with left padding") {
    Rng rng(5);
    CnnTokenizer ct = CnnTokenizer::init(rng);
    for (std::size_t L : {16UL, 64UL, 320UL}) {
        std::vector<double> x(L, 0.25);
        TokenSequence t = tokenize_cnn(x, ct);
        CHECK(t.n_tokens == L / 4);
        CHECK(t.token_dim == 8);
    }
}

TEST_CASE("cnn tokenizer forward is differentiable end to end") {
    Rng rng(6);
    CnnTokenizer ct = CnnTokenizer::init(rng);
    std::vector<double> x(16, 0.1);
    Tensor tokens = ct.forward(x);
    CHECK(tokens.requires_grad());
    Tensor loss = sum(tokens);
    backward(loss);
    double g = 0;
    for (double v : ct.w1.node()->grad) g += std::fabs(v);
    CHECK(g > 0.0);
}

TEST_CASE("tokenizer names round-trip") {
    for (TokenizerId id : {TokenizerId::constant, TokenizerId::cnn, TokenizerId::fourier})
        CHECK(tokenizer_from_name(tokenizer_name(id)) == id);
    CHECK_THROWS(tokenizer_from_name("wavelet"));
}
