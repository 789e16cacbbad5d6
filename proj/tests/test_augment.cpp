#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "faultformer/augment.hpp"

using namespace ff;

namespace {

std::vector<double> ramp(std::size_t n) {
    std::vector<double> v(n);
    std::iota(v.begin(), v.end(), 0.0);
    return v;
}

}  // namespace

TEST_CASE("gaussian_noise with sigma 0 is the identity") {
    Rng rng(1);
    auto x = ramp(64);
    CHECK(gaussian_noise(x, 0.0, rng) == x);
}

TEST_CASE("gaussian_noise statistics at sigma 0.05") {
    Rng rng(2);
    const std::size_t n = 100000;
    auto x = ramp(n);
    auto y = gaussian_noise(x, 0.05, rng);
    double mean = 0, var = 0;
    for (std::size_t i = 0; i < n; ++i) mean += y[i] - x[i];
    mean /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double d = y[i] - x[i] - mean;
        var += d * d;
    }
    const double sd = std::sqrt(var / static_cast<double>(n - 1));
    // CLT bound on the mean: 3 * sigma / sqrt(n).
    CHECK(std::fabs(mean) < 3.0 * 0.05 / std::sqrt(static_cast<double>(n)));
    // Chi-square bound on the sample sd: 3 * sigma / sqrt(2n).
    CHECK(std::fabs(sd - 0.05) < 3.0 * 0.05 / std::sqrt(2.0 * static_cast<double>(n)));
}

TEST_CASE("shift is a circular rotation preserving the multiset") {
    auto x = ramp(10);
    auto y = shift(x, 3);
    CHECK(y.size() == 10);
    auto sx = x, sy = y;
    std::sort(sy.begin(), sy.end());
    CHECK(sy == sx);
    // Position check: rotation by 3 moves index 0 somewhere deterministic
    // and shift(-3) undoes it.
    CHECK(shift(y, -3) == x);
    CHECK(shift(x, 0) == x);
    CHECK_THROWS(shift(x, 6));   // |k| > l/2
    CHECK_THROWS(shift(x, -6));
}

TEST_CASE("cutout zeroes exactly w entries in place") {
    auto x = ramp(20);
    auto y = cutout(x, 5, 3);
    CHECK(y.size() == 20);
    for (std::size_t i = 0; i < 20; ++i) {
        if (i >= 3 && i < 8)
            CHECK(y[i] == 0.0);
        else
            CHECK(y[i] == x[i]);
    }
    CHECK_THROWS(cutout(x, 21, 0));
    CHECK_THROWS(cutout(x, 5, 16));
}

TEST_CASE("crop keeps endpoints and length") {
    auto x = ramp(100);
    auto y = crop(x, 10);  // window [10, 60)
    CHECK(y.size() == 100);
    CHECK(y.front() == doctest::Approx(10.0));
    CHECK(y.back() == doctest::Approx(59.0));
    // A linear input stays linear under linear upsampling.
    for (std::size_t i = 1; i + 1 < y.size(); ++i)
        CHECK(y[i] == doctest::Approx(10.0 + 49.0 * static_cast<double>(i) / 99.0));
}

TEST_CASE("augment_sample probability gate") {
    Rng rng(3);
    AugmentConfig cfg;
    cfg.probability = 0.0;
    auto x = ramp(1600);
    int branch = -2;
    auto y = augment_sample(x, cfg, rng, branch);
    CHECK(y == x);
    CHECK(branch == -1);
}

TEST_CASE("augment statistics: gate and branch frequencies at p=0.9") {
    Rng rng(4);
    AugmentConfig cfg;
    cfg.probability = 0.9;
    auto x = ramp(1600);
    const int n = 10000;
    int untouched = 0;
    std::vector<int> counts(8, 0);
    for (int i = 0; i < n; ++i) {
        int branch = -2;
        auto y = augment_sample(x, cfg, rng, branch);
        CHECK(y.size() == x.size());
        if (branch < 0)
            ++untouched;
        else
            ++counts[static_cast<std::size_t>(branch)];
    }
    // Binomial 3-sigma bounds.
    const double sd_gate = std::sqrt(n * 0.1 * 0.9);
    CHECK(std::fabs(untouched - n * 0.1) < 3.0 * sd_gate);
    const double p8 = 0.9 / 8.0;
    const double sd_branch = std::sqrt(n * p8 * (1 - p8));
    for (int c : counts) CHECK(std::fabs(c - n * p8) < 3.0 * sd_branch);
}

TEST_CASE("every branch preserves length; shift branch preserves values") {
    Rng rng(5);
    AugmentConfig cfg;
    cfg.probability = 1.0;
    auto x = ramp(1600);
    std::vector<bool> seen(8, false);
    for (int i = 0; i < 2000; ++i) {
        int branch = -2;
        auto y = augment_sample(x, cfg, rng, branch);
        REQUIRE(branch >= 0);
        seen[static_cast<std::size_t>(branch)] = true;
        REQUIRE(y.size() == x.size());
        if (branch == 1) {  // pure shift: multiset preserved
            auto sx = x, sy = y;
            std::sort(sy.begin(), sy.end());
            CHECK(sy == sx);
        }
        if (branch == 2) {  // pure cutout: zero run between 100 and 500 long
            std::size_t zeros = 0;
            for (std::size_t j = 0; j < y.size(); ++j)
                if (y[j] == 0.0 && x[j] != 0.0) ++zeros;
            CHECK(zeros >= 99);  // index 0 of the ramp is already 0
            CHECK(zeros <= 500);
        }
    }
    for (bool b : seen) CHECK(b);
}

TEST_CASE("augmentation is reproducible per seed") {
    AugmentConfig cfg;
    cfg.probability = 1.0;
    auto x = ramp(1600);
    Rng a(77), b(77), c(78);
    CHECK(augment_sample(x, cfg, a) == augment_sample(x, cfg, b));
    Rng a2(77);
    bool differs = false;
    for (int i = 0; i < 10 && !differs; ++i)
        differs = augment_sample(x, cfg, a2) != augment_sample(x, cfg, c);
    CHECK(differs);
}

TEST_CASE("config validation") {
    AugmentConfig cfg;
    cfg.probability = 1.5;
    CHECK_THROWS(cfg.validate());
    AugmentConfig cfg2;
    cfg2.cutout_window_lo = 600;  // above hi
    CHECK_THROWS(cfg2.validate());
}
