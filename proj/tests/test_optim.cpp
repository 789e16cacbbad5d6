#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "faultformer/optim.hpp"

using namespace ff;

namespace {

// Independent scalar-by-scalar AdamW reference, written directly from the
// update equations rather than sharing code with the implementation.
struct RefAdamW {
    double m = 0, v = 0;
    std::size_t t = 0;
    double update(double w, double g, const AdamWConfig& c) {
        ++t;
        w -= c.lr * c.weight_decay * w;  // decoupled decay
        m = c.beta1 * m + (1 - c.beta1) * g;
        v = c.beta2 * v + (1 - c.beta2) * g * g;
        const double mh = m / (1 - std::pow(c.beta1, static_cast<double>(t)));
        const double vh = v / (1 - std::pow(c.beta2, static_cast<double>(t)));
        return w - c.lr * mh / (std::sqrt(vh) + c.eps);
    }
};

}  // namespace

TEST_CASE("onecycle endpoints and peak") {
    LrSchedule s;  // warmup 100, 1e-4 -> 1e-3
    s.total_steps = 1000;
    CHECK(onecycle_lr(0, s) == doctest::Approx(1e-4));
    CHECK(onecycle_lr(100, s) == doctest::Approx(1e-3));
    CHECK(onecycle_lr(50, s) == doctest::Approx((1e-4 + 1e-3) / 2));
    CHECK(onecycle_lr(1000, s) == doctest::Approx(1e-4));
    // Past the end the schedule clamps to the floor.
    CHECK(onecycle_lr(5000, s) == doctest::Approx(1e-4));
}

TEST_CASE("onecycle cosine midpoint") {
    LrSchedule s;
    s.total_steps = 300;  // decay spans steps 100..300
    const double mid = onecycle_lr(200, s);
    CHECK(mid == doctest::Approx((1e-4 + 1e-3) / 2));
    // Monotone decay on the cosine segment.
    CHECK(onecycle_lr(150, s) > onecycle_lr(250, s));
}

TEST_CASE("schedule validation") {
    LrSchedule s;
    s.min_lr = 2e-3;  // above max
    CHECK_THROWS(s.validate());
    LrSchedule s2;
    s2.total_steps = 50;  // shorter than warmup
    CHECK_THROWS(s2.validate());
}

TEST_CASE("adamw matches a scalar reference over 25 steps") {
    AdamWConfig cfg;
    cfg.lr = 0.01;
    Tensor w = Tensor::from({1, 2}, {0.5, -0.3}, true);
    AdamW opt({{"w", w}}, cfg);
    RefAdamW r0, r1;
    double e0 = 0.5, e1 = -0.3;
    for (int t = 0; t < 25; ++t) {
        // Synthetic deterministic gradients.
        const double g0 = std::sin(0.1 * t) + 0.2, g1 = std::cos(0.2 * t) - 0.1;
        opt.zero_grad();
        w.node()->grad = {g0, g1};
        opt.step();
        e0 = r0.update(e0, g0, cfg);
        e1 = r1.update(e1, g1, cfg);
        CHECK(w.data()[0] == doctest::Approx(e0).epsilon(1e-12));
        CHECK(w.data()[1] == doctest::Approx(e1).epsilon(1e-12));
    }
    CHECK(opt.step_count() == 25);
}

TEST_CASE("adamw converges on a quadratic") {
    Tensor w = Tensor::from({1, 1}, {5.0}, true);
    AdamWConfig cfg;
    cfg.lr = 0.1;
    cfg.weight_decay = 0.0;
    AdamW opt({{"w", w}}, cfg);
    for (int t = 0; t < 400; ++t) {
        opt.zero_grad();
        w.node()->grad = {2.0 * (w.data()[0] - 1.5)};  // d/dw (w-1.5)^2
        opt.step();
    }
    CHECK(w.data()[0] == doctest::Approx(1.5).epsilon(1e-3));
}

TEST_CASE("adamw aborts on a missing gradient, naming the parameter") {
    Tensor w = Tensor::from({1, 1}, {1.0}, true);
    AdamW opt({{"stray", w}});
    w.node()->grad.clear();
    try {
        opt.step();
        FAIL("expected a logic_error");
    } catch (const std::logic_error& e) {
        CHECK(std::string(e.what()).find("stray") != std::string::npos);
    }
}

TEST_CASE("adamw restore resumes the moment history exactly") {
    AdamWConfig cfg;
    cfg.lr = 0.05;
    Tensor w1 = Tensor::from({1, 1}, {1.0}, true);
    Tensor w2 = Tensor::from({1, 1}, {1.0}, true);
    AdamW a({{"w", w1}}, cfg), b({{"w", w2}}, cfg);
    auto grad_at = [](int t) { return 0.3 + 0.01 * t; };
    for (int t = 0; t < 10; ++t) {
        a.zero_grad();
        w1.node()->grad = {grad_at(t)};
        a.step();
    }
    // Replay the first 5 steps on b, snapshot, restore into a fresh
    // optimizer, and check the tails agree.
    for (int t = 0; t < 5; ++t) {
        b.zero_grad();
        w2.node()->grad = {grad_at(t)};
        b.step();
    }
    AdamW c({{"w", w2}}, cfg);
    c.restore(b.step_count(), b.first_moments(), b.second_moments());
    for (int t = 5; t < 10; ++t) {
        c.zero_grad();
        w2.node()->grad = {grad_at(t)};
        c.step();
    }
    CHECK(w1.data()[0] == doctest::Approx(w2.data()[0]).epsilon(1e-15));
}
