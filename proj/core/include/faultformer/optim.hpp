#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "faultformer/tensor.hpp"

namespace ff {

struct NamedParam {
    std::string name;
    Tensor tensor;
};
using ParamList = std::vector<NamedParam>;

struct LrSchedule {
    std::size_t warmup_steps = 100;
    double min_lr = 1e-4;
    double max_lr = 1e-3;
    std::size_t total_steps = 1000;

    void validate() const;
};

// Linear ramp min_lr -> max_lr over warmup_steps, then cosine decay back
// to min_lr over the remaining steps. Steps past total_steps clamp to
// min_lr.
double onecycle_lr(std::size_t step, const LrSchedule& sched);

struct AdamWConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.98;
    double eps = 1e-8;
    double weight_decay = 0.01;
};

// Decoupled-weight-decay Adam with bias correction.
class AdamW {
public:
    AdamW(ParamList params, AdamWConfig cfg = {});

    void set_lr(double lr) { cfg_.lr = lr; }
    double lr() const { return cfg_.lr; }
    std::size_t step_count() const { return step_; }
    const ParamList& params() const { return params_; }

    void zero_grad();
    void step();

    // Moment access for checkpointing.
    const std::vector<std::vector<double>>& first_moments() const { return m_; }
    const std::vector<std::vector<double>>& second_moments() const { return v_; }
    void restore(std::size_t step, std::vector<std::vector<double>> m,
                 std::vector<std::vector<double>> v);

private:
    ParamList params_;
    AdamWConfig cfg_;
    std::size_t step_ = 0;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
};

}  // namespace ff
