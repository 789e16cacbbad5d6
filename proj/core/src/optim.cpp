#include "faultformer/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace ff {

void LrSchedule::validate() const {
    if (min_lr <= 0.0 || max_lr <= 0.0 || min_lr > max_lr)
        throw std::invalid_argument("lr schedule: need 0 < min_lr <= max_lr");
    if (warmup_steps == 0 || warmup_steps >= total_steps)
        throw std::invalid_argument("lr schedule: need 0 < warmup_steps < total_steps");
}

double onecycle_lr(std::size_t step, const LrSchedule& sched) {
    sched.validate();
    if (step > sched.total_steps) return sched.min_lr;
    if (step <= sched.warmup_steps) {
        const double t = static_cast<double>(step) / static_cast<double>(sched.warmup_steps);
        return sched.min_lr + (sched.max_lr - sched.min_lr) * t;
    }
    const double t = static_cast<double>(step - sched.warmup_steps) /
                     static_cast<double>(sched.total_steps - sched.warmup_steps);
    return sched.min_lr + (sched.max_lr - sched.min_lr) * 0.5 * (1.0 + std::cos(M_PI * t));
}

AdamW::AdamW(ParamList params, AdamWConfig cfg) : params_(std::move(params)), cfg_(cfg) {
    if (cfg_.beta1 <= 0.0 || cfg_.beta1 >= 1.0 || cfg_.beta2 <= 0.0 || cfg_.beta2 >= 1.0)
        throw std::invalid_argument("adamw: betas must lie in (0,1)");
    if (cfg_.eps <= 0.0) throw std::invalid_argument("adamw: eps must be positive");
    if (cfg_.weight_decay < 0.0) throw std::invalid_argument("adamw: negative weight decay");
    for (const auto& p : params_) {
        m_.emplace_back(p.tensor.size(), 0.0);
        v_.emplace_back(p.tensor.size(), 0.0);
    }
}

void AdamW::zero_grad() {
    for (auto& p : params_) p.tensor.zero_grad();
}

void AdamW::step() {
    ++step_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
        Tensor& t = params_[i].tensor;
        auto& g = t.node()->grad;
        if (g.size() != t.size())
            throw std::logic_error("adamw: parameter '" + params_[i].name +
                                   "' has no gradient; run backward first");
        auto& data = t.data();
        auto& m = m_[i];
        auto& v = v_[i];
        for (std::size_t j = 0; j < data.size(); ++j) {
            m[j] = cfg_.beta1 * m[j] + (1.0 - cfg_.beta1) * g[j];
            v[j] = cfg_.beta2 * v[j] + (1.0 - cfg_.beta2) * g[j] * g[j];
            const double mhat = m[j] / bc1;
            const double vhat = v[j] / bc2;
            // Decoupled weight decay, applied separately from the moments.
            data[j] -= cfg_.lr * cfg_.weight_decay * data[j];
            data[j] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
    }
}

void AdamW::restore(std::size_t step, std::vector<std::vector<double>> m,
                    std::vector<std::vector<double>> v) {
    if (m.size() != params_.size() || v.size() != params_.size())
        throw std::invalid_argument("adamw: restore with mismatched parameter count");
    for (std::size_t i = 0; i < params_.size(); ++i)
        if (m[i].size() != params_[i].tensor.size() || v[i].size() != params_[i].tensor.size())
            throw std::invalid_argument("adamw: restore with mismatched moment shape for '" +
                                        params_[i].name + "'");
    step_ = step;
    m_ = std::move(m);
    v_ = std::move(v);
}

}  // namespace ff
