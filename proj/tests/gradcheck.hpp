#pragma once

// Central finite-difference gradient oracle used by the tensor and model
// suites. Independent of the autodiff engine: it only perturbs parameter
// data and re-runs the forward closure.

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "faultformer/rng.hpp"
#include "faultformer/tensor.hpp"

namespace fftest {

struct GradCheckResult {
    double max_rel_err = 0.0;
    std::size_t checked = 0;
    std::string worst;  // "param[i]: analytic vs numeric"
};

// Compares analytic grads on `params` against central differences of
// `forward` (which must rebuild the graph and return the scalar loss).
// Checks up to `n_probe` randomly chosen coordinates per parameter.
inline GradCheckResult grad_check(const std::vector<ff::Tensor>& params,
                                  const std::function<double()>& forward_backward_item,
                                  const std::function<double()>& forward_item, ff::Rng& rng,
                                  std::size_t n_probe = 4, double h = 1e-4) {
    GradCheckResult res;
    // One analytic pass; caller's closure runs backward() and leaves grads
    // populated.
    forward_backward_item();
    std::vector<std::vector<double>> analytic;
    for (const auto& p : params) analytic.push_back(p.node()->grad);
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        ff::Tensor p = params[pi];
        const std::size_t n = p.size();
        for (std::size_t probe = 0; probe < n_probe && probe < n; ++probe) {
            const std::size_t i = n == 1 ? 0 : rng.uniform_int(0, static_cast<std::int64_t>(n) - 1);
            const double saved = p.data()[i];
            p.data()[i] = saved + h;
            const double up = forward_item();
            p.data()[i] = saved - h;
            const double dn = forward_item();
            p.data()[i] = saved;
            const double numeric = (up - dn) / (2.0 * h);
            const double a = analytic[pi].empty() ? 0.0 : analytic[pi][i];
            const double denom = std::max({std::fabs(a), std::fabs(numeric), 1e-8});
            const double rel = std::fabs(a - numeric) / denom;
            ++res.checked;
            if (rel > res.max_rel_err) {
                res.max_rel_err = rel;
                res.worst = "param " + std::to_string(pi) + "[" + std::to_string(i) +
                            "]: analytic " + std::to_string(a) + " vs numeric " +
                            std::to_string(numeric);
            }
        }
    }
    return res;
}

}  // namespace fftest
