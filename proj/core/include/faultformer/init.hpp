#pragma once

#include <cmath>

#include "faultformer/rng.hpp"
#include "faultformer/tensor.hpp"

namespace ff {

inline Tensor xavier_uniform(const Shape& shape, std::size_t fan_in, std::size_t fan_out,
                             Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Tensor t = Tensor::zeros(shape, true);
    for (auto& v : t.data()) v = rng.uniform(-limit, limit);
    return t;
}

inline Tensor normal_init(const Shape& shape, double mean, double stddev, Rng& rng) {
    Tensor t = Tensor::zeros(shape, true);
    for (auto& v : t.data()) v = rng.normal(mean, stddev);
    return t;
}

}  // namespace ff
