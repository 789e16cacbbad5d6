#pragma once

#include <cstdint>
#include <vector>

#include "faultformer/rng.hpp"

namespace ff {

struct AugmentConfig {
    double probability = 0.0;
    double noise_sigma_lo = 0.0;
    double noise_sigma_hi = 0.05;
    std::int64_t cutout_window_lo = 100;
    std::int64_t cutout_window_hi = 500;
    std::uint64_t rng_seed = 0;

    void validate() const;
};

std::vector<double> gaussian_noise(const std::vector<double>& x, double sigma, Rng& rng);

// Circular rotation by k positions; |k| must not exceed l/2.
std::vector<double> shift(const std::vector<double>& x, std::int64_t k);

// Zeroes exactly w consecutive entries starting at `start`.
std::vector<double> cutout(const std::vector<double>& x, std::size_t w, std::size_t start);

// Takes the half-length window at `start` and linearly interpolates it
// back up to the original length; window endpoints map to output
// endpoints.
std::vector<double> crop(const std::vector<double>& x, std::size_t start);

// Augmentation branches in draw order. Composites run right-to-left:
// cutout_shift shifts first, then cuts out.
enum class AugmentKind {
    noise,
    shift,
    cutout,
    crop,
    cutout_shift,
    cutout_noise,
    crop_shift,
    crop_noise,
};

// Gate draw first, then branch draw, then per-op parameter draws in
// execution order; untouched samples consume only the gate draw.
std::vector<double> augment_sample(const std::vector<double>& x, const AugmentConfig& cfg,
                                   Rng& rng);

// Exposed for statistics tests: the branch taken, or -1 when untouched.
std::vector<double> augment_sample(const std::vector<double>& x, const AugmentConfig& cfg,
                                   Rng& rng, int& branch_out);

}  // namespace ff
