#include "faultformer/augment.hpp"

#include <cmath>
#include <stdexcept>

namespace ff {

void AugmentConfig::validate() const {
    if (probability < 0.0 || probability > 1.0)
        throw std::invalid_argument("augment: probability must be in [0,1]");
    if (noise_sigma_lo < 0.0 || noise_sigma_lo > noise_sigma_hi)
        throw std::invalid_argument("augment: bad noise sigma range");
    if (cutout_window_lo < 1 || cutout_window_lo > cutout_window_hi)
        throw std::invalid_argument("augment: bad cutout window range");
}

std::vector<double> gaussian_noise(const std::vector<double>& x, double sigma, Rng& rng) {
    if (sigma < 0.0) throw std::invalid_argument("gaussian_noise: negative sigma");
    std::vector<double> y = x;
    if (sigma == 0.0) return y;
    for (auto& v : y) v += rng.normal(0.0, sigma);
    return y;
}

std::vector<double> shift(const std::vector<double>& x, std::int64_t k) {
    const auto l = static_cast<std::int64_t>(x.size());
    if (std::abs(k) > l / 2)
        throw std::invalid_argument("shift: |k|=" + std::to_string(std::abs(k)) +
                                    " exceeds l/2=" + std::to_string(l / 2));
    std::vector<double> y(x.size());
    for (std::int64_t i = 0; i < l; ++i) {
        const std::int64_t src = ((i - k) % l + l) % l;
        y[static_cast<std::size_t>(i)] = x[static_cast<std::size_t>(src)];
    }
    return y;
}

std::vector<double> cutout(const std::vector<double>& x, std::size_t w, std::size_t start) {
    if (w > x.size())
        throw std::invalid_argument("cutout: window " + std::to_string(w) +
                                    " exceeds signal length " + std::to_string(x.size()));
    if (start > x.size() - w)
        throw std::invalid_argument("cutout: start " + std::to_string(start) + " exceeds l-w=" +
                                    std::to_string(x.size() - w));
    std::vector<double> y = x;
    for (std::size_t i = start; i < start + w; ++i) y[i] = 0.0;
    return y;
}

std::vector<double> crop(const std::vector<double>& x, std::size_t start) {
    const std::size_t l = x.size();
    if (l % 2 != 0) throw std::invalid_argument("crop: signal length must be even");
    const std::size_t w = l / 2;
    if (start > w)
        throw std::invalid_argument("crop: start " + std::to_string(start) + " exceeds l/2=" +
                                    std::to_string(w));
    std::vector<double> y(l);
    // Output position p samples window coordinate p*(w-1)/(l-1).
    for (std::size_t p = 0; p < l; ++p) {
        const double pos = static_cast<double>(p) * static_cast<double>(w - 1) /
                           static_cast<double>(l - 1);
        const auto i0 = static_cast<std::size_t>(pos);
        const double frac = pos - static_cast<double>(i0);
        const std::size_t i1 = std::min(i0 + 1, w - 1);
        y[p] = (1.0 - frac) * x[start + i0] + frac * x[start + i1];
    }
    return y;
}

std::vector<double> augment_sample(const std::vector<double>& x, const AugmentConfig& cfg,
                                   Rng& rng) {
    int branch;
    return augment_sample(x, cfg, rng, branch);
}

std::vector<double> augment_sample(const std::vector<double>& x, const AugmentConfig& cfg,
                                   Rng& rng, int& branch_out) {
    cfg.validate();
    branch_out = -1;
    if (rng.uniform() >= cfg.probability) return x;
    const auto l = static_cast<std::int64_t>(x.size());
    const int branch = static_cast<int>(rng.uniform_int(0, 7));
    branch_out = branch;

    auto draw_noise = [&](const std::vector<double>& v) {
        const double sigma = rng.uniform(cfg.noise_sigma_lo, cfg.noise_sigma_hi);
        return gaussian_noise(v, sigma, rng);
    };
    auto draw_shift = [&](const std::vector<double>& v) {
        return shift(v, rng.uniform_int(-l / 2, l / 2));
    };
    auto draw_cutout = [&](const std::vector<double>& v) {
        const auto w = static_cast<std::size_t>(
            rng.uniform_int(cfg.cutout_window_lo, cfg.cutout_window_hi));
        const auto start = static_cast<std::size_t>(
            rng.uniform_int(0, l - static_cast<std::int64_t>(w)));
        return cutout(v, w, start);
    };
    auto draw_crop = [&](const std::vector<double>& v) {
        return crop(v, static_cast<std::size_t>(rng.uniform_int(0, l / 2)));
    };

    switch (static_cast<AugmentKind>(branch)) {
        case AugmentKind::noise: return draw_noise(x);
        case AugmentKind::shift: return draw_shift(x);
        case AugmentKind::cutout: return draw_cutout(x);
        case AugmentKind::crop: return draw_crop(x);
        case AugmentKind::cutout_shift: return draw_cutout(draw_shift(x));
        case AugmentKind::cutout_noise: return draw_cutout(draw_noise(x));
        case AugmentKind::crop_shift: return draw_crop(draw_shift(x));
        case AugmentKind::crop_noise: return draw_crop(draw_noise(x));
    }
    throw std::logic_error("augment_sample: unreachable branch");
}

}  // namespace ff
