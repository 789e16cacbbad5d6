#include "faultformer/fft.hpp"

#include <cmath>
#include <stdexcept>

namespace ff {

namespace {

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// In-place iterative radix-2 Cooley-Tukey. n must be a power of two.
void fft_radix2(std::vector<cplx>& a, bool inverse) {
    const std::size_t n = a.size();
    // Bit-reversal permutation.
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = (inverse ? 2.0 : -2.0) * M_PI / static_cast<double>(len);
        const cplx wlen(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            cplx w(1.0, 0.0);
            for (std::size_t j = 0; j < len / 2; ++j) {
                const cplx u = a[i + j];
                const cplx v = a[i + j + len / 2] * w;
                a[i + j] = u + v;
                a[i + j + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
}

// Bluestein: X[k] = conj(chirp[k]) * conv(x * conj(chirp), chirp)[k],
// with chirp[m] = exp(i*pi*m^2/n); the linear convolution runs as a
// circular one at a power-of-two length >= 2n-1.
std::vector<cplx> fft_bluestein(const std::vector<cplx>& x, bool inverse) {
    const std::size_t n = x.size();
    std::vector<cplx> chirp(n);
    for (std::size_t m = 0; m < n; ++m) {
        // m^2 mod 2n keeps the angle argument small for long inputs.
        const std::size_t m2 = (m * m) % (2 * n);
        const double ang = (inverse ? -1.0 : 1.0) * M_PI * static_cast<double>(m2) /
                           static_cast<double>(n);
        chirp[m] = cplx(std::cos(ang), std::sin(ang));
    }
    std::size_t m = 1;
    while (m < 2 * n - 1) m <<= 1;
    std::vector<cplx> a(m, cplx(0.0, 0.0)), b(m, cplx(0.0, 0.0));
    for (std::size_t i = 0; i < n; ++i) a[i] = x[i] * std::conj(chirp[i]);
    b[0] = chirp[0];
    for (std::size_t i = 1; i < n; ++i) b[i] = b[m - i] = chirp[i];
    fft_radix2(a, false);
    fft_radix2(b, false);
    for (std::size_t i = 0; i < m; ++i) a[i] *= b[i];
    fft_radix2(a, true);
    std::vector<cplx> out(n);
    for (std::size_t k = 0; k < n; ++k)
        out[k] = a[k] * std::conj(chirp[k]) / static_cast<double>(m);
    return out;
}

std::vector<cplx> transform(const std::vector<cplx>& x, bool inverse) {
    if (x.empty()) throw std::invalid_argument("fft: empty input");
    if (x.size() == 1) return x;
    if (is_pow2(x.size())) {
        std::vector<cplx> a = x;
        fft_radix2(a, inverse);
        return a;
    }
    return fft_bluestein(x, inverse);
}

}  // namespace

std::vector<cplx> fft(const std::vector<cplx>& x) { return transform(x, false); }

std::vector<cplx> fft(const std::vector<double>& x) {
    std::vector<cplx> c(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) c[i] = cplx(x[i], 0.0);
    return transform(c, false);
}

std::vector<cplx> ifft(const std::vector<cplx>& x) {
    std::vector<cplx> out = transform(x, true);
    const double inv = 1.0 / static_cast<double>(x.size());
    for (auto& v : out) v *= inv;
    return out;
}

}  // namespace ff
