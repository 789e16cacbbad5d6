#pragma once

#include <complex>
#include <vector>

namespace ff {

using cplx = std::complex<double>;

// Forward DFT: X[k] = sum_t x[t] exp(-2*pi*i*k*t/n). Power-of-two lengths
// use iterative radix-2 with bit reversal; everything else goes through
// Bluestein's chirp-z reduction to a padded power-of-two convolution.
std::vector<cplx> fft(const std::vector<cplx>& x);
std::vector<cplx> fft(const std::vector<double>& x);

// Inverse transform, normalized by 1/n.
std::vector<cplx> ifft(const std::vector<cplx>& x);

}  // namespace ff
