#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace hv::dsp {

std::size_t next_pow2(std::size_t n);

// |X(k)|^2 for k = 0..nfft/2 of the nfft-point DFT of `x`, zero-padded (or
// truncated) to nfft. No normalization: sum_k over the full two-sided
// spectrum of |X(k)|^2 equals nfft * sum_n x[n]^2.
std::vector<double> power_spectrum(std::span<const double> x, std::size_t nfft);

// Sum over the full two-sided spectrum given the one-sided half produced above.
double two_sided_sum(std::span<const double> half_spectrum, std::size_t nfft);

}  // namespace hv::dsp
