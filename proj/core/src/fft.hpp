#pragma once

#include <complex>
#include <span>
#include <vector>

namespace spkid::detail {

// In-place iterative radix-2 FFT. data.size() must be a power of two.
void fft(std::vector<std::complex<double>>& data);

// |X[k]|^2 for k = 0..n/2 of the zero-padded length-n transform of `frame`.
std::vector<double> power_spectrum(std::span<const double> frame,
                                   std::size_t n);

bool is_power_of_two(std::size_t n);

}  // namespace spkid::detail
