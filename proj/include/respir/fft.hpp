#pragma once

#include <complex>
#include <vector>

namespace respir {

// In-place DFT of arbitrary length: iterative radix-2 for powers of two,
// Bluestein's chirp-z re-expression otherwise. The inverse scales by 1/N.
// No zero-padding is applied to the caller's data.
void fft(std::vector<std::complex<double>>& data, bool inverse);

std::vector<std::complex<double>> fft_real(const std::vector<double>& series);

}  // namespace respir
