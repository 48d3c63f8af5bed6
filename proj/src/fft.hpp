#pragma once

#include <complex>
#include <span>
#include <vector>

namespace fdtof::detail {

/// Non-negative-frequency half of the DFT of `input` zero-padded to `n_fft`
/// points (n_fft / 2 + 1 bins).
std::vector<std::complex<double>> real_dft(std::span<const double> input, std::size_t n_fft);

} // namespace fdtof::detail
