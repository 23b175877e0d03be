#pragma once

#include <complex>
#include <span>
#include <vector>

namespace schrolab::fft {

// In-place multidimensional DFT over row-major data with the given extents.
// sign = -1: forward, sum x_j e^{-2 pi i jk/G}; sign = +1: backward.  Unnormalized.
void transform(std::vector<std::complex<double>>& data, std::span<const int> dims, int sign);
void transform(std::complex<double>* data, std::span<const int> dims, int sign);

// Smallest 2^a 3^b 5^c >= n.
int smooth_size(int n);

}  // namespace schrolab::fft
