#pragma once

#include "lipcert/signal.hpp"

#include <complex>
#include <vector>

namespace lipcert {

using ComplexField = std::vector<std::complex<double>>;

// d-dimensional DFT over a row-major grid, axis by axis. Forward is unnormalized; the
// inverse carries 1/N.
ComplexField fft_forward(const ComplexField& data, const Shape& shape);
ComplexField fft_inverse(const ComplexField& data, const Shape& shape);
ComplexField fft_forward(const Signal& s);

// Flat index of the frequency -k for flat index k.
std::size_t mirrored_bin(std::size_t k, const Shape& shape);

}  // namespace lipcert
