#pragma once

#include <complex>
#include <span>

namespace oamsim::fft {

// In-place 2D complex DFT over a row-major nx*ny buffer. sign = -1 uses the
// e^{-i 2 pi ...} kernel, sign = +1 the conjugate one. Unscaled (like FFTW).
// Plans are cached per (nx, ny, sign) with FFTW_ESTIMATE so results are
// bit-reproducible run to run.
void transform_2d(std::span<std::complex<double>> data, int nx, int ny, int sign);

// Swap quadrants so the centered sample (n/2) moves to index 0 and back.
// For even n the operation is its own inverse.
void shift_2d(std::span<std::complex<double>> data, int nx, int ny);

}  // namespace oamsim::fft
