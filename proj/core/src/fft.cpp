#include "fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <tuple>
#include <vector>

namespace oamsim::fft {

namespace {

// FFTW planning is not thread-safe; execution on distinct buffers is.
std::mutex plan_mutex;

fftw_plan get_plan(int nx, int ny, int sign) {
  static std::map<std::tuple<int, int, int>, fftw_plan> cache;
  std::lock_guard<std::mutex> lock(plan_mutex);
  const auto key = std::make_tuple(nx, ny, sign);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  // Plan on a scratch buffer, execute later on caller arrays via the
  // new-array interface.
  std::vector<std::complex<double>> scratch(static_cast<size_t>(nx) * ny);
  auto* ptr = reinterpret_cast<fftw_complex*>(scratch.data());
  fftw_plan plan = fftw_plan_dft_2d(ny, nx, ptr, ptr,
                                    sign < 0 ? FFTW_FORWARD : FFTW_BACKWARD,
                                    FFTW_ESTIMATE);
  cache.emplace(key, plan);
  return plan;
}

}  // namespace

void transform_2d(std::span<std::complex<double>> data, int nx, int ny, int sign) {
  fftw_plan plan = get_plan(nx, ny, sign);
  auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(plan, ptr, ptr);
}

void shift_2d(std::span<std::complex<double>> data, int nx, int ny) {
  const int hx = nx / 2, hy = ny / 2;
  for (int iy = 0; iy < hy; ++iy)
    for (int ix = 0; ix < nx; ++ix) {
      const int jx = (ix + hx) % nx;
      const int jy = iy + hy;
      std::swap(data[static_cast<size_t>(iy) * nx + ix],
                data[static_cast<size_t>(jy) * nx + jx]);
    }
}

}  // namespace oamsim::fft
