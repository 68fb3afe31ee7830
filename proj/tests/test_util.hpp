#pragma once

#include <cmath>
#include <complex>
#include <random>

#include "oamsim/fieldgrid.hpp"

namespace testutil {

inline oamsim::ComplexField plane_wave(const oamsim::GridSpec& g) {
  oamsim::ComplexField f(g);
  for (auto& c : f.data()) c = 1.0;
  return f;
}

// random normalized superposition of LG modes, reproducible by seed
inline oamsim::ComplexField random_superposition(const oamsim::GridSpec& g,
                                                 int l_max, double waist,
                                                 unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  oamsim::ComplexField acc(g);
  for (int l = -l_max; l <= l_max; ++l) {
    const auto mode = oamsim::lg_mode({l, 0, waist}, g);
    const std::complex<double> c(n(rng), n(rng));
    auto d = acc.data();
    auto m = mode.data();
    for (size_t i = 0; i < d.size(); ++i) d[i] += c * m[i];
  }
  return acc.normalized();
}

}  // namespace testutil
