#include "oamsim/fieldgrid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace oamsim {

namespace {

constexpr double kPi = std::numbers::pi;

bool power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

// Radial LG amplitude (waist plane, no Gouy/curvature):
//   R(r) = N * (sqrt(2) r / w)^|l| * L_p^|l|(2 r^2 / w^2) * exp(-r^2 / w^2)
// with N chosen so that the continuous 2D mode (including e^{il theta}) has
// unit L2 norm.
double lg_radial(int l, int p, double waist, double r) {
  const int al = std::abs(l);
  const double lognorm =
      0.5 * (std::lgamma(p + 1.0) - std::lgamma(p + al + 1.0)) +
      0.5 * std::log(2.0 / kPi);
  const double norm = std::exp(lognorm) / waist;
  const double u = std::sqrt(2.0) * r / waist;
  const double x = 2.0 * r * r / (waist * waist);
  return norm * std::pow(u, al) * std::assoc_laguerre(p, al, x) *
         std::exp(-r * r / (waist * waist));
}

// Radius enclosing all but `tail` of the mode energy, via cumulative radial
// quadrature of the analytic profile.
double energy_radius(int l, int p, double waist, double tail) {
  const double r_rms = waist * std::sqrt((std::abs(l) + 2 * p + 1) / 2.0);
  const double r_max = 8.0 * r_rms + 4.0 * waist;
  const int n = 4000;
  const double dr = r_max / n;
  std::vector<double> shell(n);
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    const double r = (i + 0.5) * dr;
    const double a = lg_radial(l, p, waist, r);
    shell[i] = a * a * r * dr;  // azimuthal factor common, cancels in the ratio
    total += shell[i];
  }
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    acc += shell[i];
    if (acc >= (1.0 - tail) * total) return (i + 1) * dr;
  }
  return r_max;
}

}  // namespace

void GridSpec::validate() const {
  if (!power_of_two(nx) || !power_of_two(ny) || nx < 64 || ny < 64)
    throw config_error("grid nx, ny must be powers of two >= 64");
  if (!(dx > 0.0) || !(dy > 0.0)) throw config_error("grid pitch must be > 0");
  if (!(wavelength > 0.0)) throw config_error("wavelength must be > 0");
}

GridSpec GridSpec::square(int n, double window, double wavelength) {
  GridSpec g;
  g.nx = g.ny = n;
  g.dx = g.dy = window / n;
  g.wavelength = wavelength;
  g.validate();
  return g;
}

ComplexField::ComplexField(const GridSpec& grid) : grid_(grid) {
  grid_.validate();
  data_.assign(static_cast<size_t>(grid_.nx) * grid_.ny, cdouble(0.0, 0.0));
}

double ComplexField::energy() const {
  double s = 0.0;
  for (const cdouble& a : data_) s += std::norm(a);
  return s * grid_.cell_area();
}

double ComplexField::norm() const { return std::sqrt(energy()); }

ComplexField ComplexField::normalized() const {
  const double n = norm();
  if (!(n > 0.0) || !std::isfinite(n))
    throw normalization_error("cannot normalize field with zero or non-finite norm");
  ComplexField out = *this;
  out.scale(1.0 / n);
  return out;
}

void ComplexField::scale(cdouble s) {
  for (cdouble& a : data_) a *= s;
}

ComplexField lg_mode(const LGModeSpec& spec, const GridSpec& grid) {
  grid.validate();
  if (spec.p < 0) throw config_error("LG radial index p must be >= 0");
  if (!(spec.waist > 0.0)) throw config_error("LG waist must be > 0");

  const double half_window = 0.5 * std::min(grid.window_x(), grid.window_y());
  const double r_need = energy_radius(spec.l, spec.p, spec.waist, 1.0e-4);
  if (r_need > half_window)
    throw window_too_small_error("LG mode 1e-4 energy radius " +
                                 std::to_string(r_need) +
                                 " m exceeds grid half-window " +
                                 std::to_string(half_window) + " m");

  ComplexField f(grid);
  const int al = std::abs(spec.l);
  for (int iy = 0; iy < grid.ny; ++iy) {
    const double y = grid.y(iy);
    for (int ix = 0; ix < grid.nx; ++ix) {
      const double x = grid.x(ix);
      const double r = std::hypot(x, y);
      double amp = lg_radial(spec.l, spec.p, spec.waist, r);
      if (al != 0 && r == 0.0) amp = 0.0;
      const double phase = spec.l * std::atan2(y, x);
      f.at(ix, iy) = std::polar(amp, phase);
    }
  }
  // Analytic normalization is already unit to discretization error; pin the
  // discrete norm exactly so Gram tests are grid-independent.
  return f.normalized();
}

cdouble overlap(const ComplexField& a, const ComplexField& b) {
  if (!(a.grid() == b.grid()))
    throw grid_mismatch_error("overlap requires identical grids");
  cdouble s(0.0, 0.0);
  const auto da = a.data();
  const auto db = b.data();
  for (size_t i = 0; i < da.size(); ++i) s += std::conj(da[i]) * db[i];
  return s * a.grid().cell_area();
}

double OamSpectrum::power(int l) const {
  auto it = power_by_l.find(l);
  return it == power_by_l.end() ? 0.0 : it->second;
}

double OamSpectrum::total_power() const {
  double s = 0.0;
  for (const auto& [l, p] : power_by_l) s += p;
  return s;
}

double OamSpectrum::mean_l() const {
  double s = 0.0, w = 0.0;
  for (const auto& [l, p] : power_by_l) {
    s += l * p;
    w += p;
  }
  return w > 0.0 ? s / w : 0.0;
}

int OamSpectrum::dominant_l() const {
  int best = 0;
  double best_p = -1.0;
  for (const auto& [l, p] : power_by_l)
    if (p > best_p) {
      best_p = p;
      best = l;
    }
  return best;
}

cdouble OamSpectrum::amplitude(int l, int p) const {
  for (const auto& e : entries)
    if (e.l == l && e.p == p) return e.amplitude;
  return cdouble(0.0, 0.0);
}

ModeBasis::ModeBasis(const GridSpec& grid, int l_min, int l_max, int p_max,
                     double waist)
    : grid_(grid), l_min_(l_min), l_max_(l_max), p_max_(p_max), waist_(waist) {
  if (l_min > l_max || p_max < 0) throw config_error("empty LG basis range");
  modes_.reserve(static_cast<size_t>(l_max - l_min + 1) * (p_max + 1));
  for (int l = l_min; l <= l_max; ++l)
    for (int p = 0; p <= p_max; ++p)
      modes_.push_back(lg_mode({l, p, waist}, grid));
}

OamSpectrum ModeBasis::decompose(const ComplexField& f) const {
  if (!(f.grid() == grid_))
    throw grid_mismatch_error("field grid does not match basis grid");
  OamSpectrum spec;
  spec.waist = waist_;
  const int np = p_max_ + 1;
  spec.entries.resize(modes_.size());
#pragma omp parallel for schedule(static)
  for (int idx = 0; idx < static_cast<int>(modes_.size()); ++idx) {
    const int l = l_min_ + idx / np;
    const int p = idx % np;
    spec.entries[idx] = {l, p, overlap(modes_[idx], f)};
  }
  double total = 0.0;
  for (const auto& e : spec.entries) {
    spec.power_by_l[e.l] += std::norm(e.amplitude);
    total += std::norm(e.amplitude);
  }
  spec.residual = std::max(0.0, f.energy() - total);
  return spec;
}

OamSpectrum oam_spectrum(const ComplexField& f, int l_min, int l_max, int p_max,
                         double waist) {
  return ModeBasis(f.grid(), l_min, l_max, p_max, waist).decompose(f);
}

double gaussian_coupling(const ComplexField& f, double waist) {
  const ComplexField g = lg_mode({0, 0, waist}, f.grid());
  return std::norm(overlap(g, f));
}

namespace {

// Scan helper: waists whose mode does not fit the window contribute zero.
double coupling_or_zero(const ComplexField& f, double waist) {
  try {
    return gaussian_coupling(f, waist);
  } catch (const window_too_small_error&) {
    return 0.0;
  }
}

}  // namespace

double gaussian_coupling(const ComplexField& f, double waist_lo, double waist_hi,
                         int steps, double* best_waist) {
  if (!(waist_lo > 0.0) || !(waist_hi > waist_lo) || steps < 2)
    throw empty_scan_error("gaussian_coupling waist scan needs 0 < lo < hi and >= 2 steps");
  double best_w = waist_lo, best_c = -1.0;
  const double ratio = waist_hi / waist_lo;
  for (int i = 0; i < steps; ++i) {
    const double w = waist_lo * std::pow(ratio, i / double(steps - 1));
    const double c = coupling_or_zero(f, w);
    if (c > best_c) {
      best_c = c;
      best_w = w;
    }
  }
  // Golden-section refinement around the coarse optimum.
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = best_w / std::pow(ratio, 1.0 / (steps - 1));
  double hi = best_w * std::pow(ratio, 1.0 / (steps - 1));
  double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
  double f1 = coupling_or_zero(f, x1), f2 = coupling_or_zero(f, x2);
  for (int it = 0; it < 40 && (hi - lo) > 1.0e-4 * best_w; ++it) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + gr * (hi - lo);
      f2 = coupling_or_zero(f, x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - gr * (hi - lo);
      f1 = coupling_or_zero(f, x1);
    }
  }
  const double w = 0.5 * (lo + hi);
  const double c = coupling_or_zero(f, w);
  if (best_waist) *best_waist = c > best_c ? w : best_w;
  return std::max(c, best_c);
}

double best_p0_capture_waist(const ComplexField& f, int l_min, int l_max,
                             double waist_lo, double waist_hi, int steps) {
  if (!(waist_lo > 0.0) || !(waist_hi > waist_lo) || steps < 2)
    throw empty_scan_error("waist scan needs 0 < lo < hi and >= 2 steps");
  auto capture = [&](double w) {
    double s = 0.0;
    for (int l = l_min; l <= l_max; ++l) {
      try {
        const ComplexField m = lg_mode({l, 0, w}, f.grid());
        s += std::norm(overlap(m, f));
      } catch (const window_too_small_error&) {
        return 0.0;
      }
    }
    return s;
  };
  double best_w = waist_lo, best_c = -1.0;
  const double ratio = waist_hi / waist_lo;
  for (int i = 0; i < steps; ++i) {
    const double w = waist_lo * std::pow(ratio, i / double(steps - 1));
    const double c = capture(w);
    if (c > best_c) {
      best_c = c;
      best_w = w;
    }
  }
  double lo = best_w / std::pow(ratio, 1.0 / (steps - 1));
  double hi = best_w * std::pow(ratio, 1.0 / (steps - 1));
  for (int it = 0; it < 24; ++it) {
    const double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
    if (capture(m1) < capture(m2))
      lo = m1;
    else
      hi = m2;
  }
  return 0.5 * (lo + hi);
}

double lg_radial_amplitude(int l, int p, double waist, double r) {
  return lg_radial(l, p, waist, r);
}

double lg_fit_radius(int l, int p, double waist) {
  return energy_radius(l, p, waist, 1.0e-4);
}

double max_fitting_waist(const GridSpec& grid, int l_max, int p_max) {
  const double half_window = 0.5 * std::min(grid.window_x(), grid.window_y());
  // fit radius is linear in the waist for fixed (l, p)
  const double w_ref = 1.0e-3;
  const double r_ref = energy_radius(std::abs(l_max), p_max, w_ref, 1.0e-4);
  return w_ref * half_window / r_ref;
}

RadialProfile radial_profile(const ComplexField& f, int bins) {
  const GridSpec& g = f.grid();
  RadialProfile prof;
  const double r_max = 0.5 * std::min(g.window_x(), g.window_y());
  prof.dr = r_max / bins;
  prof.mean.assign(bins, cdouble(0.0, 0.0));
  std::vector<long long> counts(bins, 0);
  for (int iy = 0; iy < g.ny; ++iy)
    for (int ix = 0; ix < g.nx; ++ix) {
      const double r = std::hypot(g.x(ix), g.y(iy));
      const int k = static_cast<int>(r / prof.dr);
      if (k >= bins) continue;
      prof.mean[k] += f.at(ix, iy);
      ++counts[k];
    }
  for (int k = 0; k < bins; ++k)
    if (counts[k] > 0) prof.mean[k] /= static_cast<double>(counts[k]);
  return prof;
}

double ring_capture_waist(const ComplexField& ring, int l_max, double waist_lo,
                          double waist_hi, int steps) {
  if (!(waist_lo > 0.0) || !(waist_hi > waist_lo) || steps < 2)
    throw empty_scan_error("ring_capture_waist needs 0 < lo < hi and >= 2 steps");
  const RadialProfile prof = radial_profile(ring, 512);
  auto capture = [&](double w) {
    double s = 0.0;
    for (int l = 0; l <= l_max; ++l) {
      cdouble c(0.0, 0.0);
      for (size_t k = 0; k < prof.mean.size(); ++k) {
        const double r = (k + 0.5) * prof.dr;
        c += lg_radial(l, 0, w, r) * prof.mean[k] * r;
      }
      // weight l = 0 once, |l| > 0 twice (both signs share the radial shape)
      s += (l == 0 ? 1.0 : 2.0) * std::norm(c);
    }
    return s;
  };
  double best_w = waist_lo, best_c = -1.0;
  const double ratio = waist_hi / waist_lo;
  for (int i = 0; i < steps; ++i) {
    const double w = waist_lo * std::pow(ratio, i / double(steps - 1));
    const double c = capture(w);
    if (c > best_c) {
      best_c = c;
      best_w = w;
    }
  }
  double lo = std::max(waist_lo, best_w / std::pow(ratio, 1.0 / (steps - 1)));
  double hi = std::min(waist_hi, best_w * std::pow(ratio, 1.0 / (steps - 1)));
  for (int it = 0; it < 30; ++it) {
    const double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
    if (capture(m1) < capture(m2))
      lo = m1;
    else
      hi = m2;
  }
  return 0.5 * (lo + hi);
}

double balanced_capture_waist(const ComplexField& ring, const std::vector<int>& ls,
                              double waist_lo, double waist_hi, int steps) {
  if (!(waist_lo > 0.0) || !(waist_hi > waist_lo) || steps < 2 || ls.empty())
    throw empty_scan_error("balanced_capture_waist needs 0 < lo < hi, >= 2 steps, channels");
  const RadialProfile prof = radial_profile(ring, 512);
  auto channel = [&](int l, double w) {
    cdouble c(0.0, 0.0);
    for (size_t k = 0; k < prof.mean.size(); ++k) {
      const double r = (k + 0.5) * prof.dr;
      c += lg_radial(l, 0, w, r) * prof.mean[k] * r;
    }
    return std::norm(c);
  };
  auto worst = [&](double w) {
    double m = std::numeric_limits<double>::max();
    for (int l : ls) m = std::min(m, channel(l, w));
    return m;
  };
  double best_w = waist_lo, best_c = -1.0;
  const double ratio = waist_hi / waist_lo;
  for (int i = 0; i < steps; ++i) {
    const double w = waist_lo * std::pow(ratio, i / double(steps - 1));
    const double c = worst(w);
    if (c > best_c) {
      best_c = c;
      best_w = w;
    }
  }
  double lo = std::max(waist_lo, best_w / std::pow(ratio, 1.0 / (steps - 1)));
  double hi = std::min(waist_hi, best_w * std::pow(ratio, 1.0 / (steps - 1)));
  for (int it = 0; it < 30; ++it) {
    const double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
    if (worst(m1) < worst(m2))
      lo = m1;
    else
      hi = m2;
  }
  return 0.5 * (lo + hi);
}

FieldMoments intensity_moments(const ComplexField& f) {
  const GridSpec& g = f.grid();
  double w = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, syy = 0.0;
  for (int iy = 0; iy < g.ny; ++iy)
    for (int ix = 0; ix < g.nx; ++ix) {
      const double I = std::norm(f.at(ix, iy));
      const double x = g.x(ix), y = g.y(iy);
      w += I;
      sx += I * x;
      sy += I * y;
      sxx += I * x * x;
      syy += I * y * y;
    }
  FieldMoments m;
  if (w <= 0.0) return m;
  m.centroid_x = sx / w;
  m.centroid_y = sy / w;
  m.sigma_x = std::sqrt(std::max(0.0, sxx / w - m.centroid_x * m.centroid_x));
  m.sigma_y = std::sqrt(std::max(0.0, syy / w - m.centroid_y * m.centroid_y));
  return m;
}

int phase_winding(const ComplexField& f, double radius, int samples) {
  const GridSpec& g = f.grid();
  auto sample_phase = [&](double theta) {
    const double x = radius * std::cos(theta), y = radius * std::sin(theta);
    // nearest-neighbour is enough; winding is integer-quantized
    int ix = static_cast<int>(std::lround(x / g.dx)) + g.nx / 2;
    int iy = static_cast<int>(std::lround(y / g.dy)) + g.ny / 2;
    ix = std::clamp(ix, 0, g.nx - 1);
    iy = std::clamp(iy, 0, g.ny - 1);
    return std::arg(f.at(ix, iy));
  };
  double acc = 0.0;
  double prev = sample_phase(0.0);
  for (int i = 1; i <= samples; ++i) {
    const double th = 2.0 * kPi * i / samples;
    const double ph = sample_phase(th);
    double d = ph - prev;
    while (d > kPi) d -= 2.0 * kPi;
    while (d < -kPi) d += 2.0 * kPi;
    acc += d;
    prev = ph;
  }
  return static_cast<int>(std::lround(acc / (2.0 * kPi)));
}

}  // namespace oamsim
