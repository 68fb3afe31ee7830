#include "oamsim/elements.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>

#include "fft.hpp"

namespace oamsim {

namespace {

constexpr double kPi = std::numbers::pi;

// Fractional overlap of [lo, hi] with the pixel [c - half, c + half], in [0, 1].
double coverage(double c, double half, double lo, double hi) {
  if (c - half >= lo && c + half <= hi) return 1.0;  // interior pixels exact
  const double a = std::max(lo, c - half);
  const double b = std::min(hi, c + half);
  return std::max(0.0, b - a) / (2.0 * half);
}

// Catmull-Rom kernel.
double cubic_w(double t) {
  t = std::abs(t);
  if (t < 1.0) return 1.0 + t * t * (1.5 * t - 2.5);
  if (t < 2.0) return 2.0 - t * (4.0 - t * (2.5 - 0.5 * t));
  return 0.0;
}

cdouble sample_bicubic(const ComplexField& f, double x, double y) {
  const GridSpec& g = f.grid();
  const double fx = x / g.dx + g.nx / 2;
  const double fy = y / g.dy + g.ny / 2;
  const int ix0 = static_cast<int>(std::floor(fx));
  const int iy0 = static_cast<int>(std::floor(fy));
  if (ix0 < 1 || ix0 > g.nx - 3 || iy0 < 1 || iy0 > g.ny - 3) {
    // near or past the border: bilinear on the clamped cell, zero outside
    if (fx < 0.0 || fy < 0.0 || fx > g.nx - 1 || fy > g.ny - 1)
      return cdouble(0.0, 0.0);
    const int jx = std::clamp(ix0, 0, g.nx - 2);
    const int jy = std::clamp(iy0, 0, g.ny - 2);
    const double tx = fx - jx, ty = fy - jy;
    return (1 - tx) * (1 - ty) * f.at(jx, jy) + tx * (1 - ty) * f.at(jx + 1, jy) +
           (1 - tx) * ty * f.at(jx, jy + 1) + tx * ty * f.at(jx + 1, jy + 1);
  }
  const double tx = fx - ix0, ty = fy - iy0;
  double wx[4], wy[4];
  for (int i = 0; i < 4; ++i) {
    wx[i] = cubic_w(tx - (i - 1));
    wy[i] = cubic_w(ty - (i - 1));
  }
  cdouble acc(0.0, 0.0);
  for (int j = 0; j < 4; ++j) {
    cdouble row(0.0, 0.0);
    for (int i = 0; i < 4; ++i) row += wx[i] * f.at(ix0 - 1 + i, iy0 - 1 + j);
    acc += wy[j] * row;
  }
  return acc;
}

// Boundary radius of a centered rectangular window at polar angle theta.
double window_radius(const GridSpec& g, double theta) {
  const double hx = 0.5 * g.window_x(), hy = 0.5 * g.window_y();
  const double c = std::abs(std::cos(theta)), s = std::abs(std::sin(theta));
  double r = std::numeric_limits<double>::max();
  if (c > 1e-12) r = std::min(r, hx / c);
  if (s > 1e-12) r = std::min(r, hy / s);
  return r;
}

ComplexField remap_reverse(const ComplexField& in, const SorterSpec& spec,
                           const GridSpec& out_grid, Warnings* warnings) {
  const GridSpec& gi = in.grid();
  ComplexField out(out_grid);
  const double a = spec.a, b = spec.b;

  // Output pixel (r, theta) samples the strip at u = -a ln(r/b) along +y and
  // v = a theta along -x; amplitude Jacobian a / r.
#pragma omp parallel for schedule(static)
  for (int iy = 0; iy < out_grid.ny; ++iy) {
    for (int ix = 0; ix < out_grid.nx; ++ix) {
      const double x = out_grid.x(ix), y = out_grid.y(iy);
      const double r = std::hypot(x, y);
      if (r < 1.0e-3 * std::min(out_grid.dx, out_grid.dy)) continue;
      const double theta = std::atan2(y, x);
      const double v = a * theta;
      const double u = -a * std::log(r / b);
      out.at(ix, iy) = sample_bicubic(in, -v, u) * (a / r);
    }
  }

  // Energy bookkeeping: rescale so the consumed part of the input survives
  // exactly; interpolation ripple must not leak or create power.
  double e_total = 0.0, e_consumed = 0.0;
  for (int iy = 0; iy < gi.ny; ++iy) {
    const double y = gi.y(iy);
    const double r_img = b * std::exp(-y / a);
    for (int ix = 0; ix < gi.nx; ++ix) {
      const double e = std::norm(in.at(ix, iy)) * gi.cell_area();
      e_total += e;
      const double v = -gi.x(ix);
      if (std::abs(v) > kPi * a) continue;
      if (r_img > window_radius(out_grid, v / a)) continue;
      e_consumed += e;
    }
  }
  if (e_total > 0.0 && (e_total - e_consumed) > 0.01 * e_total)
    warn(warnings, "annulus-loss",
         "sorter_reverse: " + std::to_string(100.0 * (e_total - e_consumed) / e_total) +
             "% of input energy falls outside the unwrapped band");
  const double e_out = out.energy();
  if (e_out > 0.0 && e_consumed > 0.0) out.scale(std::sqrt(e_consumed / e_out));
  return out;
}

ComplexField remap_forward(const ComplexField& in, const SorterSpec& spec,
                           const GridSpec& out_grid, Warnings* warnings) {
  const GridSpec& gi = in.grid();
  ComplexField out(out_grid);
  const double a = spec.a, b = spec.b;

#pragma omp parallel for schedule(static)
  for (int iy = 0; iy < out_grid.ny; ++iy) {
    for (int ix = 0; ix < out_grid.nx; ++ix) {
      const double v = -out_grid.x(ix);
      const double u = out_grid.y(iy);
      const double theta = v / a;
      if (std::abs(theta) > kPi) continue;
      const double r = b * std::exp(-u / a);
      const double sx = r * std::cos(theta), sy = r * std::sin(theta);
      out.at(ix, iy) = sample_bicubic(in, sx, sy) * (r / a);
    }
  }

  double e_total = 0.0, e_consumed = 0.0;
  const double v_max = std::min(kPi * a, 0.5 * out_grid.window_x());
  const double y_lim = 0.5 * out_grid.window_y();
  for (int iy = 0; iy < gi.ny; ++iy) {
    const double y = gi.y(iy);
    for (int ix = 0; ix < gi.nx; ++ix) {
      const double e = std::norm(in.at(ix, iy)) * gi.cell_area();
      e_total += e;
      const double x = gi.x(ix);
      const double r = std::hypot(x, y);
      if (r <= 0.0) continue;
      const double theta = std::atan2(y, x);
      if (std::abs(a * theta) > v_max) continue;
      if (std::abs(a * std::log(r / b)) > y_lim) continue;
      e_consumed += e;
    }
  }
  if (e_total > 0.0 && (e_total - e_consumed) > 0.01 * e_total)
    warn(warnings, "annulus-loss",
         "sorter_forward: " + std::to_string(100.0 * (e_total - e_consumed) / e_total) +
             "% of input energy falls outside the mapped annulus");
  const double e_out = out.energy();
  if (e_out > 0.0 && e_consumed > 0.0) out.scale(std::sqrt(e_consumed / e_out));
  return out;
}

ComplexField apply_phase(const ComplexField& f,
                         const std::function<double(double, double)>& phase) {
  ComplexField out = f;
  const GridSpec& g = f.grid();
#pragma omp parallel for schedule(static)
  for (int iy = 0; iy < g.ny; ++iy) {
    const double y = g.y(iy);
    for (int ix = 0; ix < g.nx; ++ix)
      out.at(ix, iy) *= std::polar(1.0, phase(g.x(ix), y));
  }
  return out;
}

}  // namespace

void SlitArray::validate() const {
  if (slits.empty()) throw config_error("slit array must contain at least one slit");
  if (!(height > 0.0)) throw config_error("slit height must be > 0");
  std::vector<std::pair<double, double>> spans;
  for (const auto& s : slits) {
    if (!(s.width > 0.0)) throw config_error("slit width must be > 0");
    if (s.transmission < 0.0 || s.transmission > 1.0)
      throw config_error("slit transmission must be in [0, 1]");
    spans.emplace_back(s.center_x - 0.5 * s.width, s.center_x + 0.5 * s.width);
  }
  std::sort(spans.begin(), spans.end());
  for (size_t i = 1; i < spans.size(); ++i)
    if (spans[i].first < spans[i - 1].second - 1e-15)
      throw config_error("slits overlap");
}

void SorterSpec::validate() const {
  if (!(a > 0.0) || !(b > 0.0) || !(f > 0.0))
    throw config_error("sorter scales a, b and focal length f must be > 0");
}

double SorterSpec::slit_pitch(double wavelength) const {
  return wavelength * f / (2.0 * kPi * a);
}

ComplexField apply_aperture(const ComplexField& f, const SlitArray& slits) {
  slits.validate();
  const GridSpec& g = f.grid();
  for (const auto& s : slits.slits)
    if (s.width < 3.0 * g.dx)
      throw unresolved_slit_error("slit width " + std::to_string(s.width) +
                                  " m below 3 dx = " + std::to_string(3.0 * g.dx) + " m");

  // Separable coverage mask; edge pixels weighted by overlap area so that the
  // transmitted power matches the geometric slit area.
  std::vector<double> ycov(g.ny);
  for (int iy = 0; iy < g.ny; ++iy)
    ycov[iy] = coverage(g.y(iy), 0.5 * g.dy, -0.5 * slits.height, 0.5 * slits.height);

  ComplexField out(g);
  for (const auto& s : slits.slits) {
    const cdouble t = std::polar(s.transmission, s.phase);
    for (int ix = 0; ix < g.nx; ++ix) {
      const double cx =
          coverage(g.x(ix), 0.5 * g.dx, s.center_x - 0.5 * s.width, s.center_x + 0.5 * s.width);
      if (cx == 0.0) continue;
      for (int iy = 0; iy < g.ny; ++iy) {
        if (ycov[iy] == 0.0) continue;
        out.at(ix, iy) += f.at(ix, iy) * t * cx * ycov[iy];
      }
    }
  }
  return out;
}

ComplexField propagate(const ComplexField& f, double distance, Warnings* warnings) {
  if (distance == 0.0) return f;
  const GridSpec& g = f.grid();
  const double k = 2.0 * kPi / g.wavelength;

  ComplexField out = f;
  fft::transform_2d(out.data(), g.nx, g.ny, -1);

  // Hard circular cutoff: evanescent waves plus the band limit that keeps the
  // periodic replicas from wrapping into the window at long throws.
  const double nu_x_lim =
      1.0 / (g.wavelength * std::sqrt(1.0 + std::pow(2.0 * distance / g.window_x(), 2)));
  const double nu_y_lim =
      1.0 / (g.wavelength * std::sqrt(1.0 + std::pow(2.0 * distance / g.window_y(), 2)));
  const double nu_lim = std::min({nu_x_lim, nu_y_lim, 1.0 / g.wavelength});
  const double kr_lim = 2.0 * kPi * nu_lim;

  double kept = 0.0, cut = 0.0;
  for (int iy = 0; iy < g.ny; ++iy) {
    const int my = iy < g.ny / 2 ? iy : iy - g.ny;
    const double ky = 2.0 * kPi * my / (g.ny * g.dy);
    for (int ix = 0; ix < g.nx; ++ix) {
      const int mx = ix < g.nx / 2 ? ix : ix - g.nx;
      const double kx = 2.0 * kPi * mx / (g.nx * g.dx);
      const double kr2 = kx * kx + ky * ky;
      cdouble& c = out.at(ix, iy);
      if (kr2 > kr_lim * kr_lim || kr2 >= k * k) {
        cut += std::norm(c);
        c = 0.0;
      } else {
        kept += std::norm(c);
        c *= std::polar(1.0, distance * std::sqrt(k * k - kr2));
      }
    }
  }
  if (cut > 1.0e-6 * (kept + cut) && kept + cut > 0.0)
    warn(warnings, "band-limit",
         "propagate: band limit truncated " + std::to_string(cut / (kept + cut)) +
             " of the power");

  fft::transform_2d(out.data(), g.nx, g.ny, +1);
  out.scale(1.0 / (static_cast<double>(g.nx) * g.ny));
  return out;
}

ComplexField lens_and_focus(const ComplexField& f, double focal) {
  if (!(focal > 0.0)) throw config_error("lens focal length must be > 0");
  const GridSpec& g = f.grid();
  GridSpec go = g;
  go.dx = g.wavelength * focal / (g.nx * g.dx);
  go.dy = g.wavelength * focal / (g.ny * g.dy);

  ComplexField out(go);
  std::copy(f.data().begin(), f.data().end(), out.data().begin());
  // shift / transform / shift realizes the centered kernel
  // e^{-i 2 pi (x x' + y y') / (lambda focal)} exactly for even nx, ny.
  fft::shift_2d(out.data(), g.nx, g.ny);
  fft::transform_2d(out.data(), g.nx, g.ny, -1);
  fft::shift_2d(out.data(), g.nx, g.ny);
  out.scale(g.cell_area() / (g.wavelength * focal));
  return out;
}

double sorter_element1_phase(const SorterSpec& spec, double wavelength, double x,
                             double y) {
  const double r = std::hypot(x, y);
  if (r <= 0.0) return 0.0;
  const double lf = wavelength * spec.f;
  return 2.0 * kPi * spec.a / lf *
             (-x * std::atan2(y, x) - y * std::log(r / spec.b) + y) -
         kPi * r * r / lf;
}

double sorter_element2_phase(const SorterSpec& spec, double wavelength, double x,
                             double y) {
  const double lf = wavelength * spec.f;
  return 2.0 * kPi * spec.a * spec.b / lf * std::exp(-y / spec.a) *
             std::sin(x / spec.a) -
         kPi * (x * x + y * y) / lf;
}

namespace {

// Clear apertures of the freeform elements: the corrector passes the unwrapped
// strip, the unwrapper passes the annulus. Beyond them the folded quadratic
// phase would alias on practical grids, as in a real part it would walk off
// the substrate.
double element1_aperture(const SorterSpec& spec) { return 2.5 * spec.b; }
double element2_aperture(const SorterSpec& spec) { return 1.25 * kPi * spec.a; }

}  // namespace

ComplexField sorter_reverse(const ComplexField& f, const SorterSpec& spec,
                            const GridSpec& out_grid, Warnings* warnings) {
  spec.validate();
  if (spec.mode == SorterMode::ideal_remap) return remap_reverse(f, spec, out_grid, warnings);
  const double wl = f.grid().wavelength;
  ComplexField stage = apply_circular_aperture(f, element2_aperture(spec));
  stage = apply_phase(
      stage, [&](double x, double y) { return sorter_element2_phase(spec, wl, x, y); });
  stage = propagate(stage, spec.f, warnings);
  stage = apply_circular_aperture(stage, element1_aperture(spec));
  return apply_phase(
      stage, [&](double x, double y) { return sorter_element1_phase(spec, wl, x, y); });
}

ComplexField sorter_reverse(const ComplexField& f, const SorterSpec& spec,
                            Warnings* warnings) {
  return sorter_reverse(f, spec, f.grid(), warnings);
}

ComplexField sorter_forward(const ComplexField& f, const SorterSpec& spec,
                            const GridSpec& out_grid, Warnings* warnings) {
  spec.validate();
  if (spec.mode == SorterMode::ideal_remap) return remap_forward(f, spec, out_grid, warnings);
  const double wl = f.grid().wavelength;
  ComplexField stage = apply_circular_aperture(f, element1_aperture(spec));
  stage = apply_phase(
      stage, [&](double x, double y) { return sorter_element1_phase(spec, wl, x, y); });
  stage = propagate(stage, spec.f, warnings);
  stage = apply_circular_aperture(stage, element2_aperture(spec));
  return apply_phase(
      stage, [&](double x, double y) { return sorter_element2_phase(spec, wl, x, y); });
}

ComplexField sorter_forward(const ComplexField& f, const SorterSpec& spec,
                            Warnings* warnings) {
  return sorter_forward(f, spec, f.grid(), warnings);
}

ComplexField crop_field(const ComplexField& f, int n) {
  const GridSpec& g = f.grid();
  if (n >= g.nx && n >= g.ny) return f;
  GridSpec gc = g;
  gc.nx = std::min(n, g.nx);
  gc.ny = std::min(n, g.ny);
  gc.validate();
  ComplexField out(gc);
  const int ox = (g.nx - gc.nx) / 2, oy = (g.ny - gc.ny) / 2;
  for (int iy = 0; iy < gc.ny; ++iy)
    for (int ix = 0; ix < gc.nx; ++ix) out.at(ix, iy) = f.at(ix + ox, iy + oy);
  return out;
}

ComplexField apply_circular_aperture(const ComplexField& f, double radius) {
  ComplexField out = f;
  const GridSpec& g = f.grid();
  for (int iy = 0; iy < g.ny; ++iy)
    for (int ix = 0; ix < g.nx; ++ix)
      if (std::hypot(g.x(ix), g.y(iy)) > radius) out.at(ix, iy) = 0.0;
  return out;
}

ComplexField pad_field(const ComplexField& f, int factor) {
  if (factor <= 1) return f;
  const GridSpec& g = f.grid();
  GridSpec gp = g;
  gp.nx = g.nx * factor;
  gp.ny = g.ny * factor;
  gp.validate();
  ComplexField out(gp);
  const int ox = (gp.nx - g.nx) / 2, oy = (gp.ny - g.ny) / 2;
  for (int iy = 0; iy < g.ny; ++iy)
    for (int ix = 0; ix < g.nx; ++ix) out.at(ix + ox, iy + oy) = f.at(ix, iy);
  return out;
}

}  // namespace oamsim
