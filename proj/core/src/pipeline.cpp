#include "oamsim/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

namespace oamsim {

namespace {

constexpr double kPi = std::numbers::pi;

ComplexField make_illumination(const PipelineContext& ctx) {
  ComplexField f(ctx.slit_grid);
  if (ctx.illumination.kind == Illumination::Kind::plane) {
    for (auto& c : f.data()) c = 1.0;
  } else {
    const GridSpec& g = ctx.slit_grid;
    const double w = ctx.illumination.waist;
    for (int iy = 0; iy < g.ny; ++iy)
      for (int ix = 0; ix < g.nx; ++ix) {
        const double r2 = g.x(ix) * g.x(ix) + g.y(iy) * g.y(iy);
        f.at(ix, iy) = std::exp(-r2 / (w * w));
      }
  }
  return f;
}

// Waist for the (l, p) spectrum basis: p = 0 capture over the swept channel
// range, clamped so the whole basis fits the output window.
double spectrum_waist(const PipelineContext& ctx, const ComplexField& ring0,
                      int l_capture) {
  const double hi = max_fitting_waist(ctx.output_grid, ctx.l_max_basis, ctx.p_max);
  return ring_capture_waist(ring0, l_capture, 0.05 * hi, hi);
}

}  // namespace

SlitArray PipelineContext::single_slit(double center_x) const {
  SlitArray sl;
  sl.height = slit_height;
  sl.slits = {{center_x, slit_width, 1.0, 0.0}};
  return sl;
}

ComplexField slit_to_ring(const PipelineContext& ctx, const SlitArray& slits,
                          Warnings* warnings) {
  ComplexField ap = apply_aperture(make_illumination(ctx), slits).normalized();
  ComplexField strip = lens_and_focus(pad_field(ap, ctx.pad_factor), ctx.sorter.f);
  if (ctx.crop_to > 0) strip = crop_field(strip, ctx.crop_to);
  if (ctx.sorter.mode == SorterMode::ideal_remap)
    return sorter_reverse(strip, ctx.sorter, ctx.output_grid, warnings);
  return sorter_reverse(strip, ctx.sorter, warnings);
}

int TransferMatrix::row(int l, int p) const {
  auto it = std::lower_bound(l_values.begin(), l_values.end(), l);
  if (it == l_values.end() || *it != l || p < 0 || p > p_max)
    throw config_error("transfer matrix has no (l, p) = (" + std::to_string(l) +
                       ", " + std::to_string(p) + ") row");
  return static_cast<int>(it - l_values.begin()) * (p_max + 1) + p;
}

double TransferMatrix::channel_power(int l, int k) const {
  double s = 0.0;
  for (int p = 0; p <= p_max; ++p) s += std::norm(amp(l, p, k));
  return s;
}

std::vector<int> TransferMatrix::channels() const {
  std::set<int> set(channel_l.begin(), channel_l.end());
  return {set.begin(), set.end()};
}

TransferMatrix compute_transfer_matrix(const PipelineContext& ctx,
                                       const SlitArray& slits,
                                       Warnings* warnings) {
  slits.validate();
  const double pitch = ctx.pitch();
  const int n = static_cast<int>(slits.slits.size());

  TransferMatrix T;
  T.p_max = ctx.p_max;
  for (int l = -ctx.l_max_basis; l <= ctx.l_max_basis; ++l) T.l_values.push_back(l);
  T.grid = ctx.output_grid;
  T.sorter = ctx.sorter;
  T.slits = slits;
  T.wavelength = ctx.slit_grid.wavelength;

  std::vector<ComplexField> rings;
  rings.reserve(n);
  for (int k = 0; k < n; ++k) {
    SlitArray one;
    one.height = slits.height;
    one.slits = {slits.slits[k]};
    one.slits[0].transmission = 1.0;
    one.slits[0].phase = 0.0;
    rings.push_back(slit_to_ring(ctx, one, warnings));
    T.channel_l.push_back(
        static_cast<int>(std::lround(slits.slits[k].center_x / pitch)));
  }

  const std::vector<int> chans = T.channels();
  int l_abs_max = 0;
  for (int l : chans) l_abs_max = std::max(l_abs_max, std::abs(l));

  T.spectrum_waist = spectrum_waist(ctx, rings[0].normalized(), l_abs_max);
  ModeBasis basis(ctx.output_grid, -ctx.l_max_basis, ctx.l_max_basis, ctx.p_max,
                  T.spectrum_waist);

  // Detection overlaps live on a padded copy so the balanced waist is not
  // limited by the (l, p) basis fit.
  const ComplexField ring0_pad = pad_field(rings[0], ctx.detection_pad);
  std::vector<int> abs_ls;
  for (int l : chans) abs_ls.push_back(std::abs(l));
  std::sort(abs_ls.begin(), abs_ls.end());
  abs_ls.erase(std::unique(abs_ls.begin(), abs_ls.end()), abs_ls.end());
  const double det_hi = max_fitting_waist(ring0_pad.grid(), l_abs_max, 0);
  T.detection_waist =
      balanced_capture_waist(ring0_pad.normalized(), abs_ls, 0.05 * det_hi, det_hi);

  std::vector<ComplexField> det_modes;
  for (int l : chans)
    det_modes.push_back(lg_mode({l, 0, T.detection_waist}, ring0_pad.grid()));

  T.entries.resize(static_cast<int>(T.l_values.size()) * (ctx.p_max + 1), n);
  T.detector_amps.resize(static_cast<int>(chans.size()), n);
  T.column_power.resize(n);
  T.residual.resize(n);

  for (int k = 0; k < n; ++k) {
    T.column_power[k] = rings[k].energy();
    const OamSpectrum spec = basis.decompose(rings[k]);
    double in_basis = 0.0;
    for (size_t idx = 0; idx < spec.entries.size(); ++idx) {
      T.entries(static_cast<int>(idx), k) = spec.entries[idx].amplitude;
      in_basis += std::norm(spec.entries[idx].amplitude);
    }
    T.residual[k] = std::max(0.0, T.column_power[k] - in_basis);
    const ComplexField ring_pad = pad_field(rings[k], ctx.detection_pad);
    for (size_t c = 0; c < chans.size(); ++c)
      T.detector_amps(static_cast<int>(c), k) = overlap(det_modes[c], ring_pad);
  }
  return T;
}

std::vector<ScanResult> run_slit_scan(const PipelineContext& ctx,
                                      const std::vector<double>& positions,
                                      Warnings* warnings) {
  const double pitch = ctx.pitch();
  int l_cap = 1;
  for (double pos : positions)
    l_cap = std::max(l_cap, static_cast<int>(std::ceil(std::abs(pos / pitch))));
  l_cap = std::min(l_cap, ctx.l_max_basis);

  const ComplexField ring0 =
      slit_to_ring(ctx, ctx.single_slit(0.0), nullptr).normalized();
  const double waist = spectrum_waist(ctx, ring0, l_cap);
  ModeBasis basis(ctx.output_grid, -ctx.l_max_basis, ctx.l_max_basis, ctx.p_max,
                  waist);

  std::vector<ScanResult> out;
  out.reserve(positions.size());
  for (double pos : positions) {
    const double l_frac = pos / pitch;
    const bool integer_l = std::abs(l_frac - std::lround(l_frac)) < 1.0e-9;
    ComplexField ring = slit_to_ring(ctx, ctx.single_slit(pos), warnings).normalized();
    OamSpectrum spec = basis.decompose(ring);
    out.push_back({pos, integer_l, std::move(spec), std::move(ring)});
  }
  return out;
}

SuperpositionResult run_superposition(const PipelineContext& ctx,
                                      const SlitArray& slits,
                                      Warnings* warnings) {
  if (slits.slits.size() < 2)
    throw config_error("run_superposition needs at least two slits");
  SuperpositionResult res{
      OamSpectrum{},
      slit_to_ring(ctx, slits, warnings).normalized(),
  };
  const double waist = spectrum_waist(
      ctx, slit_to_ring(ctx, ctx.single_slit(slits.slits[0].center_x), nullptr)
               .normalized(),
      std::min(ctx.l_max_basis,
               static_cast<int>(std::ceil(
                   std::abs(slits.slits.back().center_x) / ctx.pitch())) +
                   1));
  res.spectrum = oam_spectrum(res.ring, -ctx.l_max_basis, ctx.l_max_basis,
                              ctx.p_max, waist);
  return res;
}

ConjugateResult run_conjugate_test(const PipelineContext& ctx, int l,
                                   Warnings* warnings) {
  if (std::abs(l) > 10)
    throw config_error("conjugate test covers |l| <= 10");
  const double pitch = ctx.pitch();
  ComplexField ring = slit_to_ring(ctx, ctx.single_slit(l * pitch), warnings)
                          .normalized();
  const GridSpec& g = ring.grid();

  ComplexField matched = ring, mismatched = ring;
  for (int iy = 0; iy < g.ny; ++iy)
    for (int ix = 0; ix < g.nx; ++ix) {
      const double th = std::atan2(g.y(iy), g.x(ix));
      matched.at(ix, iy) *= std::polar(1.0, -l * th);
      mismatched.at(ix, iy) *= std::polar(1.0, +l * th);
    }

  ConjugateResult res;
  const double w_hi = 0.45 * std::min(g.window_x(), g.window_y());
  res.matched = gaussian_coupling(matched, 0.01 * w_hi, w_hi, 24, &res.matched_waist);
  if (l == 0) {
    res.mismatched = res.matched;
  } else {
    res.mismatched = gaussian_coupling(mismatched, 0.01 * w_hi, w_hi, 24, nullptr);
  }
  return res;
}

std::vector<double> azimuthal_profile(const ComplexField& ring, double r_lo,
                                      double r_hi, int bins) {
  const GridSpec& g = ring.grid();
  std::vector<double> acc(bins, 0.0);
  std::vector<long long> cnt(bins, 0);
  for (int iy = 0; iy < g.ny; ++iy)
    for (int ix = 0; ix < g.nx; ++ix) {
      const double x = g.x(ix), y = g.y(iy);
      const double r = std::hypot(x, y);
      if (r < r_lo || r > r_hi) continue;
      const double th = std::atan2(y, x);
      int b = static_cast<int>((th + kPi) / (2.0 * kPi) * bins);
      b = std::clamp(b, 0, bins - 1);
      acc[b] += std::norm(ring.at(ix, iy));
      ++cnt[b];
    }
  for (int b = 0; b < bins; ++b)
    if (cnt[b] > 0) acc[b] /= static_cast<double>(cnt[b]);
  return acc;
}

int count_azimuthal_lobes(const std::vector<double>& profile) {
  const int n = static_cast<int>(profile.size());
  if (n < 3) return 0;
  double max_v = *std::max_element(profile.begin(), profile.end());
  if (max_v <= 0.0) return 0;
  int lobes = 0;
  for (int i = 0; i < n; ++i) {
    const double prev = profile[(i + n - 1) % n];
    const double next = profile[(i + 1) % n];
    const double v = profile[i];
    if (v > prev && v >= next && v > 0.25 * max_v) ++lobes;
  }
  return lobes;
}

}  // namespace oamsim
