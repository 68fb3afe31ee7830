#pragma once

#include <complex>
#include <map>
#include <span>
#include <vector>

#include "oamsim/errors.hpp"

namespace oamsim {

using cdouble = std::complex<double>;

// Uniform 2D sampling grid. Coordinates are centered: x = (ix - nx/2) * dx,
// so index nx/2 sits on the optical axis (nx, ny are powers of two >= 64).
struct GridSpec {
  int nx = 1024;
  int ny = 1024;
  double dx = 8.0e-3 / 1024;
  double dy = 8.0e-3 / 1024;
  double wavelength = 810.0e-9;

  void validate() const;
  double x(int ix) const { return (ix - nx / 2) * dx; }
  double y(int iy) const { return (iy - ny / 2) * dy; }
  double window_x() const { return nx * dx; }
  double window_y() const { return ny * dy; }
  double cell_area() const { return dx * dy; }
  bool operator==(const GridSpec&) const = default;

  static GridSpec square(int n, double window, double wavelength = 810.0e-9);
};

// Complex scalar amplitude sampled on a GridSpec; the carrier for every
// optical plane in the simulation. Row-major, index = iy * nx + ix.
class ComplexField {
 public:
  explicit ComplexField(const GridSpec& grid);

  const GridSpec& grid() const { return grid_; }
  cdouble& at(int ix, int iy) { return data_[static_cast<size_t>(iy) * grid_.nx + ix]; }
  const cdouble& at(int ix, int iy) const {
    return data_[static_cast<size_t>(iy) * grid_.nx + ix];
  }
  std::span<cdouble> data() { return data_; }
  std::span<const cdouble> data() const { return data_; }

  double energy() const;  // sum |a|^2 dx dy (continuous L2 norm squared)
  double norm() const;
  ComplexField normalized() const;  // throws normalization_error on ~zero fields
  void scale(cdouble s);

 private:
  GridSpec grid_;
  std::vector<cdouble> data_;
};

struct LGModeSpec {
  int l = 0;       // azimuthal index, OAM quanta per photon
  int p = 0;       // radial index, >= 0
  double waist = 1.0e-3;
};

// Laguerre-Gauss amplitude at the waist plane, unit continuous L2 norm.
// Throws window_too_small_error when the 1e-4 energy radius of the mode
// exceeds the grid half-window.
ComplexField lg_mode(const LGModeSpec& spec, const GridSpec& grid);

// Discrete L2 inner product sum(conj(a) * b) dx dy. Grids must match.
cdouble overlap(const ComplexField& a, const ComplexField& b);

struct OamSpectrum {
  struct Entry {
    int l = 0;
    int p = 0;
    cdouble amplitude;
  };
  std::vector<Entry> entries;          // per (l, p) amplitudes
  std::map<int, double> power_by_l;    // |amplitude|^2 summed over p
  double residual = 0.0;               // out-of-basis power, >= 0
  double waist = 0.0;                  // basis waist used

  double power(int l) const;
  double total_power() const;
  double mean_l() const;   // power-weighted, in-basis part only
  int dominant_l() const;
  cdouble amplitude(int l, int p) const;
};

// Precomputed LG basis over l in [l_min, l_max], p in [0, p_max] at one waist.
// Building the basis dominates decomposition cost, so scenarios reuse it.
class ModeBasis {
 public:
  ModeBasis(const GridSpec& grid, int l_min, int l_max, int p_max, double waist);

  OamSpectrum decompose(const ComplexField& f) const;
  const GridSpec& grid() const { return grid_; }
  double waist() const { return waist_; }
  int l_min() const { return l_min_; }
  int l_max() const { return l_max_; }
  int p_max() const { return p_max_; }

 private:
  GridSpec grid_;
  int l_min_, l_max_, p_max_;
  double waist_;
  std::vector<ComplexField> modes_;
};

OamSpectrum oam_spectrum(const ComplexField& f, int l_min, int l_max, int p_max,
                         double waist);

// |<f | LG(0,0,waist)>|^2 for a unit-norm f.
double gaussian_coupling(const ComplexField& f, double waist);

// Coupling maximized over a waist scan in [waist_lo, waist_hi]; coarse
// geometric scan refined by golden-section. Throws empty_scan_error when the
// interval is empty or steps < 2.
double gaussian_coupling(const ComplexField& f, double waist_lo, double waist_hi,
                         int steps = 32, double* best_waist = nullptr);

// Waist that maximizes the p = 0 capture sum over the given l range; used to
// pick the detection basis waist, which no measured value pins down.
double best_p0_capture_waist(const ComplexField& f, int l_min, int l_max,
                             double waist_lo, double waist_hi, int steps = 32);

// Radial LG amplitude at the waist plane (unit 2D L2 norm including the
// azimuthal factor).
double lg_radial_amplitude(int l, int p, double waist, double r);

// Radius containing all but 1e-4 of the mode energy; lg_mode() rejects grids
// whose half-window is smaller.
double lg_fit_radius(int l, int p, double waist);

// Largest waist for which every mode with |l| <= l_max, p <= p_max fits the
// grid, found by bisection on lg_fit_radius.
double max_fitting_waist(const GridSpec& grid, int l_max, int p_max);

// Azimuthally averaged complex radial profile, n bins spanning (0, r_max].
struct RadialProfile {
  double dr = 0.0;
  std::vector<cdouble> mean;  // bin-averaged amplitude at r = (k + 0.5) dr
};
RadialProfile radial_profile(const ComplexField& f, int bins);

// Waist maximizing sum_{|l| <= l_max} |integral R_{l,0} rho(r) r dr|^2 for the
// azimuthal average rho of a sorter ring: the best single detection waist when
// every channel shares one ring intensity. Clamped to [waist_lo, waist_hi].
double ring_capture_waist(const ComplexField& ring, int l_max, double waist_lo,
                          double waist_hi, int steps = 48);

// Waist maximizing the weakest channel's p = 0 coupling over the given l set
// (one shared ring intensity). This is how the detection waist is aligned:
// low and high |l| pull in opposite directions and meet at the balance point.
double balanced_capture_waist(const ComplexField& ring, const std::vector<int>& ls,
                              double waist_lo, double waist_hi, int steps = 96);

// Intensity moments (used for beam-width and centroid checks).
struct FieldMoments {
  double centroid_x = 0.0;
  double centroid_y = 0.0;
  double sigma_x = 0.0;  // second-moment widths
  double sigma_y = 0.0;
};
FieldMoments intensity_moments(const ComplexField& f);

// Net phase winding (in units of 2*pi) accumulated counterclockwise around a
// circle of the given radius.
int phase_winding(const ComplexField& f, double radius, int samples = 720);

}  // namespace oamsim
