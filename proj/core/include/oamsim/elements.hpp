#pragma once

#include <optional>
#include <string>
#include <vector>

#include "oamsim/fieldgrid.hpp"

namespace oamsim {

struct Slit {
  double center_x = 0.0;      // meters
  double width = 100.0e-6;    // meters
  double transmission = 1.0;  // [0, 1]
  double phase = 0.0;         // radians
};

// 1 to N vertical slits; the aperture for classical runs and the path
// alphabet for the biphoton layer.
struct SlitArray {
  std::vector<Slit> slits;
  double height = 1.0e-3;  // meters, common to all slits

  void validate() const;  // non-overlap, widths > 0, transmissions in [0, 1]
};

enum class SorterMode { ideal_remap, physical_phases };

// Log-polar mode-sorter geometry. `a` is the azimuthal scale (the unwrapped
// strip spans v in [-pi a, pi a]), `b` the radial scale (strip line u = 0 maps
// to ring radius b), `f` the lens focal length, which also sets the element
// separation in physical mode.
struct SorterSpec {
  double a = 2.578e-4;
  double b = 2.0e-3;
  double f = 0.3;
  SorterMode mode = SorterMode::ideal_remap;

  void validate() const;
  // Slit-plane displacement producing one OAM quantum through the 2f lens.
  double slit_pitch(double wavelength) const;
};

// Pointwise aperture transmission/phase mask with area-weighted edge pixels.
// Throws unresolved_slit_error if any slit is narrower than 3 dx.
ComplexField apply_aperture(const ComplexField& f, const SlitArray& slits);

// Band-limited angular-spectrum free-space propagation; unitary on the kept
// band, hard circular frequency cutoff. Warns (code "band-limit") when the
// cutoff removes more than 1e-6 of the power.
ComplexField propagate(const ComplexField& f, double distance,
                       Warnings* warnings = nullptr);

// Exact 2f lens Fourier transform, kernel e^{-i 2 pi (x x' + y y')/(lambda f)}.
// The output grid pitch is lambda f / (n dx), so the caller sees the physical
// back-focal-plane sampling.
ComplexField lens_and_focus(const ComplexField& f, double focal);

// Mode sorter operated in reverse (positions -> OAM). In ideal_remap mode this
// is the energy-preserving inverse log-polar remap r = b exp(-u/a),
// theta = v/a with u along +y, v along -x of the input strip plane. In
// physical_phases mode it is phase element -> propagate(f) -> phase element
// with the freeform phases from sorter_element1_phase/element2_phase.
// Warns (code "annulus-loss") when more than 1% of the input energy lies
// outside the consumed strip band.
ComplexField sorter_reverse(const ComplexField& f, const SorterSpec& spec,
                            Warnings* warnings = nullptr);
ComplexField sorter_reverse(const ComplexField& f, const SorterSpec& spec,
                            const GridSpec& out_grid,
                            Warnings* warnings = nullptr);

// Forward sorter (OAM -> positions); the exact inverse of sorter_reverse in
// ideal_remap mode.
ComplexField sorter_forward(const ComplexField& f, const SorterSpec& spec,
                            Warnings* warnings = nullptr);
ComplexField sorter_forward(const ComplexField& f, const SorterSpec& spec,
                            const GridSpec& out_grid,
                            Warnings* warnings = nullptr);

// Freeform element phases (radians) at a point of the element plane. Element 1
// unwraps ring -> strip, element 2 flattens its residual phase; both include
// the quadratic term that folds the f-separation Fresnel kernel into the
// surfaces, as in the refractive implementation.
double sorter_element1_phase(const SorterSpec& spec, double wavelength, double x,
                             double y);
double sorter_element2_phase(const SorterSpec& spec, double wavelength, double x,
                             double y);

// Zero-pad into a larger centered window with the same pitch (factor a power
// of two); used to refine far-field sampling before a lens stage.
ComplexField pad_field(const ComplexField& f, int factor);

// Keep the centered n x n sub-window (same pitch). n must be a power of two
// not larger than the field size.
ComplexField crop_field(const ComplexField& f, int n);

// Zero the field outside a centered circular aperture.
ComplexField apply_circular_aperture(const ComplexField& f, double radius);

}  // namespace oamsim
