#pragma once

#include <Eigen/Dense>

#include "oamsim/elements.hpp"
#include "oamsim/fieldgrid.hpp"

namespace oamsim {

struct Illumination {
  enum class Kind { plane, gaussian };
  Kind kind = Kind::plane;
  double waist = 1.0e-3;  // gaussian only
};

// Everything a classical scenario needs besides the slits themselves.
struct PipelineContext {
  GridSpec slit_grid = GridSpec::square(1024, 8.0e-3);
  GridSpec output_grid = GridSpec::square(1024, 16.0e-3);
  SorterSpec sorter;
  Illumination illumination;
  double slit_width = 150.0e-6;
  double slit_height = 1.0e-3;
  int pad_factor = 2;     // zero-pad before the lens to refine strip sampling
  int crop_to = 0;        // crop after the lens (physical mode); 0 = keep
  int l_max_basis = 9;    // decomposition basis spans -l_max..+l_max
  int p_max = 6;
  int detection_pad = 2;  // pad factor for fiber-coupling overlaps

  double pitch() const { return sorter.slit_pitch(slit_grid.wavelength); }
  SlitArray single_slit(double center_x) const;
};

// Illumination -> aperture -> unit transmitted flux -> lens -> reverse sorter.
// The returned field's energy is the fraction surviving the sorter.
ComplexField slit_to_ring(const PipelineContext& ctx, const SlitArray& slits,
                          Warnings* warnings = nullptr);

// Complex LG amplitudes per (l, p) and per input slit. Columns are measured
// with unit flux through one slit at a time; column norms stay <= 1 and the
// gap to the transmitted power is recorded as residual. detector_amps holds
// the p = 0 fiber-coupling amplitude of every channel mode for every slit,
// taken at the balanced detection waist.
struct TransferMatrix {
  std::vector<int> l_values;       // decomposition basis, ascending
  int p_max = 0;
  Eigen::MatrixXcd entries;        // rows (l, p) flattened, cols = slits
  std::vector<double> column_power;  // transmitted power per column
  std::vector<double> residual;      // column_power - in-basis power
  std::vector<int> channel_l;        // designed l per slit column
  Eigen::MatrixXcd detector_amps;    // rows = channels, cols = slits
  double spectrum_waist = 0.0;
  double detection_waist = 0.0;
  GridSpec grid;
  SorterSpec sorter;
  SlitArray slits;
  double wavelength = 0.0;

  int n_slits() const { return static_cast<int>(channel_l.size()); }
  int row(int l, int p) const;
  cdouble amp(int l, int p, int k) const { return entries(row(l, p), k); }
  double channel_power(int l, int k) const;  // summed over p
  std::vector<int> channels() const;         // sorted unique channel_l
};

TransferMatrix compute_transfer_matrix(const PipelineContext& ctx,
                                       const SlitArray& slits,
                                       Warnings* warnings = nullptr);

struct ScanResult {
  double position = 0.0;  // meters
  bool integer_l = false;
  OamSpectrum spectrum;
  ComplexField ring;
};

// One spectrum + ring image per slit position. The decomposition waist is
// picked once from the centered-slit ring and reused for every position.
std::vector<ScanResult> run_slit_scan(const PipelineContext& ctx,
                                      const std::vector<double>& positions,
                                      Warnings* warnings = nullptr);

struct SuperpositionResult {
  OamSpectrum spectrum;
  ComplexField ring;
};

SuperpositionResult run_superposition(const PipelineContext& ctx,
                                      const SlitArray& slits,
                                      Warnings* warnings = nullptr);

struct ConjugateResult {
  double matched = 0.0;     // gaussian coupling after e^{-il theta}
  double mismatched = 0.0;  // gaussian coupling after e^{+il theta}
  double matched_waist = 0.0;
};

ConjugateResult run_conjugate_test(const PipelineContext& ctx, int l,
                                   Warnings* warnings = nullptr);

// Azimuthal intensity profile at the ring radius band; used for lobe counts.
std::vector<double> azimuthal_profile(const ComplexField& ring, double r_lo,
                                      double r_hi, int bins = 360);
int count_azimuthal_lobes(const std::vector<double>& profile);

}  // namespace oamsim
