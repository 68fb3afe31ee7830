#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "oamsim/pipeline.hpp"

namespace oamsim {

// Amplitudes and relative phases of the two- or three-slit pair state.
// Polarization enters only as the deterministic pair-splitting label
// (photon A = H, photon B = V).
struct PathStateSpec {
  std::vector<double> amplitudes;  // 2 or 3 entries, >= 0, sum of squares 1
  std::vector<double> phases;      // size amplitudes.size() - 1, radians

  void validate() const;
};

// Pure state over slit labels: c_0 |S1 S1> + c_1 |S2 S2> (+ c_2 |S3 S3>),
// both photons always sharing one slit.
struct PathState {
  Eigen::VectorXcd amps;
};

PathState build_path_state(const PathStateSpec& spec);

struct ModeLabel {
  int l = 0;
  bool sink = false;

  bool operator==(const ModeLabel&) const = default;
};

// Density matrix over a truncated two-photon mode basis (per-photon labels =
// OAM channels plus one out-of-basis sink).
class BiphotonState {
 public:
  // trivial placeholder state (single sink mode); useful as a default member
  BiphotonState()
      : basis_{{0, true}}, rho_(Eigen::MatrixXcd::Identity(1, 1)) {}
  BiphotonState(std::vector<ModeLabel> basis, Eigen::MatrixXcd rho);

  static BiphotonState pure(std::vector<ModeLabel> basis,
                            const Eigen::VectorXcd& psi);

  const std::vector<ModeLabel>& basis() const { return basis_; }
  const Eigen::MatrixXcd& rho() const { return rho_; }
  int dim() const { return static_cast<int>(basis_.size()); }
  int index_of(int l) const;  // -1 when the channel is absent
  double min_eigenvalue() const;

  // Schmidt coefficients of the closest pure state (top eigenvector); exact
  // for pure rho.
  std::vector<double> schmidt_coefficients() const;

 private:
  std::vector<ModeLabel> basis_;
  Eigen::MatrixXcd rho_;
};

// Push the path state through the simulated transfer matrix: each photon of a
// pair picks up the detector-mode amplitudes of its slit column, everything
// else goes to the sink label (merged incoherently across slits, which keeps
// the state positive and the trace exact). Throws empty_support_error when
// the transferred norm is below 1e-6.
BiphotonState transfer_to_oam(const PathState& path, const TransferMatrix& T,
                              Warnings* warnings = nullptr);

// rho -> (1 - white) D_dephase(rho) + white I / dim^2, where D scales all
// off-diagonal elements by (1 - dephase).
BiphotonState apply_noise(const BiphotonState& state, double white, double dephase);

// Either a basis mode |l> or the superposition (|l1> + e^{i phase} |l2>)/sqrt(2).
struct MeasurementSetting {
  int l1 = 0;
  std::optional<int> l2;
  double phase = 0.0;

  static MeasurementSetting basis_mode(int l) { return {l, std::nullopt, 0.0}; }
  static MeasurementSetting superposition(int l1, int l2, double phase) {
    return {l1, l2, phase};
  }
  // Orthogonal superposition within the same 2D subspace.
  MeasurementSetting complement() const;
};

double coincidence_probability(const BiphotonState& state,
                               const MeasurementSetting& a,
                               const MeasurementSetting& b);

struct CountRecord {
  MeasurementSetting setting_a;
  MeasurementSetting setting_b;
  double expected_rate = 0.0;  // pairs / s
  long long count = 0;
  double integration_s = 0.0;
};

using SettingPair = std::pair<MeasurementSetting, MeasurementSetting>;

// Poisson-sampled coincidences, one independent stream per setting pair so
// the sweep is reproducible under a single seed regardless of ordering.
std::vector<CountRecord> sample_counts(const BiphotonState& state,
                                       std::span<const SettingPair> settings,
                                       double rate_scale, double time,
                                       std::uint64_t seed);

// White-noise level w such that the post-selected fidelity of the transferred
// state against `target` equals target_fidelity; plain bisection.
double calibrate_white_noise(const BiphotonState& clean,
                             const std::vector<double>& target_amplitudes,
                             double target_fidelity, double dephase = 0.0);

// Post-selected fidelity <psi_t | rho_sig | psi_t> with rho restricted to the
// channel block and renormalized; target phases gauge-aligned like the
// estimator does.
double direct_fidelity(const BiphotonState& state,
                       const std::vector<double>& target_amplitudes);

// c^dagger M c for the target amplitudes (unit-normalized internally), with
// the target's free phases either zero or gauge-aligned to the coherence
// phases of the correlated matrix M = <ii|rho|jj>.
double gauge_fidelity(const Eigen::MatrixXcd& correlated,
                      const std::vector<double>& amplitudes,
                      bool fit_phases = true);

}  // namespace oamsim
