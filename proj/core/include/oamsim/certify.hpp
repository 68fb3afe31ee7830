#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <vector>

#include "oamsim/biphoton.hpp"

namespace oamsim {

// Schmidt coefficients, sorted decreasing, sum of squares 1.
struct SchmidtVector {
  std::vector<double> lambda;

  void validate() const;
  int dim() const { return static_cast<int>(lambda.size()); }
  static SchmidtVector from_amplitudes(std::vector<double> amps);  // sorts + normalizes
};

struct SchmidtDecomposition {
  SchmidtVector values;
  Eigen::MatrixXcd basis_a;  // columns = local Schmidt vectors
  Eigen::MatrixXcd basis_b;
};

// Schmidt decomposition of a pure bipartite state given as its coefficient
// matrix psi(i, j) = <i j | psi>.
SchmidtDecomposition schmidt_decompose(const Eigen::MatrixXcd& coeff);

struct FringePoint {
  double phase = 0.0;
  double value = 0.0;  // count or probability
};

// Weighted least squares of A sin^2((phi + delta)/2) + B, via the linear form
// c0 + c1 cos(phi) + c2 sin(phi). Shot-noise weights max(value, 1).
struct FringeFit {
  double amplitude = 0.0;   // A
  double baseline = 0.0;    // B
  double offset = 0.0;      // delta
  double visibility = 0.0;  // A / (A + 2B)
  double sigma_visibility = 0.0;
  double sigma_offset = 0.0;
  double sigma_amplitude = 0.0;
};

FringeFit fit_visibility(std::span<const FringePoint> points);

// Subspace fringe visibilities plus the D x D correlated populations table,
// everything normalized to the summed basis-pair counts.
struct VisibilitySet {
  std::vector<int> channels;  // D labels, ascending
  std::map<std::pair<int, int>, FringeFit> fringes;     // key (la, lb), la < lb
  std::map<std::pair<int, int>, double> populations;    // (la, lb) pair populations

  double population(int la, int lb) const;
};

// Correlated matrix estimate: entry (i, j) approximates <ii|rho|jj>. Diagonal
// entries are the measured correlated populations. Emits a "bias" warning when
// anti-correlated populations exceed 1%.
struct DensityEstimate {
  std::vector<int> channels;
  Eigen::MatrixXcd correlated;
};

DensityEstimate estimate_matrix_elements(const VisibilitySet& vis,
                                         Warnings* warnings = nullptr);

// F = sum_ij lambda_i lambda_j <ii|rho|jj> with the target's free phases
// aligned to the measured coherences (coordinate ascent, exact for D = 2).
double fidelity(const DensityEstimate& est, const SchmidtVector& target,
                bool fit_target_phases = true);

// f_d = sum of the d largest lambda_i^2; the tight fidelity ceiling for
// states of Schmidt rank d.
double schmidt_bound(const SchmidtVector& target, int d);

struct WitnessReport {
  SchmidtVector target;
  double fidelity = 0.0;
  double sigma_fidelity = 0.0;
  std::vector<double> bounds;        // f_1 .. f_{D-1}
  std::vector<double> significance;  // (F - f_d) / sigma
  int certified_dimension = 1;
};

WitnessReport witness_verdict(double fidelity_value, double sigma,
                              const SchmidtVector& target);

// Brute-force check of the bound: maximize |<phi_d|psi>|^2 over Schmidt-rank-d
// states phi_d = (U x V) sum_{i<d} mu_i |ii> by alternating polar updates from
// random starts. Independent of schmidt_bound by construction.
double oracle_max_overlap(const SchmidtVector& target, int d, int restarts = 200,
                          std::uint64_t seed = 1);

struct ChshSettings {
  int la = -3, lb = 0;        // measurement subspace
  double alpha = 0.0;
  double alpha_prime = 0.0;
  double beta = 0.0;
  double beta_prime = 0.0;

  // Analytic optimum for the |la la> + |lb lb> Bell state with E = cos(a + b).
  static ChshSettings optimal(int la, int lb);
};

struct ChshResult {
  double S = 0.0;
  double sigma = 0.0;              // 0 in analytic mode
  std::array<double, 4> E{};       // E(a,b), E(a',b), E(a,b'), E(a',b')
};

// Analytic mode: correlations straight from the state.
ChshResult chsh_value(const BiphotonState& state, const ChshSettings& settings);

// Count mode: 16 records (4 setting pairs x 4 outcome combinations) in the
// order produced by chsh_setting_pairs. sigma via error_mc.
std::vector<SettingPair> chsh_setting_pairs(const ChshSettings& settings);
ChshResult chsh_value(std::span<const CountRecord> records, int mc_trials = 200,
                      std::uint64_t seed = 1);

// Standard deviation of an estimator over Poisson-resampled count sets.
double error_mc(std::span<const CountRecord> records,
                const std::function<double(std::span<const CountRecord>)>& estimator,
                int trials, std::uint64_t seed);

}  // namespace oamsim
