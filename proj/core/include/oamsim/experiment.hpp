#pragma once

#include <cstdint>

#include "oamsim/certify.hpp"

namespace oamsim {

// One full entanglement-certification run: transfer matrix, state transfer,
// subspace fringes, Poissonian counts, visibility fits, matrix-element
// estimation and the witness verdict, all under one seed.
struct WitnessExperimentConfig {
  PipelineContext ctx;
  SlitArray slits;
  PathStateSpec state;
  double white = 0.0;
  double dephase = 0.0;
  double rate_pairs_per_s = 2000.0;
  double integration_s = 1.0;
  int fringe_steps = 16;
  int mc_trials = 200;
  std::uint64_t seed = 1;
  bool fit_target = false;  // search target amplitudes for peak significance
};

struct WitnessOutcome {
  TransferMatrix transfer;
  BiphotonState state;  // after noise
  std::vector<CountRecord> fringe_counts;      // grouped per subspace
  std::vector<CountRecord> population_counts;  // D x D basis pairs
  VisibilitySet visibilities;
  DensityEstimate estimate;
  WitnessReport report;
  Warnings warnings;
};

WitnessOutcome run_witness(const WitnessExperimentConfig& config);

// Target amplitudes maximizing (F - f_{D-1}) / sigma_F on a fixed estimate;
// mirrors picking the ideal state with the best statistical significance.
SchmidtVector optimize_target(const DensityEstimate& est, double sigma_hint);

enum class ChshStatePrep { pipeline, ideal, product };

struct ChshExperimentConfig {
  PipelineContext ctx;
  SlitArray slits;
  PathStateSpec state;
  double white = 0.0;
  double dephase = 0.0;
  ChshSettings settings = ChshSettings::optimal(-3, 0);
  bool analytic = false;  // probabilities instead of sampled counts
  ChshStatePrep prep = ChshStatePrep::pipeline;
  double rate_pairs_per_s = 2000.0;
  double integration_s = 1.0;
  int mc_trials = 200;
  std::uint64_t seed = 1;
};

struct ChshOutcome {
  ChshResult result;
  std::vector<CountRecord> counts;  // empty in analytic mode
  Warnings warnings;
};

ChshOutcome run_chsh(const ChshExperimentConfig& config);

// Post-selected fidelity of the fully transferred noisy state against the
// path-state amplitudes; the quantity the white-noise calibration targets.
double pipeline_direct_fidelity(const WitnessExperimentConfig& config);

struct SelftestReport {
  int checks = 0;
  int failures = 0;
  std::vector<std::string> lines;

  bool ok() const { return failures == 0; }
};

// Oracle-vs-bound sweep, propagation unitarity, LG orthonormality and the
// transfer-matrix crosstalk assertion, summarized pass/fail.
SelftestReport run_selftest(const PipelineContext& ctx, const SlitArray& slits,
                            std::uint64_t seed);

}  // namespace oamsim
