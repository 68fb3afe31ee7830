#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "oamsim/experiment.hpp"

namespace oamsim {

// Parsed run configuration; every section has working defaults, the JSON
// schema is versioned and unknown keys are rejected.
struct RunConfig {
  PipelineContext ctx;
  SlitArray slits;
  PathStateSpec state{{1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0)}, {0.0}};
  double white = 0.0;
  double dephase = 0.0;
  double rate_pairs_per_s = 2000.0;
  double integration_s = 1.0;
  int fringe_steps = 16;
  int mc_trials = 200;
  ChshSettings chsh = ChshSettings::optimal(-3, 0);
  std::uint64_t seed = 1;
  std::string out_dir = "out";

  WitnessExperimentConfig witness_config() const;
  ChshExperimentConfig chsh_config() const;
};

RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::filesystem::path& file);
RunConfig load_preset(const std::string& name);

// Search order: OAMSIM_DATA_DIR, the source tree, <exe>/../share/oamsim.
std::filesystem::path find_data_file(const std::string& relative);

std::string config_schema_version();

}  // namespace oamsim
