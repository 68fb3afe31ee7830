// oamsim: slit -> mode-sorter OAM simulation, entanglement transfer and
// certification. Subcommands: generate, witness, chsh, selftest.
#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "oamsim/config.hpp"
#include "oamsim/io.hpp"

namespace fs = std::filesystem;
using namespace oamsim;

namespace {

void setup_threads() {
#ifdef _OPENMP
  if (const char* env = std::getenv("OAMSIM_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) omp_set_num_threads(n);
  }
#endif
}

struct CommonOpts {
  std::string config_path;
  std::string preset;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int grid_n = 0;
  bool quiet = false;
};

RunConfig resolve_config(const CommonOpts& opts) {
  RunConfig cfg;
  if (!opts.config_path.empty())
    cfg = load_config(opts.config_path);
  else if (!opts.preset.empty())
    cfg = load_preset(opts.preset);
  else
    cfg = load_preset("methods");
  if (opts.seed_set) cfg.seed = opts.seed;
  if (!opts.out_dir.empty()) cfg.out_dir = opts.out_dir;
  if (opts.grid_n > 0) {
    cfg.ctx.slit_grid = GridSpec::square(opts.grid_n, cfg.ctx.slit_grid.window_x(),
                                         cfg.ctx.slit_grid.wavelength);
    cfg.ctx.output_grid = GridSpec::square(
        opts.grid_n, cfg.ctx.output_grid.window_x(), cfg.ctx.output_grid.wavelength);
  }
  fs::create_directories(cfg.out_dir);
  return cfg;
}

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "JSON config file");
  cmd->add_option("--preset", opts.preset,
                  "named preset (fig1, fig1-physical, methods, qubit-paper, qutrit-paper)");
  cmd->add_option("--out", opts.out_dir, "output directory");
  cmd->add_option("--seed", opts.seed, "random seed")
      ->each([&](const std::string&) { opts.seed_set = true; });
  cmd->add_option("--grid", opts.grid_n, "override grid size (power of two)");
  cmd->add_flag("--quiet", opts.quiet, "suppress progress output");
}

int cmd_generate(const CommonOpts& opts, double position_pitch, bool have_position,
                 int l, bool have_l, bool scan) {
  RunConfig cfg = resolve_config(opts);
  const double pitch = cfg.ctx.pitch();
  std::vector<double> positions;
  if (scan) {
    for (int k = -10; k <= 10; ++k) positions.push_back(k * pitch);
  } else if (have_position) {
    positions.push_back(position_pitch * pitch);
  } else if (have_l) {
    positions.push_back(l * pitch);
  } else {
    positions.push_back(0.0);
  }

  Warnings warnings;
  const auto results = run_slit_scan(cfg.ctx, positions, &warnings);
  for (const auto& r : results) {
    const double lf = r.position / pitch;
    char tag[32];
    std::snprintf(tag, sizeof(tag), "%+.2f", lf);
    const fs::path img = fs::path(cfg.out_dir) / ("image_l" + std::string(tag) + ".pgm");
    const fs::path csv =
        fs::path(cfg.out_dir) / ("spectrum_l" + std::string(tag) + ".csv");
    write_pgm16(r.ring, img);
    write_spectrum_csv(r.spectrum, csv);
    if (!opts.quiet)
      std::printf("position %+.2f pitch: dominant l=%d mean_l=%.4f residual=%.4f%s\n",
                  lf, r.spectrum.dominant_l(), r.spectrum.mean_l(), r.spectrum.residual,
                  r.integer_l ? " [integer]" : "");
  }
  if (!opts.quiet)
    for (const auto& w : warnings)
      std::fprintf(stderr, "warning [%s] %s\n", w.code.c_str(), w.message.c_str());
  return 0;
}

int cmd_witness(const CommonOpts& opts, double white_override, bool have_white,
                bool fit_target) {
  RunConfig cfg = resolve_config(opts);
  WitnessExperimentConfig wc = cfg.witness_config();
  if (have_white) wc.white = white_override;
  wc.fit_target = fit_target;

  const WitnessOutcome outcome = run_witness(wc);
  const fs::path report = fs::path(cfg.out_dir) / "witness_report.json";
  write_witness_json(outcome, cfg.seed, report);
  write_transfer_json(outcome.transfer, fs::path(cfg.out_dir) / "transfer.json");
  std::vector<CountRecord> all = outcome.fringe_counts;
  all.insert(all.end(), outcome.population_counts.begin(),
             outcome.population_counts.end());
  write_counts_csv(all, cfg.seed, fs::path(cfg.out_dir) / "counts.csv");

  std::string err;
  if (!validate_json_file(report, find_data_file("schemas/witness_report.schema.json"),
                          &err))
    throw error("witness_report.json failed schema validation: " + err);

  if (!opts.quiet) {
    std::printf("F = %.4f +/- %.4f\n", outcome.report.fidelity,
                outcome.report.sigma_fidelity);
    for (size_t d = 0; d < outcome.report.bounds.size(); ++d)
      std::printf("f_%zu = %.4f  significance %.2f sigma\n", d + 1,
                  outcome.report.bounds[d], outcome.report.significance[d]);
    std::printf("certified dimension: %d\n", outcome.report.certified_dimension);
    for (const auto& w : outcome.warnings)
      std::fprintf(stderr, "warning [%s] %s\n", w.code.c_str(), w.message.c_str());
  }
  return 0;
}

int cmd_chsh(const CommonOpts& opts, const std::string& state_prep, bool analytic) {
  RunConfig cfg = resolve_config(opts);
  ChshExperimentConfig cc = cfg.chsh_config();
  cc.analytic = analytic;
  if (state_prep == "ideal")
    cc.prep = ChshStatePrep::ideal;
  else if (state_prep == "product")
    cc.prep = ChshStatePrep::product;
  else
    cc.prep = ChshStatePrep::pipeline;

  const ChshOutcome outcome = run_chsh(cc);
  const fs::path report = fs::path(cfg.out_dir) / "chsh.json";
  write_chsh_json(cc.settings, outcome.result, cfg.seed, report);
  if (!outcome.counts.empty())
    write_counts_csv(outcome.counts, cfg.seed,
                     fs::path(cfg.out_dir) / "chsh_counts.csv");

  std::string err;
  if (!validate_json_file(report, find_data_file("schemas/chsh.schema.json"), &err))
    throw error("chsh.json failed schema validation: " + err);

  if (!opts.quiet) {
    std::printf("S = %.6f", outcome.result.S);
    if (outcome.result.sigma > 0.0) {
      std::printf(" +/- %.6f  (violation %.1f sigma)", outcome.result.sigma,
                  (outcome.result.S - 2.0) / outcome.result.sigma);
    }
    std::printf("\n");
  }
  return 0;
}

int cmd_selftest(const CommonOpts& opts) {
  RunConfig cfg = resolve_config(opts);
  const SelftestReport rep = run_selftest(cfg.ctx, cfg.slits, cfg.seed);
  for (const auto& line : rep.lines) std::printf("%s\n", line.c_str());
  std::printf("%d/%d checks passed\n", rep.checks - rep.failures, rep.checks);
  return rep.ok() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  setup_threads();
  CLI::App app{"slit-to-OAM mode sorter simulation and entanglement certification"};
  app.require_subcommand(1);

  CommonOpts gen_opts, wit_opts, chsh_opts, self_opts;

  auto* gen = app.add_subcommand("generate", "slit positions -> OAM modes");
  add_common(gen, gen_opts);
  double position = 0.0;
  int l = 0;
  bool scan = false;
  auto* opt_pos =
      gen->add_option("--position", position, "slit position in units of the pitch");
  auto* opt_l = gen->add_option("--l", l, "target OAM order (integer position)");
  gen->add_flag("--scan", scan, "sweep integer positions -10..10");

  auto* wit = app.add_subcommand("witness", "full certification chain");
  add_common(wit, wit_opts);
  double white = 0.0;
  bool fit_target = false, noise_calibrated = false;
  auto* opt_white = wit->add_option("--white", white, "override white-noise level");
  wit->add_flag("--noise-calibrated", noise_calibrated,
                "use the preset's calibrated noise (default)");
  wit->add_flag("--fit-target", fit_target,
                "search target amplitudes for maximum significance");

  auto* chsh = app.add_subcommand("chsh", "CHSH test on the qubit subspace");
  add_common(chsh, chsh_opts);
  std::string state_prep = "pipeline";
  bool analytic = false;
  chsh->add_option("--state", state_prep, "state preparation: pipeline|ideal|product");
  chsh->add_flag("--analytic", analytic, "exact probabilities, no counting noise");

  auto* self = app.add_subcommand("selftest", "bound oracle, unitarity, crosstalk");
  add_common(self, self_opts);

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed())
      return cmd_generate(gen_opts, position, opt_pos->count() > 0, l,
                          opt_l->count() > 0, scan);
    if (wit->parsed())
      return cmd_witness(wit_opts, white, opt_white->count() > 0, fit_target);
    if (chsh->parsed()) return cmd_chsh(chsh_opts, state_prep, analytic);
    if (self->parsed()) return cmd_selftest(self_opts);
  } catch (const config_error& e) {
    std::fprintf(stderr, "%s\n", error_json("config_error", e.what()).c_str());
    return 2;
  } catch (const error& e) {
    std::fprintf(stderr, "%s\n", error_json("domain_error", e.what()).c_str());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "%s\n", error_json("internal_error", e.what()).c_str());
    return 1;
  }
  return 0;
}
