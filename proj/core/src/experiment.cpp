#include "oamsim/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "oamsim/rng.hpp"

namespace oamsim {

namespace {

constexpr double kPi = std::numbers::pi;

// Deterministic stream tags per record family.
constexpr std::uint64_t kFringeTag = 0xF1;
constexpr std::uint64_t kPopulationTag = 0xF2;

std::vector<SettingPair> fringe_settings(const std::vector<int>& channels,
                                         int steps) {
  std::vector<SettingPair> out;
  const int D = static_cast<int>(channels.size());
  for (int i = 0; i < D; ++i)
    for (int j = i + 1; j < D; ++j)
      for (int k = 0; k < steps; ++k) {
        const double phi2 = 2.0 * kPi * k / steps;
        out.push_back({MeasurementSetting::superposition(channels[i], channels[j], 0.0),
                       MeasurementSetting::superposition(channels[i], channels[j], phi2)});
      }
  return out;
}

std::vector<SettingPair> population_settings(const std::vector<int>& channels) {
  std::vector<SettingPair> out;
  for (int la : channels)
    for (int lb : channels)
      out.push_back({MeasurementSetting::basis_mode(la),
                     MeasurementSetting::basis_mode(lb)});
  return out;
}

// counts -> VisibilitySet (fits + normalized populations)
VisibilitySet reduce_counts(const std::vector<int>& channels, int steps,
                            std::span<const CountRecord> fringe,
                            std::span<const CountRecord> pops) {
  VisibilitySet vis;
  vis.channels = channels;
  const int D = static_cast<int>(channels.size());

  double total = 0.0;
  for (const auto& r : pops) total += static_cast<double>(r.count);
  if (total <= 0.0) throw zero_counts_error("no population coincidences recorded");
  size_t idx = 0;
  for (int i = 0; i < D; ++i)
    for (int j = 0; j < D; ++j) {
      vis.populations[{channels[i], channels[j]}] =
          static_cast<double>(pops[idx].count) / total;
      ++idx;
    }

  idx = 0;
  for (int i = 0; i < D; ++i)
    for (int j = i + 1; j < D; ++j) {
      std::vector<FringePoint> pts;
      pts.reserve(steps);
      for (int k = 0; k < steps; ++k, ++idx)
        pts.push_back({fringe[idx].setting_b.phase,
                       static_cast<double>(fringe[idx].count)});
      vis.fringes[{channels[i], channels[j]}] = fit_visibility(pts);
    }
  return vis;
}

BiphotonState prepared_state(const PipelineContext& ctx, const SlitArray& slits,
                             const PathStateSpec& state, double white,
                             double dephase, TransferMatrix* T_out,
                             Warnings* warnings) {
  TransferMatrix T = compute_transfer_matrix(ctx, slits, warnings);

  // crosstalk precondition for the coherence estimator (bias otherwise)
  for (int k = 0; k < T.n_slits(); ++k) {
    const double diag = T.channel_power(T.channel_l[k], k);
    for (int l : T.channels()) {
      if (l == T.channel_l[k] || diag <= 0.0) continue;
      if (T.channel_power(l, k) / diag > 0.01)
        warn(warnings, "crosstalk",
             "channel crosstalk above 1% for slit " + std::to_string(k));
    }
  }

  const PathState path = build_path_state(state);
  BiphotonState rho = transfer_to_oam(path, T, warnings);
  rho = apply_noise(rho, white, dephase);
  if (T_out) *T_out = std::move(T);
  return rho;
}

double fidelity_from_counts(const std::vector<int>& channels, int steps,
                            std::span<const CountRecord> fringe,
                            std::span<const CountRecord> pops,
                            const SchmidtVector& target) {
  const VisibilitySet vis = reduce_counts(channels, steps, fringe, pops);
  const DensityEstimate est = estimate_matrix_elements(vis, nullptr);
  return fidelity(est, target);
}

}  // namespace

WitnessOutcome run_witness(const WitnessExperimentConfig& config) {
  WitnessOutcome out;
  out.state = prepared_state(config.ctx, config.slits, config.state, config.white,
                             config.dephase, &out.transfer, &out.warnings);
  const std::vector<int> channels = out.transfer.channels();
  const int D = static_cast<int>(channels.size());
  if (static_cast<int>(config.state.amplitudes.size()) != D)
    throw config_error("state dimension does not match slit channels");

  const auto fr_settings = fringe_settings(channels, config.fringe_steps);
  const auto pop_settings = population_settings(channels);
  out.fringe_counts =
      sample_counts(out.state, fr_settings, config.rate_pairs_per_s,
                    config.integration_s, config.seed ^ kFringeTag);
  out.population_counts =
      sample_counts(out.state, pop_settings, config.rate_pairs_per_s,
                    config.integration_s, config.seed ^ kPopulationTag);

  out.visibilities = reduce_counts(channels, config.fringe_steps, out.fringe_counts,
                                   out.population_counts);
  out.estimate = estimate_matrix_elements(out.visibilities, &out.warnings);

  // target: the preset amplitudes channel-by-channel, or the best-significance
  // search when requested
  SchmidtVector target = SchmidtVector::from_amplitudes(config.state.amplitudes);
  const double f_est = fidelity(out.estimate, target);

  // sigma over Poisson-resampled fringe + population counts
  std::vector<CountRecord> all_counts = out.fringe_counts;
  all_counts.insert(all_counts.end(), out.population_counts.begin(),
                    out.population_counts.end());
  const size_t n_fringe = out.fringe_counts.size();
  auto estimator = [&](std::span<const CountRecord> recs) {
    return fidelity_from_counts(channels, config.fringe_steps,
                                recs.subspan(0, n_fringe), recs.subspan(n_fringe),
                                target);
  };
  const double sigma = error_mc(all_counts, estimator, config.mc_trials,
                                config.seed ^ 0xF3ULL);

  if (config.fit_target) {
    target = optimize_target(out.estimate, sigma);
    const double f_refit = fidelity(out.estimate, target);
    out.report = witness_verdict(f_refit, sigma, target);
  } else {
    out.report = witness_verdict(f_est, sigma, target);
  }
  return out;
}

SchmidtVector optimize_target(const DensityEstimate& est, double sigma_hint) {
  const int D = static_cast<int>(est.channels.size());
  const double sig = sigma_hint > 0.0 ? sigma_hint : 1.0;

  auto significance = [&](const std::vector<double>& amps) {
    const SchmidtVector t = SchmidtVector::from_amplitudes(amps);
    const double f = gauge_fidelity(est.correlated, amps, true);
    return (f - schmidt_bound(t, D - 1)) / sig;
  };

  // coarse grid on the simplex of squared amplitudes, then coordinate refine
  std::vector<double> best(D, 1.0 / std::sqrt(static_cast<double>(D)));
  double best_val = significance(best);
  const int steps = D == 2 ? 64 : 24;
  std::vector<double> amps(D);
  if (D == 2) {
    for (int i = 1; i < steps; ++i) {
      const double th = 0.5 * kPi * i / steps;
      amps = {std::cos(th), std::sin(th)};
      const double v = significance(amps);
      if (v > best_val) {
        best_val = v;
        best = amps;
      }
    }
  } else {
    for (int i = 1; i < steps; ++i)
      for (int j = 1; j < steps - i; ++j) {
        const int k = steps - i - j;
        amps = {std::sqrt(i / double(steps)), std::sqrt(j / double(steps)),
                std::sqrt(k / double(steps))};
        const double v = significance(amps);
        if (v > best_val) {
          best_val = v;
          best = amps;
        }
      }
  }
  // local refinement, one amplitude at a time
  double step = 0.05;
  for (int round = 0; round < 40; ++round) {
    bool improved = false;
    for (int i = 0; i < D; ++i) {
      for (double dir : {+1.0, -1.0}) {
        amps = best;
        amps[i] = std::max(1.0e-6, amps[i] + dir * step);
        const double v = significance(amps);
        if (v > best_val) {
          best_val = v;
          best = amps;
          improved = true;
        }
      }
    }
    if (!improved) step *= 0.5;
    if (step < 1.0e-5) break;
  }
  return SchmidtVector::from_amplitudes(best);
}

ChshOutcome run_chsh(const ChshExperimentConfig& config) {
  ChshOutcome out;

  BiphotonState state = [&]() {
    switch (config.prep) {
      case ChshStatePrep::ideal: {
        std::vector<ModeLabel> basis = {{config.settings.la, false},
                                        {config.settings.lb, false}};
        Eigen::VectorXcd psi(4);
        psi << 1.0, 0.0, 0.0, 1.0;
        return apply_noise(BiphotonState::pure(basis, psi), config.white,
                           config.dephase);
      }
      case ChshStatePrep::product: {
        std::vector<ModeLabel> basis = {{config.settings.la, false},
                                        {config.settings.lb, false}};
        Eigen::VectorXcd a(2), b(2);
        a << 1.0, 1.0;
        b << 1.0, -1.0;
        a.normalize();
        b.normalize();
        Eigen::VectorXcd psi(4);
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 2; ++j) psi(i * 2 + j) = a(i) * b(j);
        return apply_noise(BiphotonState::pure(basis, psi), config.white,
                           config.dephase);
      }
      case ChshStatePrep::pipeline:
      default:
        return prepared_state(config.ctx, config.slits, config.state, config.white,
                              config.dephase, nullptr, &out.warnings);
    }
  }();

  if (config.analytic) {
    out.result = chsh_value(state, config.settings);
    return out;
  }
  const auto pairs = chsh_setting_pairs(config.settings);
  out.counts = sample_counts(state, pairs, config.rate_pairs_per_s,
                             config.integration_s, config.seed ^ 0xC4ULL);
  out.result = chsh_value(out.counts, config.mc_trials, config.seed ^ 0xC5ULL);
  return out;
}

double pipeline_direct_fidelity(const WitnessExperimentConfig& config) {
  Warnings warnings;
  const BiphotonState rho =
      prepared_state(config.ctx, config.slits, config.state, config.white,
                     config.dephase, nullptr, &warnings);
  return direct_fidelity(rho, config.state.amplitudes);
}

SelftestReport run_selftest(const PipelineContext& ctx, const SlitArray& slits,
                            std::uint64_t seed) {
  SelftestReport rep;
  auto check = [&](const std::string& name, bool ok) {
    ++rep.checks;
    if (!ok) ++rep.failures;
    rep.lines.push_back(std::string(ok ? "pass  " : "FAIL  ") + name);
  };

  // witness bound vs brute-force oracle on random targets
  {
    auto rng = stream_rng(seed, {0x5E1FULL});
    std::uniform_real_distribution<double> uni(0.05, 1.0);
    double worst = 0.0;
    for (int t = 0; t < 12; ++t) {
      const int D = 2 + t % 3;
      std::vector<double> amps(D);
      for (double& a : amps) a = uni(rng);
      const SchmidtVector target = SchmidtVector::from_amplitudes(amps);
      for (int d = 1; d < D; ++d) {
        const double oracle = oracle_max_overlap(target, d, 40, seed + t);
        worst = std::max(worst, std::abs(oracle - schmidt_bound(target, d)));
      }
    }
    check("schmidt bound matches oracle within 1e-4 (worst " +
              std::to_string(worst) + ")",
          worst < 1.0e-4);
  }

  // propagation / lens unitarity
  {
    const GridSpec g = GridSpec::square(256, 8.0e-3, ctx.slit_grid.wavelength);
    const ComplexField f = lg_mode({1, 0, 0.5e-3}, g);
    const double n1 = propagate(f, 0.05).norm();
    const double n2 = lens_and_focus(f, 0.3).norm();
    check("propagate unitary to 1e-9", std::abs(n1 - 1.0) < 1.0e-9);
    check("lens unitary to 1e-9", std::abs(n2 - 1.0) < 1.0e-9);
  }

  // LG orthonormality (reduced set)
  {
    const GridSpec g = GridSpec::square(256, 8.0e-3, ctx.slit_grid.wavelength);
    double worst = 0.0;
    std::vector<ComplexField> modes;
    for (int l = -2; l <= 2; ++l)
      for (int p = 0; p <= 1; ++p) modes.push_back(lg_mode({l, p, 0.5e-3}, g));
    for (size_t i = 0; i < modes.size(); ++i)
      for (size_t j = i; j < modes.size(); ++j) {
        const double want = i == j ? 1.0 : 0.0;
        worst = std::max(worst, std::abs(std::abs(overlap(modes[i], modes[j])) - want));
      }
    check("LG Gram matrix within 1e-8", worst < 1.0e-8);
  }

  // transfer-matrix crosstalk on the supplied geometry
  {
    Warnings w;
    const TransferMatrix T = compute_transfer_matrix(ctx, slits, &w);
    double worst = 0.0;
    for (int k = 0; k < T.n_slits(); ++k) {
      const double diag = T.channel_power(T.channel_l[k], k);
      for (int l : T.channels())
        if (l != T.channel_l[k] && diag > 0.0)
          worst = std::max(worst, T.channel_power(l, k) / diag);
    }
    check("channel crosstalk below 1% (worst " + std::to_string(worst) + ")",
          worst < 0.01);

    const PathStateSpec spec{
        std::vector<double>(T.channels().size(),
                            1.0 / std::sqrt(double(T.channels().size()))),
        std::vector<double>(T.channels().size() - 1, 0.0)};
    const BiphotonState rho = transfer_to_oam(build_path_state(spec), T);
    check("transferred state PSD within -1e-9", rho.min_eigenvalue() > -1.0e-9);
  }
  return rep;
}

}  // namespace oamsim
