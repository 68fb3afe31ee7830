#include "oamsim/certify.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include "oamsim/rng.hpp"

namespace oamsim {

namespace {

constexpr double kPi = std::numbers::pi;

}  // namespace

void SchmidtVector::validate() const {
  if (lambda.empty()) throw config_error("empty Schmidt vector");
  double s = 0.0;
  for (size_t i = 0; i < lambda.size(); ++i) {
    if (lambda[i] < 0.0) throw normalization_error("Schmidt coefficients must be >= 0");
    if (i > 0 && lambda[i] > lambda[i - 1] + 1.0e-12)
      throw config_error("Schmidt coefficients must be sorted decreasing");
    s += lambda[i] * lambda[i];
  }
  if (std::abs(s - 1.0) > 1.0e-9)
    throw normalization_error("Schmidt coefficients must satisfy sum lambda^2 = 1");
}

SchmidtVector SchmidtVector::from_amplitudes(std::vector<double> amps) {
  double s = 0.0;
  for (double a : amps) s += a * a;
  if (!(s > 0.0)) throw normalization_error("zero Schmidt vector");
  for (double& a : amps) a = std::abs(a) / std::sqrt(s);
  std::sort(amps.begin(), amps.end(), std::greater<>());
  SchmidtVector v{std::move(amps)};
  v.validate();
  return v;
}

SchmidtDecomposition schmidt_decompose(const Eigen::MatrixXcd& coeff) {
  const double n = coeff.norm();
  if (!(n > 0.0)) throw normalization_error("zero bipartite state");
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(coeff / n,
                                         Eigen::ComputeFullU | Eigen::ComputeFullV);
  SchmidtDecomposition out;
  out.values.lambda.assign(svd.singularValues().data(),
                           svd.singularValues().data() + svd.singularValues().size());
  out.basis_a = svd.matrixU();
  out.basis_b = svd.matrixV().conjugate();
  return out;
}

FringeFit fit_visibility(std::span<const FringePoint> points) {
  if (points.size() < 8) throw fit_error("fringe fit needs >= 8 phase samples");
  double lo = points[0].phase, hi = points[0].phase;
  for (const auto& p : points) {
    lo = std::min(lo, p.phase);
    hi = std::max(hi, p.phase);
  }
  if (hi - lo < 1.5 * kPi) throw fit_error("fringe fit needs a span >= 1.5 pi");

  // weighted normal equations for y = c0 + c1 cos(phi) + c2 sin(phi)
  Eigen::Matrix3d xtx = Eigen::Matrix3d::Zero();
  Eigen::Vector3d xty = Eigen::Vector3d::Zero();
  for (const auto& p : points) {
    const Eigen::Vector3d row(1.0, std::cos(p.phase), std::sin(p.phase));
    const double w = 1.0 / std::max(p.value, 1.0);
    xtx += w * row * row.transpose();
    xty += w * row * p.value;
  }
  Eigen::FullPivLU<Eigen::Matrix3d> lu(xtx);
  if (!lu.isInvertible()) throw fit_error("degenerate fringe design matrix");
  const Eigen::Vector3d c = lu.solve(xty);
  const Eigen::Matrix3d cov = lu.inverse();

  FringeFit fit;
  const double r = std::hypot(c(1), c(2));
  fit.amplitude = 2.0 * r;
  fit.baseline = c(0) - r;
  fit.visibility = c(0) > 0.0 ? r / c(0) : 0.0;
  fit.offset = r > 0.0 ? std::atan2(c(2), -c(1)) : 0.0;

  if (r > 1.0e-12 * std::max(1.0, c(0))) {
    const Eigen::Vector3d gv(-r / (c(0) * c(0)), c(1) / (r * c(0)), c(2) / (r * c(0)));
    fit.sigma_visibility = std::sqrt(std::max(0.0, gv.dot(cov * gv)));
    const Eigen::Vector3d gd(0.0, c(2) / (r * r), -c(1) / (r * r));
    fit.sigma_offset = std::sqrt(std::max(0.0, gd.dot(cov * gd)));
    const Eigen::Vector3d ga(0.0, 2.0 * c(1) / r, 2.0 * c(2) / r);
    fit.sigma_amplitude = std::sqrt(std::max(0.0, ga.dot(cov * ga)));
  } else {
    // flat fringe: visibility 0, uncertainty from shot noise on the quadratures
    fit.visibility = 0.0;
    fit.sigma_visibility =
        c(0) > 0.0 ? std::sqrt(std::max(0.0, cov(1, 1) + cov(2, 2))) / c(0) : 0.0;
    fit.sigma_offset = kPi;
    fit.sigma_amplitude = 2.0 * std::sqrt(std::max(0.0, cov(1, 1) + cov(2, 2)));
  }
  return fit;
}

double VisibilitySet::population(int la, int lb) const {
  auto it = populations.find({la, lb});
  if (it == populations.end())
    throw missing_subspace_error("population (" + std::to_string(la) + ", " +
                                 std::to_string(lb) + ") missing");
  return it->second;
}

DensityEstimate estimate_matrix_elements(const VisibilitySet& vis,
                                         Warnings* warnings) {
  const int D = static_cast<int>(vis.channels.size());
  if (D < 2) throw config_error("need at least two channels");

  DensityEstimate est;
  est.channels = vis.channels;
  est.correlated = Eigen::MatrixXcd::Zero(D, D);

  double anti = 0.0;
  for (int i = 0; i < D; ++i)
    for (int j = 0; j < D; ++j) {
      const double p = vis.population(vis.channels[i], vis.channels[j]);
      if (i == j)
        est.correlated(i, i) = p;
      else
        anti += p;
    }
  if (anti > 0.01)
    warn(warnings, "bias",
         "anti-correlated populations total " + std::to_string(anti) +
             "; coherence estimates assume they are negligible");

  for (int i = 0; i < D; ++i)
    for (int j = i + 1; j < D; ++j) {
      auto it = vis.fringes.find({vis.channels[i], vis.channels[j]});
      if (it == vis.fringes.end())
        throw missing_subspace_error("fringe for subspace (" +
                                     std::to_string(vis.channels[i]) + ", " +
                                     std::to_string(vis.channels[j]) + ") missing");
      const FringeFit& fit = it->second;
      const double mag = fit.visibility *
                         (est.correlated(i, i).real() + est.correlated(j, j).real()) /
                         2.0;
      // fringe scanned at phi_1 = 0: the sin^2 offset delta maps to
      // arg<ii|rho|jj> = delta - pi
      const double arg = fit.offset - kPi;
      est.correlated(i, j) = std::polar(mag, arg);
      est.correlated(j, i) = std::conj(est.correlated(i, j));
    }
  return est;
}

double fidelity(const DensityEstimate& est, const SchmidtVector& target,
                bool fit_target_phases) {
  if (target.dim() != static_cast<int>(est.channels.size()))
    throw config_error("target dimension does not match estimate");
  // amplitudes enter unsorted-by-channel: the target pairs lambda_i with
  // channel i in ascending-channel order, matching Eq. (2)
  return gauge_fidelity(est.correlated, target.lambda, fit_target_phases);
}

double schmidt_bound(const SchmidtVector& target, int d) {
  target.validate();
  if (d < 1 || d > target.dim())
    throw config_error("schmidt_bound needs 1 <= d <= D");
  double s = 0.0;
  for (int i = 0; i < d; ++i) s += target.lambda[i] * target.lambda[i];
  return s;
}

WitnessReport witness_verdict(double fidelity_value, double sigma,
                              const SchmidtVector& target) {
  target.validate();
  WitnessReport rep;
  rep.target = target;
  rep.fidelity = fidelity_value;
  rep.sigma_fidelity = sigma;
  const int D = target.dim();
  rep.certified_dimension = 1;
  for (int d = 1; d <= D - 1; ++d) {
    const double f_d = schmidt_bound(target, d);
    rep.bounds.push_back(f_d);
    rep.significance.push_back(sigma > 0.0
                                   ? (fidelity_value - f_d) / sigma
                                   : (fidelity_value > f_d
                                          ? std::numeric_limits<double>::infinity()
                                          : -std::numeric_limits<double>::infinity()));
    if (fidelity_value > f_d) rep.certified_dimension = d + 1;
  }
  return rep;
}

double oracle_max_overlap(const SchmidtVector& target, int d, int restarts,
                          std::uint64_t seed) {
  target.validate();
  const int D = target.dim();
  if (d < 1 || d >= D) throw config_error("oracle needs 1 <= d < D");

  Eigen::MatrixXcd psi = Eigen::MatrixXcd::Zero(D, D);
  for (int i = 0; i < D; ++i) psi(i, i) = target.lambda[i];

  double best = 0.0;
  for (int r = 0; r < restarts; ++r) {
    auto rng = stream_rng(seed, {0xAC5E11EULL, static_cast<std::uint64_t>(r)});
    std::normal_distribution<double> normal(0.0, 1.0);
    auto random_unitary = [&]() {
      Eigen::MatrixXcd g(D, D);
      for (int i = 0; i < D; ++i)
        for (int j = 0; j < D; ++j) g(i, j) = cdouble(normal(rng), normal(rng));
      const Eigen::MatrixXcd anti = 0.5 * (g - g.adjoint());
      return anti.exp().eval();
    };
    Eigen::MatrixXcd u = random_unitary();
    Eigen::MatrixXcd v = random_unitary();
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(D);
    for (int i = 0; i < d; ++i) mu(i) = 1.0 / std::sqrt(static_cast<double>(d));

    double val = 0.0;
    for (int it = 0; it < 300; ++it) {
      // align phases so the diagonal couplings are real positive, then the
      // optimal mixing weights are proportional to them
      Eigen::MatrixXcd x = u.adjoint() * psi * v.conjugate();
      double s2 = 0.0;
      for (int i = 0; i < d; ++i) {
        const cdouble g = x(i, i);
        if (std::abs(g) > 0.0) u.col(i) *= std::polar(1.0, std::arg(g));
        s2 += std::norm(g);
      }
      if (s2 > 0.0)
        for (int i = 0; i < d; ++i) mu(i) = std::abs(x(i, i)) / std::sqrt(s2);

      const double new_val = s2;
      if (std::abs(new_val - val) < 1.0e-14 && it > 2) {
        val = new_val;
        break;
      }
      val = new_val;

      Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(D, D);
      for (int i = 0; i < d; ++i) m(i, i) = mu(i);

      // U <- argmax |Tr(U^dag Psi V* M)|
      {
        const Eigen::MatrixXcd xu = psi * v.conjugate() * m;
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(
            xu, Eigen::ComputeFullU | Eigen::ComputeFullV);
        u = svd.matrixU() * svd.matrixV().adjoint();
      }
      // V <- argmax |Tr(V* (M U^dag Psi))|
      {
        const Eigen::MatrixXcd y = m * u.adjoint() * psi;
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(
            y, Eigen::ComputeFullU | Eigen::ComputeFullV);
        const Eigen::MatrixXcd w = svd.matrixV() * svd.matrixU().adjoint();
        v = w.conjugate();
      }
    }
    best = std::max(best, val);
  }
  return best;
}

ChshSettings ChshSettings::optimal(int la, int lb) {
  return {la, lb, 0.0, kPi / 2.0, kPi / 4.0, -kPi / 4.0};
}

std::vector<SettingPair> chsh_setting_pairs(const ChshSettings& s) {
  std::vector<SettingPair> out;
  const std::array<std::pair<double, double>, 4> combos = {
      std::pair{s.alpha, s.beta},
      std::pair{s.alpha_prime, s.beta},
      std::pair{s.alpha, s.beta_prime},
      std::pair{s.alpha_prime, s.beta_prime},
  };
  for (const auto& [pa, pb] : combos) {
    const MeasurementSetting a = MeasurementSetting::superposition(s.la, s.lb, pa);
    const MeasurementSetting b = MeasurementSetting::superposition(s.la, s.lb, pb);
    out.push_back({a, b});
    out.push_back({a, b.complement()});
    out.push_back({a.complement(), b});
    out.push_back({a.complement(), b.complement()});
  }
  return out;
}

namespace {

double chsh_from_e(const std::array<double, 4>& e) {
  return std::abs(e[0] - e[1] + e[2] + e[3]);
}

std::array<double, 4> chsh_correlators_from_counts(
    std::span<const CountRecord> records) {
  if (records.size() != 16)
    throw config_error("CHSH needs 16 count records (4 settings x 4 outcomes)");
  std::array<double, 4> e{};
  for (int s = 0; s < 4; ++s) {
    const double cpp = static_cast<double>(records[4 * s + 0].count);
    const double cpm = static_cast<double>(records[4 * s + 1].count);
    const double cmp = static_cast<double>(records[4 * s + 2].count);
    const double cmm = static_cast<double>(records[4 * s + 3].count);
    const double total = cpp + cpm + cmp + cmm;
    if (total <= 0.0)
      throw zero_counts_error("no coincidences for CHSH setting " + std::to_string(s));
    e[s] = (cpp + cmm - cpm - cmp) / total;
  }
  return e;
}

}  // namespace

ChshResult chsh_value(const BiphotonState& state, const ChshSettings& settings) {
  const auto pairs = chsh_setting_pairs(settings);
  ChshResult res;
  for (int s = 0; s < 4; ++s) {
    const double cpp = coincidence_probability(state, pairs[4 * s].first, pairs[4 * s].second);
    const double cpm =
        coincidence_probability(state, pairs[4 * s + 1].first, pairs[4 * s + 1].second);
    const double cmp =
        coincidence_probability(state, pairs[4 * s + 2].first, pairs[4 * s + 2].second);
    const double cmm =
        coincidence_probability(state, pairs[4 * s + 3].first, pairs[4 * s + 3].second);
    const double total = cpp + cpm + cmp + cmm;
    if (total <= 0.0) throw zero_counts_error("zero probability in CHSH setting");
    res.E[s] = (cpp + cmm - cpm - cmp) / total;
  }
  res.S = chsh_from_e(res.E);
  res.sigma = 0.0;
  return res;
}

ChshResult chsh_value(std::span<const CountRecord> records, int mc_trials,
                      std::uint64_t seed) {
  ChshResult res;
  res.E = chsh_correlators_from_counts(records);
  res.S = chsh_from_e(res.E);
  res.sigma = error_mc(
      records,
      [](std::span<const CountRecord> r) {
        return chsh_from_e(chsh_correlators_from_counts(r));
      },
      mc_trials, seed);
  return res;
}

double error_mc(std::span<const CountRecord> records,
                const std::function<double(std::span<const CountRecord>)>& estimator,
                int trials, std::uint64_t seed) {
  if (trials < 100) throw config_error("error_mc needs >= 100 trials");
  std::vector<CountRecord> resampled(records.begin(), records.end());
  std::vector<double> values;
  values.reserve(trials);
  for (int t = 0; t < trials; ++t) {
    auto rng = stream_rng(seed, {0xE770ULL, static_cast<std::uint64_t>(t)});
    for (size_t i = 0; i < resampled.size(); ++i)
      resampled[i].count = poisson_draw(rng, static_cast<double>(records[i].count));
    values.push_back(estimator(resampled));
  }
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= values.size();
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= (values.size() - 1);
  return std::sqrt(var);
}

}  // namespace oamsim
