#include "oamsim/biphoton.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "oamsim/rng.hpp"

namespace oamsim {

namespace {

Eigen::VectorXcd setting_vector(const std::vector<ModeLabel>& basis,
                                const MeasurementSetting& s) {
  auto idx = [&](int l) {
    for (size_t i = 0; i < basis.size(); ++i)
      if (!basis[i].sink && basis[i].l == l) return static_cast<int>(i);
    throw config_error("measurement setting uses l = " + std::to_string(l) +
                       " which is not in the state basis");
  };
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(static_cast<int>(basis.size()));
  if (!s.l2) {
    v(idx(s.l1)) = 1.0;
  } else {
    v(idx(s.l1)) = 1.0 / std::sqrt(2.0);
    v(idx(*s.l2)) = std::polar(1.0 / std::sqrt(2.0), s.phase);
  }
  return v;
}

}  // namespace

void PathStateSpec::validate() const {
  if (amplitudes.size() != 2 && amplitudes.size() != 3)
    throw config_error("path state needs 2 or 3 slit amplitudes");
  if (phases.size() != amplitudes.size() - 1)
    throw config_error("path state needs one phase per non-leading amplitude");
  double s = 0.0;
  for (double a : amplitudes) {
    if (a < 0.0) throw normalization_error("path amplitudes must be >= 0");
    s += a * a;
  }
  if (std::abs(s - 1.0) > 1.0e-9)
    throw normalization_error("path amplitudes must satisfy sum a^2 = 1, got " +
                              std::to_string(s));
}

PathState build_path_state(const PathStateSpec& spec) {
  spec.validate();
  PathState st;
  st.amps.resize(static_cast<int>(spec.amplitudes.size()));
  for (size_t k = 0; k < spec.amplitudes.size(); ++k) {
    const double ph = k == 0 ? 0.0 : spec.phases[k - 1];
    st.amps(static_cast<int>(k)) = std::polar(spec.amplitudes[k], ph);
  }
  return st;
}

BiphotonState::BiphotonState(std::vector<ModeLabel> basis, Eigen::MatrixXcd rho)
    : basis_(std::move(basis)), rho_(std::move(rho)) {
  const int d = static_cast<int>(basis_.size());
  if (rho_.rows() != d * d || rho_.cols() != d * d)
    throw config_error("density matrix dimension does not match basis^2");
  if ((rho_ - rho_.adjoint()).cwiseAbs().maxCoeff() > 1.0e-12)
    throw config_error("density matrix is not Hermitian");
  const double tr = rho_.trace().real();
  if (std::abs(tr - 1.0) > 1.0e-9)
    throw normalization_error("density matrix trace is " + std::to_string(tr));
}

BiphotonState BiphotonState::pure(std::vector<ModeLabel> basis,
                                  const Eigen::VectorXcd& psi) {
  const double n = psi.norm();
  if (!(n > 0.0)) throw normalization_error("zero pure state");
  Eigen::VectorXcd v = psi / n;
  return BiphotonState(std::move(basis), v * v.adjoint());
}

int BiphotonState::index_of(int l) const {
  for (size_t i = 0; i < basis_.size(); ++i)
    if (!basis_[i].sink && basis_[i].l == l) return static_cast<int>(i);
  return -1;
}

double BiphotonState::min_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho_, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

std::vector<double> BiphotonState::schmidt_coefficients() const {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho_);
  const int dtot = static_cast<int>(rho_.rows());
  int top = 0;
  for (int i = 1; i < dtot; ++i)
    if (es.eigenvalues()(i) > es.eigenvalues()(top)) top = i;
  const int d = dim();
  Eigen::MatrixXcd coeff(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) coeff(i, j) = es.eigenvectors().col(top)(i * d + j);
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(coeff);
  std::vector<double> out;
  double norm2 = 0.0;
  for (int i = 0; i < svd.singularValues().size(); ++i)
    norm2 += svd.singularValues()(i) * svd.singularValues()(i);
  for (int i = 0; i < svd.singularValues().size(); ++i)
    out.push_back(svd.singularValues()(i) / std::sqrt(norm2));
  std::sort(out.begin(), out.end(), std::greater<>());
  return out;
}

BiphotonState transfer_to_oam(const PathState& path, const TransferMatrix& T,
                              Warnings* warnings) {
  const int K = static_cast<int>(path.amps.size());
  if (K > T.n_slits())
    throw config_error("path state occupies more slits than the transfer matrix");

  const std::vector<int> chans = T.channels();
  const int C = static_cast<int>(chans.size());
  const int De = C + K;  // channels + per-slit sinks, before compression

  // per-photon amplitude map for slit k: channels then sink_k
  Eigen::MatrixXcd map = Eigen::MatrixXcd::Zero(De, K);
  for (int k = 0; k < K; ++k) {
    double sig = 0.0;
    for (int c = 0; c < C; ++c) {
      map(c, k) = T.detector_amps(c, k);
      sig += std::norm(map(c, k));
    }
    const double rest = std::max(0.0, T.column_power[k] - sig);
    map(C + k, k) = std::sqrt(rest);
  }

  Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(De * De);
  for (int k = 0; k < K; ++k)
    for (int i = 0; i < De; ++i)
      for (int j = 0; j < De; ++j)
        psi(i * De + j) += path.amps(k) * map(i, k) * map(j, k);

  const double norm2 = psi.squaredNorm();
  if (norm2 < 1.0e-6)
    throw empty_support_error("transferred state norm^2 = " + std::to_string(norm2));
  psi /= std::sqrt(norm2);
  const Eigen::MatrixXcd rho_ext = psi * psi.adjoint();

  // Compress the per-slit sinks into one label with the coarse-graining
  // channel {P_signal, |sink><sink_k|}; CPTP, so positivity and trace survive.
  const int D = C + 1;
  std::vector<Eigen::MatrixXcd> kraus;
  {
    Eigen::MatrixXcd p = Eigen::MatrixXcd::Zero(D, De);
    for (int c = 0; c < C; ++c) p(c, c) = 1.0;
    kraus.push_back(p);
    for (int k = 0; k < K; ++k) {
      Eigen::MatrixXcd s = Eigen::MatrixXcd::Zero(D, De);
      s(C, C + k) = 1.0;
      kraus.push_back(s);
    }
  }
  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(D * D, D * D);
  for (const auto& ka : kraus)
    for (const auto& kb : kraus) {
      Eigen::MatrixXcd kk = Eigen::MatrixXcd::Zero(D * D, De * De);
      for (int i = 0; i < D; ++i)
        for (int j = 0; j < D; ++j)
          for (int u = 0; u < De; ++u)
            for (int v = 0; v < De; ++v)
              kk(i * D + j, u * De + v) = ka(i, u) * kb(j, v);
      rho += kk * rho_ext * kk.adjoint();
    }

  std::vector<ModeLabel> basis;
  for (int c = 0; c < C; ++c) basis.push_back({chans[c], false});
  basis.push_back({0, true});

  double sink_pop = 0.0;
  for (int i = 0; i < D; ++i) sink_pop += rho((C)*D + i, (C)*D + i).real();
  if (sink_pop > 0.5)
    warn(warnings, "sink-heavy",
         "more than half of the transferred pairs fall outside the detection basis");

  // numeric hygiene: re-hermitize and pin the trace
  rho = 0.5 * (rho + rho.adjoint()).eval();
  rho /= rho.trace().real();
  return BiphotonState(std::move(basis), std::move(rho));
}

BiphotonState apply_noise(const BiphotonState& state, double white, double dephase) {
  if (white < 0.0 || white > 1.0 || dephase < 0.0 || dephase > 1.0)
    throw config_error("noise parameters must lie in [0, 1]");
  Eigen::MatrixXcd rho = state.rho();
  const int n = static_cast<int>(rho.rows());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) rho(i, j) *= (1.0 - dephase);
  rho *= (1.0 - white);
  rho += white / n * Eigen::MatrixXcd::Identity(n, n);
  return BiphotonState(state.basis(), std::move(rho));
}

MeasurementSetting MeasurementSetting::complement() const {
  if (!l2)
    throw config_error("a basis-mode setting has no in-subspace complement");
  MeasurementSetting c = *this;
  c.phase = phase + std::numbers::pi;
  return c;
}

double coincidence_probability(const BiphotonState& state,
                               const MeasurementSetting& a,
                               const MeasurementSetting& b) {
  const Eigen::VectorXcd va = setting_vector(state.basis(), a);
  const Eigen::VectorXcd vb = setting_vector(state.basis(), b);
  const int d = state.dim();
  Eigen::VectorXcd vab(d * d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) vab(i * d + j) = va(i) * vb(j);
  const double p = (vab.adjoint() * state.rho() * vab)(0, 0).real();
  return std::clamp(p, 0.0, 1.0);
}

std::vector<CountRecord> sample_counts(const BiphotonState& state,
                                       std::span<const SettingPair> settings,
                                       double rate_scale, double time,
                                       std::uint64_t seed) {
  if (!(rate_scale > 0.0) || !(time > 0.0))
    throw config_error("rate_scale and integration time must be > 0");
  std::vector<CountRecord> out;
  out.reserve(settings.size());
  for (size_t i = 0; i < settings.size(); ++i) {
    CountRecord rec;
    rec.setting_a = settings[i].first;
    rec.setting_b = settings[i].second;
    rec.integration_s = time;
    const double p = coincidence_probability(state, rec.setting_a, rec.setting_b);
    rec.expected_rate = rate_scale * p;
    auto rng = stream_rng(seed, {0xC011775ULL, i});
    rec.count = poisson_draw(rng, rec.expected_rate * time);
    out.push_back(rec);
  }
  return out;
}

double direct_fidelity(const BiphotonState& state,
                       const std::vector<double>& target_amplitudes) {
  const int C = state.dim() - 1;  // channels (basis carries one sink)
  int C_sig = 0;
  for (const auto& m : state.basis())
    if (!m.sink) ++C_sig;
  if (static_cast<int>(target_amplitudes.size()) != C_sig || C != C_sig)
    throw config_error("target dimension does not match state channels");

  const int d = state.dim();
  // restrict to the channel block and renormalize (post-selection on both
  // photons landing in detection modes)
  Eigen::MatrixXcd m(C, C);
  Eigen::MatrixXcd rho_ps = Eigen::MatrixXcd::Zero(C * C, C * C);
  for (int i = 0; i < C; ++i)
    for (int j = 0; j < C; ++j)
      for (int k = 0; k < C; ++k)
        for (int l = 0; l < C; ++l)
          rho_ps(i * C + j, k * C + l) = state.rho()(i * d + j, k * d + l);
  const double tr = rho_ps.trace().real();
  if (!(tr > 0.0)) throw empty_support_error("no population in the channel block");
  rho_ps /= tr;

  // correlated block <ii|rho|jj>
  for (int i = 0; i < C; ++i)
    for (int j = 0; j < C; ++j) m(i, j) = rho_ps(i * C + i, j * C + j);

  return gauge_fidelity(m, target_amplitudes, true);
}

double gauge_fidelity(const Eigen::MatrixXcd& m,
                      const std::vector<double>& amplitudes, bool fit_phases) {
  const int C = static_cast<int>(m.rows());
  if (static_cast<int>(amplitudes.size()) != C)
    throw config_error("target dimension does not match the correlated matrix");

  double norm2 = 0.0;
  for (double a : amplitudes) norm2 += a * a;
  if (!(norm2 > 0.0)) throw normalization_error("zero target amplitudes");
  std::vector<double> lam;
  for (double a : amplitudes) lam.push_back(a / std::sqrt(norm2));

  // The Eq.-1 target carries adjustable phases; align them to the measured
  // coherence phases by coordinate ascent (chain init, exact for D = 2).
  std::vector<double> phi(C, 0.0);
  if (fit_phases) {
    for (int j = 1; j < C; ++j) {
      const cdouble link = m(j - 1, j);
      phi[j] = phi[j - 1] - (std::abs(link) > 0.0 ? std::arg(link) : 0.0);
    }
    for (int sweep = 0; sweep < 50; ++sweep) {
      for (int j = 1; j < C; ++j) {
        cdouble acc(0.0, 0.0);
        for (int i = 0; i < C; ++i) {
          if (i == j) continue;
          acc += lam[i] * lam[j] * m(i, j) * std::polar(1.0, -phi[i]);
        }
        if (std::abs(acc) > 0.0) phi[j] = -std::arg(acc);
      }
    }
  }
  Eigen::VectorXcd c(C);
  for (int i = 0; i < C; ++i) c(i) = std::polar(lam[i], phi[i]);
  return std::clamp((c.adjoint() * m * c)(0, 0).real(), 0.0, 1.0);
}

double calibrate_white_noise(const BiphotonState& clean,
                             const std::vector<double>& target_amplitudes,
                             double target_fidelity, double dephase) {
  double lo = 0.0, hi = 1.0;
  const double f0 = direct_fidelity(apply_noise(clean, 0.0, dephase), target_amplitudes);
  if (f0 <= target_fidelity) return 0.0;
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double f = direct_fidelity(apply_noise(clean, mid, dephase), target_amplitudes);
    (f > target_fidelity ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace oamsim
