#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oamsim/fieldgrid.hpp"
#include "test_util.hpp"

using namespace oamsim;
constexpr double kPi = std::numbers::pi;

namespace {
const GridSpec kGrid = GridSpec::square(512, 8.0e-3, 810.0e-9);
const double kWaist = 0.5e-3;
}  // namespace

TEST_CASE("grid validation") {
  CHECK_THROWS_AS(GridSpec::square(100, 8.0e-3), config_error);  // not power of two
  CHECK_THROWS_AS(GridSpec::square(32, 8.0e-3), config_error);   // below 64
  CHECK_THROWS_AS(GridSpec::square(256, -1.0), config_error);
  CHECK_NOTHROW(GridSpec::square(64, 1.0e-3));
}

TEST_CASE("lg mode basics") {
  const auto g00 = lg_mode({0, 0, kWaist}, kGrid);
  CHECK(g00.norm() == doctest::Approx(1.0).epsilon(1e-12));

  // l=0: real Gaussian, constant phase on axis neighborhood
  const int c = kGrid.nx / 2;
  CHECK(std::abs(std::arg(g00.at(c + 3, c + 5))) < 1e-12);
  CHECK(g00.at(c, c).real() > 0.0);

  // on-axis amplitude zero iff l != 0
  const auto g30 = lg_mode({3, 0, kWaist}, kGrid);
  CHECK(std::abs(g30.at(c, c)) == doctest::Approx(0.0));
  CHECK(std::abs(g00.at(c, c)) > 0.0);
}

TEST_CASE("lg winding number") {
  for (int l : {-10, -3, 0, 1, 3, 10}) {
    const auto m = lg_mode({l, 0, kWaist}, kGrid);
    const double r = kWaist * std::sqrt(std::max(1, std::abs(l)) / 2.0);
    CHECK(phase_winding(m, r) == l);
  }
}

TEST_CASE("lg orthogonality") {
  const auto a = lg_mode({3, 0, kWaist}, kGrid);
  const auto b = lg_mode({-3, 0, kWaist}, kGrid);
  const auto g = lg_mode({0, 0, kWaist}, kGrid);
  const auto g1 = lg_mode({1, 0, kWaist}, kGrid);
  CHECK(std::abs(overlap(a, b)) < 1e-10);
  CHECK(std::abs(overlap(g, g1)) < 1e-10);
  CHECK(std::abs(overlap(a, a) - 1.0) < 1e-12);
}

TEST_CASE("gaussian waist mismatch overlap is analytic") {
  // |<g_w|g_2w>|^2 = (2 w 2w / (w^2 + 4w^2))^2 = 0.64
  const auto gw = lg_mode({0, 0, kWaist}, kGrid);
  const auto g2w = lg_mode({0, 0, 2.0 * kWaist}, kGrid);
  CHECK(std::norm(overlap(gw, g2w)) == doctest::Approx(0.64).epsilon(1e-9));
}

TEST_CASE("overlap requires matching grids") {
  const auto a = lg_mode({0, 0, kWaist}, kGrid);
  const auto b = lg_mode({0, 0, kWaist}, GridSpec::square(256, 8.0e-3, 810.0e-9));
  CHECK_THROWS_AS(overlap(a, b), grid_mismatch_error);
}

TEST_CASE("window too small error") {
  // 1e-4 energy radius of a wide high-order mode exceeds the half-window
  CHECK_THROWS_AS(lg_mode({10, 4, 2.0e-3}, kGrid), window_too_small_error);
  CHECK_NOTHROW(lg_mode({10, 4, 0.4e-3}, kGrid));
}

TEST_CASE("oam spectrum of basis member and superposition") {
  const auto m = lg_mode({5, 0, kWaist}, kGrid);
  const auto spec = oam_spectrum(m, -6, 6, 2, kWaist);
  CHECK(spec.power(5) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(spec.residual < 1e-9);
  CHECK(spec.dominant_l() == 5);

  // (lg(-3) + lg(0)) / sqrt(2) -> half the power at each
  ComplexField sup(kGrid);
  const auto a = lg_mode({-3, 0, kWaist}, kGrid);
  const auto b = lg_mode({0, 0, kWaist}, kGrid);
  for (size_t i = 0; i < sup.data().size(); ++i)
    sup.data()[i] = (a.data()[i] + b.data()[i]) / std::sqrt(2.0);
  const auto spec2 = oam_spectrum(sup, -4, 4, 1, kWaist);
  CHECK(spec2.power(-3) == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(spec2.power(0) == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("oam spectrum sums to at most one (property)") {
  for (unsigned seed : {1u, 2u, 3u, 4u, 5u}) {
    const auto f = testutil::random_superposition(kGrid, 4, kWaist, seed);
    const auto spec = oam_spectrum(f, -5, 5, 3, kWaist);
    double total = 0.0;
    for (const auto& [l, p] : spec.power_by_l) total += p;
    CHECK(total <= 1.0 + 1e-9);
    CHECK(spec.residual >= 0.0);
  }
}

TEST_CASE("gram matrix is identity for |l|<=5, p<=2") {
  // the acceptance suite repeats this on a 1024^2 grid; 512 here for speed
  std::vector<ComplexField> modes;
  for (int l = -5; l <= 5; ++l)
    for (int p = 0; p <= 2; ++p) modes.push_back(lg_mode({l, p, 0.4e-3}, kGrid));
  double worst = 0.0;
  for (size_t i = 0; i < modes.size(); ++i)
    for (size_t j = i; j < modes.size(); ++j) {
      const double want = (i == j) ? 1.0 : 0.0;
      worst = std::max(worst, std::abs(std::abs(overlap(modes[i], modes[j])) - want));
    }
  CHECK(worst < 1e-8);
}

TEST_CASE("gaussian coupling") {
  const auto g = lg_mode({0, 0, kWaist}, kGrid);
  CHECK(gaussian_coupling(g, kWaist) == doctest::Approx(1.0).epsilon(1e-12));
  const auto m3 = lg_mode({3, 0, kWaist}, kGrid);
  CHECK(gaussian_coupling(m3, kWaist) < 1e-12);

  // waist scan recovers the true waist
  double best_w = 0.0;
  const double c = gaussian_coupling(g, 0.2e-3, 1.5e-3, 16, &best_w);
  CHECK(c == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(best_w == doctest::Approx(kWaist).epsilon(1e-2));

  CHECK_THROWS_AS(gaussian_coupling(g, 1.0e-3, 0.5e-3, 8, nullptr), empty_scan_error);
  CHECK_THROWS_AS(gaussian_coupling(g, 1.0e-3, 2.0e-3, 1, nullptr), empty_scan_error);
}

TEST_CASE("conjugate hologram flattens the helical phase") {
  // lg(3) * e^{-i3 theta} couples to the fundamental far better than
  // lg(3) * e^{+i3 theta}
  const auto m3 = lg_mode({3, 0, kWaist}, kGrid);
  ComplexField matched(kGrid), mismatched(kGrid);
  for (int iy = 0; iy < kGrid.ny; ++iy)
    for (int ix = 0; ix < kGrid.nx; ++ix) {
      const double th = std::atan2(kGrid.y(iy), kGrid.x(ix));
      matched.at(ix, iy) = m3.at(ix, iy) * std::polar(1.0, -3.0 * th);
      mismatched.at(ix, iy) = m3.at(ix, iy) * std::polar(1.0, +3.0 * th);
    }
  const double cm = gaussian_coupling(matched, 0.1e-3, 2.0e-3, 24, nullptr);
  const double cmm = gaussian_coupling(mismatched, 0.1e-3, 2.0e-3, 24, nullptr);
  CHECK(cm > 10.0 * cmm);
}

TEST_CASE("intensity moments of a gaussian") {
  const auto g = lg_mode({0, 0, kWaist}, kGrid);
  const auto m = intensity_moments(g);
  CHECK(m.centroid_x == doctest::Approx(0.0).epsilon(1e-12));
  // second-moment width of |LG00|^2 is w/2
  CHECK(m.sigma_x == doctest::Approx(kWaist / 2.0).epsilon(1e-6));
}

TEST_CASE("normalization error on zero field") {
  ComplexField z(kGrid);
  CHECK_THROWS_AS(z.normalized(), normalization_error);
}
