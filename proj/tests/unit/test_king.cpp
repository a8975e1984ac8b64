#include <doctest.h>

#include <cmath>

#include "test_support.hpp"
#include "ucp/error.hpp"
#include "ucp/king.hpp"
#include "ucp/numerics.hpp"

using namespace ucp;
using namespace ucp::constants;
using ucp::test::default_king;
using ucp::test::rel;

TEST_CASE("King F against a velocity-space integral") {
  CHECK(king_F(0.0) == 0.0);
  const double x = 5.0;
  const double vmax = std::sqrt(2.0 * x);
  const double direct =
      num::integrate([&](double v) { return 4.0 * pi * v * v * (std::exp(x - 0.5 * v * v) - 1.0); }, 0.0, vmax, 1e-13) /
      std::pow(2.0 * pi, 1.5);
  CHECK(rel(king_F(x), direct) < 1e-8);
  CHECK(rel(king_F(40.0) / std::exp(40.0), 1.0) < 1e-12);
  // small-x behaviour: (8 / 15 sqrt pi) x^{5/2}
  CHECK(rel(king_F(1e-3), 8.0 / (15.0 * std::sqrt(pi)) * std::pow(1e-3, 2.5)) < 1e-3);
}

TEST_CASE("truncated Maxwellian in energy") {
  const auto& p = default_king().params;
  CHECK(king_f_of_E(p, p.E_t) == 0.0);
  CHECK(king_f_of_E(p, p.E0) > king_f_of_E(p, 0.5 * (p.E0 + p.E_t)));
  CHECK(king_dfdE(p, 0.5 * (p.E0 + p.E_t)) < 0.0);

  // density in a well of local depth eta_t is n_e0 F(eta_t) / F(eta)
  const double kT_m = boltzmann * p.T_K / p.electron_mass;
  for (double eta_t : {0.5, 2.0, 5.0}) {
    const double phi = p.E_t - eta_t * kT_m;
    const double n = num::integrate(
        [&](double E) { return 4.0 * pi * king_f_of_E(p, E) * std::sqrt(2.0 * (E - phi)); }, phi, p.E_t, 1e-13);
    CHECK(rel(n, p.n_e0 * king_F(eta_t) / king_F(p.eta)) < 1e-8);
  }
}

TEST_CASE("local temperature ratio limits") {
  CHECK(king_temperature_ratio(1e-4) < 1e-3);
  CHECK(king_temperature_ratio(40.0) == doctest::Approx(1.0).epsilon(1e-10));
  double prev = 0.0;
  for (double x = 0.1; x < 20.0; x += 0.1) {
    const double r = king_temperature_ratio(x);
    CHECK(r > prev);
    prev = r;
  }
}

TEST_CASE("erf(0.22 eta_t) stands in for the exact ratio within 5% on [0.5, 15]") {
  double worst = 0.0, at = 0.0;
  for (double x = 0.5; x <= 15.0; x += 0.05) {
    const double d = std::abs(king_temperature_ratio_approx(x) / king_temperature_ratio(x) - 1.0);
    if (d > worst) {
      worst = d;
      at = x;
    }
  }
  INFO("worst relative deviation " << worst << " at eta_t = " << at);
  CHECK(worst < 0.05);
}

TEST_CASE("temperature from counts") {
  // 1.9 (eta - 2) k T = sqrt(2/pi) q^2 dN / (4 pi eps0 sigma)
  const double q2 = elementary_charge * elementary_charge / (4.0 * pi * epsilon0);
  const double expect = std::sqrt(2.0 / pi) * q2 * 20000.0 / 250e-6 / (1.9 * 5.0 * boltzmann);
  CHECK(rel(temp_from_counts(250000.0, 230000.0, 250e-6, 7.0), expect) < 1e-12);
  CHECK(temp_from_counts(1e5, 1e5, 250e-6, 7.0) == 0.0);
  CHECK(rel(temp_from_counts(250000.0, 230000.0, 250e-6, 7.0) / temp_from_counts(250000.0, 230000.0, 250e-6, 12.0),
            2.0) < 1e-12);
  CHECK_THROWS_AS(temp_from_counts(250000.0, 230000.0, 250e-6, 1.5), InvalidInput);
}

TEST_CASE("self-consistent equilibrium for the default plasma") {
  const auto& eq = default_king();
  const PlasmaSpec spec;
  CHECK(rel(eq.N_e_computed, spec.N_e) < 1e-6);
  CHECK(eq.params.T_K > 10.0);
  CHECK(eq.params.T_K < 1000.0);
  const double rc = eq.crossing_radius / spec.sigma;
  CHECK(rc > 2.5);
  CHECK(rc < 4.5);
  CHECK(rel(harmonic_core_temperature(eq), eq.params.T_K) < 0.20);
  CHECK(eq.ode_residual < 1e-6);
  // the edge sits at the truncation energy
  CHECK(eq.eta_t.back() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(eq.eta_t.front() == doctest::Approx(7.0).epsilon(1e-9));
  CHECK(temperature_profile(eq, 0.0) == doctest::Approx(eq.params.T_K * king_temperature_ratio(7.0)));
  CHECK(mean_temperature(eq) < eq.params.T_K);
}

TEST_CASE("velocity distribution against the untruncated Maxwellian") {
  const PlasmaSpec spec;
  const auto eq = solve_selfconsistent(spec, 5.0, 12.0 * spec.sigma);
  const auto t = maxwellian_comparison(eq);
  CHECK(t.v.front() == 0.0);
  CHECK(t.king.front() == 0.0);
  CHECK(t.maxwellian.front() == 0.0);
  const std::size_t n = t.v.size();
  CHECK(t.king[n - 1] == doctest::Approx(t.king[n - 2]).epsilon(1e-3));
  CHECK(t.maxwellian[n - 1] > t.king[n - 1]);
  CHECK(t.maxwellian[n - 1] > t.maxwellian[n - 2]);
}

TEST_CASE("invalid King inputs") {
  PlasmaSpec spec;
  CHECK_THROWS_AS(solve_selfconsistent(spec, -1.0, 12.0 * spec.sigma), InvalidInput);
  CHECK_THROWS_AS(solve_selfconsistent(spec, 7.0, 0.0), InvalidInput);
}
