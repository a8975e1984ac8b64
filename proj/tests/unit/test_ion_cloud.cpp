#include <doctest.h>

#include <cmath>

#include "test_support.hpp"
#include "ucp/error.hpp"
#include "ucp/ion_cloud.hpp"
#include "ucp/numerics.hpp"

using namespace ucp;
using namespace ucp::constants;
using ucp::test::rel;

namespace {
GaussianCloud static_cloud() {
  GaussianCloud c = GaussianCloud::from_spec(PlasmaSpec{});
  c.v0 = 0.0;
  return c;
}
}  // namespace

TEST_CASE("enclosed ion count") {
  const auto c = static_cloud();
  CHECK(enclosed_ions(c, 0.0) == 0.0);
  CHECK(rel(enclosed_ions(c, 40.0 * c.sigma0), c.N_i) < 1e-14);
  const double direct = num::integrate(
      [&](double r) { return 4.0 * pi * r * r * ion_density(c, r); }, 0.0, c.sigma0, 1e-13);
  CHECK(rel(enclosed_ions(c, c.sigma0), direct) < 1e-10);
}

TEST_CASE("ionic potential limits and gradient") {
  const auto c = static_cloud();
  const double g = std::abs(g_prime(c.electron)) * c.electron.mass;
  // center: -|G'| m N_i sqrt(2/pi) / sigma
  const double center = -g * c.N_i * std::sqrt(2.0 / pi) / c.sigma0;
  CHECK(rel(ionic_potential(c, 1e-9 * c.sigma0), center) < 1e-9);
  CHECK(rel(ionic_potential(c, 10.0 * c.sigma0), -g * c.N_i / (10.0 * c.sigma0)) < 1e-6);
  const double r = c.sigma0, h = 1e-4 * c.sigma0;
  const double fd = (ionic_potential(c, r + h) - ionic_potential(c, r - h)) / (2.0 * h);
  CHECK(rel(ionic_potential_gradient(c, r), fd) < 1e-6);
}

TEST_CASE("self-similar expansion velocity") {
  GaussianCloud c = GaussianCloud::from_spec(PlasmaSpec{});
  CHECK(c.v0 > 0.0);
  CHECK(self_similar_velocity(c, 2.0 * c.sigma0, 0.0) == 0.0);
  for (double t : {1e-7, 3e-6, 5e-5}) {
    CHECK(rel(self_similar_velocity(c, c.sigma_at(t), t), c.sigma_rate_at(t)) < 1e-12);
  }
  const double t_late = 1e3;
  CHECK(rel(self_similar_velocity(c, 0.1, t_late), 0.1 / t_late) < 1e-6);
}

TEST_CASE("adiabatic cooling") {
  GaussianCloud c = GaussianCloud::from_spec(PlasmaSpec{});
  const double T0 = 50.0;
  c.v0 = std::sqrt(boltzmann * T0 / c.ion.mass);
  CHECK(adiabatic_cooling(c, T0, 0.0).T_e == T0);
  CHECK(adiabatic_cooling(c, T0, c.sigma0 / c.v0).T_e == doctest::Approx(T0 / 2.0));
  CHECK(adiabatic_cooling(c, T0, 1e3).T_e == doctest::Approx(0.0).epsilon(1e-9));
  // a faster expansion than the energy budget allows is clamped
  c.v0 *= 2.0;
  CHECK(adiabatic_cooling(c, T0, 1e-3).exhausted);
}

TEST_CASE("shell trajectories") {
  const auto c = static_cloud();
  const auto ens = make_shells(c, 200);
  const auto& sh = ens.shells[120];
  CHECK(shell_position(sh, c.ion, 0.0) == sh.r_init);

  // early times: r/r_i - 1 = (A t)^2 / 4 from the constant initial acceleration
  const double A = shell_rate(sh, c.ion);
  const double t_ce = coulomb_explosion_time(c);
  for (double frac : {0.01, 0.03, 0.05}) {
    const double t = frac * t_ce;
    const double expect = 0.25 * A * A * t * t;
    CHECK(rel(shell_position(sh, c.ion, t) / sh.r_init - 1.0, expect) < 0.01);
  }

  // energy along the trajectory
  const double dn = sh.Ni_enclosed - sh.Ne_enclosed;
  const double k = elementary_charge * elementary_charge * dn / (4.0 * pi * epsilon0);
  for (double t : {0.3 * t_ce, t_ce, 2.5 * t_ce}) {
    const double r = shell_position(sh, c.ion, t);
    const double v = shell_velocity(sh, c.ion, t);
    const double kinetic = 0.5 * c.ion.mass * v * v;
    const double potential = k * (1.0 / sh.r_init - 1.0 / r);
    CHECK(std::abs(kinetic - potential) / potential < 1e-8);
  }
}

TEST_CASE("explosion time scale and the density at t = 0") {
  const auto c = static_cloud();
  CHECK(rel(coulomb_explosion_time(c), 3.5e-6) < 0.10);
  const auto ens = make_shells(c, 100);
  const auto now = evolve_shells(ens, c.ion, 0.0);
  for (std::size_t k = 5; k < now.shells.size() - 5; ++k)
    CHECK(rel(now.density[k], ion_density(c, now.shells[k].r_now)) < 1e-3);
  CHECK_FALSE(now.spike_detected);
}

TEST_CASE("a spike forms once outer shells are overtaken") {
  const auto c = static_cloud();
  const auto ens = make_shells(c, 400);
  const double t_ce = coulomb_explosion_time(c);
  CHECK_FALSE(evolve_shells(ens, c.ion, 0.5 * t_ce).spike_detected);
  const auto late = evolve_shells(ens, c.ion, 3.0 * t_ce);
  CHECK(late.spike_detected);
  CHECK(late.spike_radius > c.sigma0);
}

TEST_CASE("conductivity and mean free path") {
  PlasmaSpec spec;
  const auto p = derive_params(spec, 1e15);
  const double rho = 1e15 * electron_mass;
  // mean free path with the one-dimensional dispersion
  const auto r = conductivity_coefficient(rho, p.sigma_v1(), p.ln_Lambda, spec.sigma);
  CHECK(rel(r.mean_free_path, 2e-3) < 0.25);
  CHECK(r.long_mean_free_path);
  const auto r2 = conductivity_coefficient(rho, 2.0 * p.sigma_v1(), p.ln_Lambda, spec.sigma);
  CHECK(rel(r2.coefficient, 0.5 * r.coefficient) < 1e-12);
  CHECK(conductivity_coefficient(0.0, p.sigma_v1(), p.ln_Lambda, spec.sigma).coefficient == 0.0);
}

TEST_CASE("explosion needs a charge excess") {
  GaussianCloud c = static_cloud();
  c.N_e = c.N_i;
  CHECK_THROWS_AS(coulomb_explosion_time(c), InvalidInput);
}
