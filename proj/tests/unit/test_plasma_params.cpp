#include <doctest.h>

#include <cmath>

#include "test_support.hpp"
#include "ucp/error.hpp"
#include "ucp/plasma_params.hpp"

using namespace ucp;
using ucp::test::rel;

TEST_CASE("G' for the electron and its mass and charge scaling") {
  const Species e = Species::electron();
  const double g = g_prime(e);
  CHECK(g < 0.0);
  CHECK(rel(g, -2.78e32) < 2e-3);
  CHECK(g_prime(Species{e.mass, 0.0}) == 0.0);
  CHECK(rel(g_prime(Species{2.0 * e.mass, e.charge}), g / 4.0) < 1e-14);
}

TEST_CASE("derived parameters at 50 K and 1e15 m^-3") {
  PlasmaSpec spec;
  spec.T_e = 50.0;
  const auto p = derive_params(spec, 1e15);
  CHECK(rel(p.lambda_D, 15e-6) < 0.15);
  CHECK(rel(p.a_WS, 6e-6) < 0.15);
  CHECK(rel(p.r_L, 0.3e-6) < 0.15);
  CHECK(rel(p.ln_Lambda, 4.0) < 0.15);
  CHECK(p.ln_Lambda == doctest::Approx(std::log(2.0 * p.lambda_D / p.r_L)));
  CHECK(p.t_e > 0.0);
  CHECK(p.G_prime < 0.0);
  CHECK(0.5 * spec.electron.mass * p.sigma_v * p.sigma_v ==
        doctest::Approx(1.5 * constants::boltzmann * spec.T_e).epsilon(1e-12));
  CHECK(p.sigma_v1() == doctest::Approx(std::sqrt(constants::boltzmann * 50.0 / constants::electron_mass)));
}

TEST_CASE("temperature doubling scales lambda_D by sqrt 2 and halves r_L") {
  PlasmaSpec a, b;
  a.T_e = 50.0;
  b.T_e = 100.0;
  const auto pa = derive_params(a, 1e15), pb = derive_params(b, 1e15);
  CHECK(rel(pb.lambda_D / pa.lambda_D, std::sqrt(2.0)) < 1e-12);
  CHECK(rel(pb.r_L / pa.r_L, 0.5) < 1e-12);
}

TEST_CASE("Wigner-Seitz radius scales with the length scale") {
  PlasmaSpec spec;
  const double s = 3.0;
  const auto p1 = derive_params(spec, 1e15);
  const auto p2 = derive_params(spec, 1e15 / (s * s * s));
  CHECK(rel(p2.a_WS / p1.a_WS, s) < 1e-12);
}

TEST_CASE("trapping threshold N* for the default plasma") {
  PlasmaSpec spec;
  const double n = n_star(spec);
  CHECK(rel(n, 1500.0) < 0.10);
  spec.knobs.n_star_prefactor = 2.0;
  CHECK(rel(n_star(spec), 2.0 * n) < 1e-12);
}

TEST_CASE("unit systems") {
  CHECK(to_dimensionless(100e-9, Dimension::time, UnitSystem::plasma) == doctest::Approx(1.0));
  CHECK(to_dimensionless(1e7 * constants::julian_year, Dimension::time, UnitSystem::cluster) == doctest::Approx(1.0));
  CHECK(scale_units(0.0, Dimension::length, UnitSystem::plasma, UnitSystem::cluster) == 0.0);
  for (auto d : {Dimension::mass, Dimension::length, Dimension::time, Dimension::velocity, Dimension::acceleration,
                 Dimension::energy_per_mass, Dimension::number_density}) {
    const double x = 1.234e-5;
    const double back =
        scale_units(scale_units(x, d, UnitSystem::plasma, UnitSystem::cluster), d, UnitSystem::cluster, UnitSystem::plasma);
    CHECK(rel(back, x) < 1e-12);
  }
  const double ratio = coupling_constant(UnitSystem::plasma) / coupling_constant(UnitSystem::cluster);
  CHECK(ratio > 0.1);
  CHECK(ratio < 10.0);
  CHECK(parse_dimension("velocity") == Dimension::velocity);
  CHECK_THROWS_AS(parse_dimension("colour"), InvalidInput);
}

TEST_CASE("virial temperature") {
  PlasmaSpec spec;
  CHECK(virial_temperature(spec) == doctest::Approx(128.0));
  PlasmaSpec neutral = spec;
  neutral.N_e = neutral.N_i;
  CHECK(virial_temperature(neutral) == 0.0);
  // the photoionization law with the same counts lands within a factor of a few
  const double t_gamma = 8.9 / 250.0 * 20000.0 * 20000.0 / spec.N_i;
  const double ratio = virial_temperature(spec) / t_gamma;
  CHECK(ratio > 1.0 / 6.0);
  CHECK(ratio < 6.0);
}

TEST_CASE("global Coulomb logarithm") {
  PlasmaSpec spec;
  const auto c = coulomb_log_global(spec);
  CHECK(rel(c.Lambda, 590.0) < 0.02);
  CHECK(rel(c.ln_Lambda, 6.4) < 0.01);
  CHECK_FALSE(c.strongly_coupled);
  PlasmaSpec tiny = spec;
  tiny.N_i = tiny.N_e + 2.0;
  const auto s = coulomb_log_global(tiny);
  CHECK(s.strongly_coupled);
  CHECK(std::isnan(s.ln_Lambda));
  CHECK(cluster_coulomb_lambda(5e5) == doctest::Approx(2e5));
}

TEST_CASE("invalid inputs are rejected") {
  PlasmaSpec spec;
  spec.sigma = -1.0;
  CHECK_THROWS_AS(spec.validate(), InvalidInput);
  CHECK_THROWS_AS(derive_params(PlasmaSpec{}, 0.0), InvalidInput);
  CHECK_THROWS_AS(coulomb_log_local(1e15, 0.0), InvalidInput);
}
