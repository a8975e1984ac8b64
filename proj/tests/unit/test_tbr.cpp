#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "test_support.hpp"
#include "ucp/error.hpp"
#include "ucp/numerics.hpp"
#include "ucp/orbit_space.hpp"
#include "ucp/tbr.hpp"

using namespace ucp;
using namespace ucp::constants;
using ucp::test::default_king;
using ucp::test::rel;

namespace {

// Draws x >= x_min from x^{-alpha} e^{-x} by rejection.
std::vector<double> rydberg_samples(double alpha, double x_min, std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> out;
  out.reserve(count);
  while (out.size() < count) {
    double x = 0.0, accept = 0.0;
    if (alpha > 1.0) {  // Pareto proposal, accept with e^{-(x - x_min)}
      x = x_min * std::pow(1.0 - u(rng), -1.0 / (alpha - 1.0));
      accept = std::exp(-(x - x_min));
    } else {  // exponential proposal, accept with (x / x_min)^{-alpha}
      x = x_min - std::log(1.0 - u(rng));
      accept = std::pow(x / x_min, -alpha);
    }
    if (u(rng) < accept) out.push_back(x);
  }
  return out;
}

}  // namespace

TEST_CASE("recombination rate") {
  const double rate = tbr_rate(1e15, 1e15, 50.0);
  INFO("rate at 1e9 cm^-3 and 50 K: " << rate << " s^-1");
  CHECK(rate > 10.0);
  CHECK(rate < 1000.0);
  CHECK(rel(tbr_rate(1e15, 1e15, 25.0) / rate, std::pow(2.0, 4.5)) < 1e-12);
  CHECK(rel(tbr_rate(1e15, 1e15, 50.0, 3.0), 3.0 * rate) < 1e-12);
  CHECK(tbr_rate(0.0, 1e15, 50.0) == 0.0);
  CHECK_THROWS_AS(tbr_rate(1e15, 1e15, 0.0), InvalidInput);
}

TEST_CASE("energy-transfer kernel") {
  CHECK(rel(mk_rate_scale(25.0) / mk_rate_scale(100.0), 8.0) < 1e-12);
  CHECK(rel(mk_kernel(-3.0, -5.0, 40.0) / mk_kernel(-3.0, -5.0, 160.0), 8.0) < 1e-12);
  CHECK(rel(mk_kernel(-3.0, -2.0, 70.0), mk_rate_scale(70.0) * mk_shape(-3.0, -2.0)) < 1e-14);
  CHECK(mk_shape(-2.0, -4.0) == doctest::Approx(std::pow(4.0, -4.83) * std::pow(2.0, 2.5)));
  CHECK(mk_shape(-4.0, -1.0) == doctest::Approx(std::pow(4.0, -2.33) * std::exp(-3.0)));
  for (double ei : {-0.2, -1.0, -6.0, -19.0})
    for (double ef : {-0.15, -0.9, -3.0, -15.0}) CHECK(mk_shape(ei, ef) > 0.0);

  // the two branches meet the diagonal at different values; the diagonal belongs downward
  for (double e : {-1.0, -3.82, -10.0}) {
    const double down = mk_shape(e, e);
    const double up = mk_shape(e, e * (1.0 - 1e-12));
    INFO("eps = " << e << ": downward " << down << ", upward " << up);
    CHECK(down == doctest::Approx(std::pow(-e, 2.5 - 4.83)));
    CHECK(up == doctest::Approx(std::pow(-e, -2.33)));
  }
  CHECK_THROWS_AS(mk_kernel(0.0, -1.0, 50.0), InvalidInput);
  CHECK_THROWS_AS(mk_kernel(-1.0, 0.5, 50.0), InvalidInput);
}

TEST_CASE("bottleneck from kernel totals") {
  const double b = bottleneck_binding();
  INFO("bottleneck binding " << b << " k T_e");
  CHECK(std::abs(b / 3.82 - 1.0) < 0.10);
  const auto deep = mk_totals(-10.0), shallow = mk_totals(-1.0);
  CHECK(deep.down > deep.up_bound + deep.continuum);
  CHECK(shallow.down < shallow.up_bound + shallow.continuum);
}

TEST_CASE("heating rate") {
  CHECK(rel(heating_rate(1e15, 3e-6, 1.0, 1.0 / boltzmann), 5.4) < 1e-14);
  CHECK(heating_rate(1e15, 3e-6, 0.0, 50.0) == 0.0);
  const double h = heating_rate(2e15, 1e-6, 100.0, 50.0);
  CHECK(rel(heating_rate(2e15, 1e-6, 300.0, 50.0), 3.0 * h) < 1e-14);
  CHECK(rel(heating_rate(2e15, 1e-6, 100.0, 150.0), 3.0 * h) < 1e-14);
  const double cluster = cluster_heating_rate(1.0, 1.0, 1.0);
  CHECK(cluster == doctest::Approx(100.0));
  CHECK(cluster / 5.4 == doctest::Approx(18.5).epsilon(0.01));
}

TEST_CASE("hard-soft threshold") {
  CHECK(rel(epsilon_star(1.0, 1e15), boltzmann * 500.0) < 1e-12);
  CHECK(rel(epsilon_star(512.0, 1e15), boltzmann * 125.0) < 1e-12);
  CHECK(rel(epsilon_star(50.0, 512e15) / epsilon_star(50.0, 1e15), 2.0) < 1e-12);

  const auto s = tbr_state(1e15, 1e15, 50.0, 3e-6);
  CHECK(s.rate == doctest::Approx(tbr_rate(1e15, 1e15, 50.0)));
  CHECK(s.bottleneck_energy > 0.0);
  CHECK(rel(s.bottleneck_energy, bottleneck_binding() * boltzmann * 50.0) < 1e-10);
  CHECK(s.heating == doctest::Approx(heating_rate(1e15, 3e-6, s.rate, 50.0)));
}

TEST_CASE("Fokker-Planck source term") {
  const auto& eq = default_king();
  const PotentialProfile prof(eq.r, eq.phi, eq.dphi_dr);
  std::vector<double> E;
  for (double frac : {0.05, 0.3, 0.6, 0.95}) E.push_back(prof.E0() + frac * (prof.E_t() - prof.E0()));

  const auto zero = fp_source_term(prof, [](double) { return 0.0; }, E);
  for (double v : zero) CHECK(v == 0.0);

  const double edot = 3.7e5;
  const auto flat = fp_source_term(prof, heating_profile(edot, HeatingWeighting::uniform), E);
  for (std::size_t k = 0; k < E.size(); ++k)
    CHECK(rel(flat[k], 16.0 * pi * pi * edot * phase_volume(prof, E[k]).dq_dE) < 1e-8);

  // density weighting only reduces the source away from the centre
  const auto weighted = fp_source_term(
      prof, heating_profile(edot, HeatingWeighting::density_product, eq.r, eq.n_e, eq.n_i), E);
  for (std::size_t k = 0; k < E.size(); ++k) {
    CHECK(weighted[k] > 0.0);
    CHECK(weighted[k] < flat[k]);
  }
}

TEST_CASE("bound-state master equation") {
  const auto grid = BoundGrid::logarithmic();
  CHECK(grid.size() == 200);
  CHECK(grid.eps.front() == doctest::Approx(-20.0));
  CHECK(grid.eps.back() == doctest::Approx(-0.1));

  MasterEquationOptions opt;
  opt.n_e = 1e15;
  opt.T_e = 50.0;
  const double k0 = mk_rate_scale(opt.T_e);
  const double unit_time = 1.0 / (opt.n_e * k0);

  auto seeded = [&](double eps) {
    BoundPopulation pop;
    pop.grid = grid;
    pop.p.assign(grid.size(), 0.0);
    std::size_t best = 0;
    for (std::size_t i = 0; i < grid.size(); ++i)
      if (std::abs(grid.eps[i] - eps) < std::abs(grid.eps[best] - eps)) best = i;
    pop.p[best] = 1000.0;
    return pop;
  };

  SUBCASE("dt = 0 is the identity") {
    const auto pop = seeded(-5.0);
    const auto same = master_equation_step(pop, 0.0, opt);
    CHECK(same.p == pop.p);
    CHECK(same.ionized == 0.0);
  }
  SUBCASE("hard atoms get harder") {
    const auto pop = seeded(-12.0);
    const auto later = master_equation_step(pop, 0.05 * unit_time, opt);
    CHECK(later.mean_binding() > pop.mean_binding());
    CHECK(rel(later.bound() + later.ionized, pop.bound()) < 1e-8);
  }
  SUBCASE("soft atoms ionize") {
    const auto pop = seeded(-0.5);
    const auto later = master_equation_step(pop, 0.05 * unit_time, opt);
    CHECK(later.ionized > 0.0);
    CHECK(later.mean_binding() < pop.mean_binding() + 1e-9);
    CHECK(rel(later.bound() + later.ionized, pop.bound()) < 1e-8);
  }
  SUBCASE("capture feeds the shallowest cell") {
    BoundPopulation pop;
    pop.grid = grid;
    pop.p.assign(grid.size(), 0.0);
    opt.capture_rate = 1e6;
    const auto later = master_equation_step(pop, 1e-7, opt);
    CHECK(rel(later.captured, 0.1) < 1e-10);
    CHECK(rel(later.bound() + later.ionized, later.captured) < 1e-8);
  }
  CHECK_THROWS_AS(master_equation_step(seeded(-1.0), -1.0, opt), InvalidInput);
}

TEST_CASE("drift changes sign once near the bottleneck") {
  const auto grid = BoundGrid::logarithmic();
  const double b = drift_sign_change(grid);
  INFO("drift sign change at " << b << " k T_e");
  CHECK(b > 3.0);
  CHECK(b < 5.0);
  const auto drift = master_equation_drift(grid);
  CHECK(drift.front() < 0.0);
  CHECK(drift.back() > 0.0);
}

TEST_CASE("Rydberg distribution fit") {
  const double T = 100.0, kT = boltzmann * T;
  auto fit_from = [&](double alpha, std::uint64_t seed) {
    auto x = rydberg_samples(alpha, 0.05, 40000, seed);
    for (auto& v : x) v *= kT;
    return fit_rydberg_distribution(x);
  };

  const auto a = fit_from(1.5, 11);
  INFO("alpha " << a.alpha << ", T " << a.T_ryd);
  CHECK(rel(a.alpha, 1.5) < 0.10);
  CHECK(rel(a.T_ryd, T) < 0.10);
  CHECK_FALSE(a.at_equilibrium_bound);
  CHECK(a.alpha_stderr > 0.0);

  const auto e = fit_from(0.0, 12);
  CHECK(std::abs(e.alpha) < 0.1);
  CHECK(rel(e.T_ryd, T) < 0.10);

  CHECK(fit_from(2.7, 13).at_equilibrium_bound);

  CHECK_THROWS_AS(fit_rydberg_distribution(std::vector<double>(10, 1.0)), InvalidInput);
  CHECK_THROWS_AS(fit_rydberg_distribution(std::vector<double>(100, 1e-22)), ConvergenceError);
}
