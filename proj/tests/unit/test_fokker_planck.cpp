#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "square_well.hpp"
#include "test_support.hpp"
#include "ucp/error.hpp"
#include "ucp/fokker_planck.hpp"
#include "ucp/ion_cloud.hpp"
#include "ucp/numerics.hpp"

using namespace ucp;
using namespace ucp::constants;
using ucp::test::default_king;
using ucp::test::rel;

namespace {

struct KingSetup {
  PotentialProfile profile;
  EnergyDistribution dist;
  double gamma = 0.0;
};

const KingSetup& king_setup() {
  static const KingSetup s = [] {
    const auto& eq = default_king();
    KingSetup k;
    k.profile = PotentialProfile(eq.r, eq.phi, eq.dphi_dr);
    k.dist = king_distribution(eq, 300);
    k.gamma = gamma_coefficient(Species::electron(), coulomb_log_local(eq.params.n_e0, eq.params.T_K));
    return k;
  }();
  return s;
}

double moment(const EnergyDistribution& d, int k) {
  double s = 0.0;
  for (std::size_t i = 0; i < d.f.size(); ++i) s += d.f[i] * d.mesh.volume[i] * std::pow(d.mesh.E[i], k);
  return s;
}

void square_well_comparison(bool absorbing) {
  const auto m = ucp::test::square_well_run(absorbing);
  for (int k = 0; k <= 2; ++k) {
    INFO("moment " << k << ": orbit-averaged " << m.orbit_averaged[k] << ", speed grid " << m.speed_grid[k]);
    CHECK(rel(m.orbit_averaged[k], m.speed_grid[k]) < 0.01);
  }
  // the comparison is not vacuous: the shape changed appreciably
  CHECK(m.shape_change > 0.05);
}

}  // namespace

TEST_CASE("square well: orbit-averaged solver against a speed-grid discretization, reflecting wall") {
  square_well_comparison(false);
}

TEST_CASE("square well: orbit-averaged solver against a speed-grid discretization, absorbing wall") {
  square_well_comparison(true);
}

TEST_CASE("a Maxwellian is a fixed point of the operator") {
  const auto& k = king_setup();
  const auto m = maxwellian_distribution(k.dist.mesh, 120.0, 1e15);
  const auto fl = flux(m, k.gamma);
  double fmax = 0.0, pmax = 0.0;
  const double scale = m.number() * 1e6;  // electrons/s for one relaxation per microsecond
  for (std::size_t i = 0; i < fl.Pi.size(); ++i) {
    pmax = std::max(pmax, std::abs(fl.Pi[i]));
    if (!std::isnan(fl.T_G[i])) CHECK(fl.T_G[i] == doctest::Approx(120.0).epsilon(1e-10));
  }
  CHECK(pmax / scale < 1e-10);

  StepOptions reflecting;
  reflecting.absorbing = false;
  auto d = m;
  for (int s = 0; s < 100; ++s) d = collision_step(d, 2e-8, k.gamma, reflecting);
  for (std::size_t i = 0; i < d.f.size(); ++i) fmax = std::max(fmax, std::abs(d.f[i] - m.f[i]) / m.f[0]);
  CHECK(fmax < 1e-8);
}

TEST_CASE("King state: flux, stationarity bracket and evaporation") {
  const auto& k = king_setup();
  const auto fl = flux(k.dist, k.gamma);
  CHECK(fl.Pi[1] > 0.0);
  CHECK(kramers_limit_check(k.dist, default_king().params.T_K) < 1e-10);

  auto bumped = k.dist;
  for (std::size_t i = 0; i < bumped.f.size(); ++i) bumped.f[i] *= 1.0 + 0.1 * std::sin(0.05 * static_cast<double>(i));
  CHECK(kramers_limit_check(bumped, default_king().params.T_K) > 1e-3);

  const double evap = evaporation_rate(k.dist, k.gamma, 4.0 * pi);
  CHECK(evap < 0.0);
  CHECK(rel(evap, fl.Pi.back()) < 1e-6);
  CHECK(rel(evaporation_rate(k.dist, 2.0 * k.gamma, 4.0 * pi), 2.0 * evap) < 1e-12);

  auto empty = k.dist;
  std::fill(empty.f.begin(), empty.f.end(), 0.0);
  CHECK(evaporation_rate(empty, k.gamma, 4.0 * pi) == 0.0);
}

TEST_CASE("number changes only through the boundary") {
  const auto& k = king_setup();
  auto d = k.dist;
  for (int s = 0; s < 20; ++s) {
    StepReport rep;
    const double h = 2e-8;
    d = collision_step(d, h, k.gamma, {}, &rep);
    CHECK(std::abs(rep.number_after - rep.number_before - h * rep.boundary_flux) / rep.number_before < 1e-8);
    CHECK(rep.boundary_flux <= 0.0);
    CHECK(d.f.back() == 0.0);
    for (double v : d.f) CHECK(v >= 0.0);
  }
}

TEST_CASE("a bimodal distribution relaxes with nonincreasing H") {
  const auto& k = king_setup();
  auto d = k.dist;
  const double mid = 0.5 * (d.mesh.E0() + d.mesh.E_t()), w = 0.05 * (d.mesh.E_t() - d.mesh.E0());
  for (std::size_t i = 0; i < d.f.size(); ++i)
    d.f[i] = d.f[i] * 0.2 + d.f[0] * std::exp(-std::pow((d.mesh.E[i] - mid) / w, 2));
  d.f.back() = 0.0;
  auto H = [](const EnergyDistribution& x) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.f.size(); ++i)
      if (x.f[i] > 0.0) s += x.f[i] * std::log(x.f[i]) * x.mesh.volume[i];
    return s;
  };
  StepOptions reflecting;
  reflecting.absorbing = false;
  double prev = H(d);
  for (int s = 0; s < 40; ++s) {
    d = collision_step(d, 2e-8, k.gamma, reflecting);
    const double h = H(d);
    CHECK(h <= prev + 1e-12 * std::abs(prev));
    prev = h;
  }
}

TEST_CASE("single-encounter ejection") {
  const auto& k = king_setup();
  const double ej = ejection_rate(k.dist, k.profile);
  CHECK(ej < 0.0);
  auto twice = k.dist;
  for (auto& v : twice.f) v *= 2.0;
  CHECK(rel(ejection_rate(twice, k.profile), 4.0 * ej) < 1e-10);
  auto empty = k.dist;
  std::fill(empty.f.begin(), empty.f.end(), 0.0);
  CHECK(ejection_rate(empty, k.profile) == 0.0);
  CHECK(std::abs(ej) < 1e-2 * std::abs(evaporation_rate(k.dist, k.gamma, 4.0 * pi)));
}

TEST_CASE("escaping electrons thin out as r^-2") {
  const auto r = num::logspace(1e-3, 1e-2, 20);
  const auto n = escape_density(1e9, r, 3e4);
  std::vector<double> lr, ln;
  for (std::size_t k = 0; k < r.size(); ++k) {
    lr.push_back(std::log(r[k]));
    ln.push_back(std::log(n[k]));
  }
  CHECK(std::abs(num::fit_line(lr, ln).slope + 2.0) < 0.1);
}

TEST_CASE("stationary solutions") {
  const auto& k = king_setup();
  const auto m = maxwellian_distribution(k.dist.mesh, 120.0, 1e15);
  const auto homog = stationary_solve(m, k.gamma, 0.0);
  CHECK_FALSE(homog.diverges);
  CHECK(homog.dist.f.back() > 0.0);
  const std::size_t n = homog.dist.f.size();
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double x = electron_mass * (homog.dist.mesh.E[i] - homog.dist.mesh.E0()) / (boltzmann * 120.0);
    if (x > 20.0) break;
    CHECK(homog.dist.f[i] / homog.dist.f[0] == doctest::Approx(std::exp(-x)).epsilon(1e-6));
  }
  CHECK(rel(homog.dist.number(), m.number()) < 1e-10);

  const double loss = std::abs(evaporation_rate(k.dist, k.gamma, 4.0 * pi));
  const auto leak = stationary_solve(k.dist, k.gamma, loss);
  CHECK(leak.dist.f.back() == 0.0);
  for (double v : leak.dist.f) CHECK(v >= 0.0);
}

TEST_CASE("density from f reproduces the King profile") {
  const auto& eq = default_king();
  const auto& k = king_setup();
  for (std::size_t i = 0; i < eq.r.size(); i += 25)
    CHECK(std::abs(electron_density(k.dist, k.profile(eq.r[i])) - eq.n_e[i]) / eq.params.n_e0 < 1e-6);
}

TEST_CASE("Poisson recoupling") {
  const auto& k = king_setup();
  GaussianCloud cloud = GaussianCloud::from_spec(PlasmaSpec{});
  const double r_t = 12.0 * cloud.sigma();
  const auto r = num::linspace(0.0, r_t, 300);

  SUBCASE("static ions keep the King state") {
    cloud.v0 = 0.0;
    const auto res = poisson_recouple(k.dist, k.profile, cloud, r);
    CHECK(res.iterations <= 1);
    CHECK(rel(res.dist.number(), k.dist.number()) < 1e-6);
    for (std::size_t i = 0; i < k.dist.f.size(); i += 10)
      CHECK(std::abs(res.dist.f[i] - k.dist.f[i]) / k.dist.f[0] < 1e-5);
  }
  SUBCASE("a 1% expansion conserves N and cools") {
    const double t = std::sqrt(std::pow(1.01, 2) - 1.0) * cloud.sigma0 / cloud.v0;
    const auto later = cloud.at_time(t);
    const auto res = poisson_recouple(k.dist, k.profile, later, num::linspace(0.0, 12.0 * later.sigma(), 300));
    // only the sliver of phase volume pushed past the new edge is lost
    CHECK(res.dist.number() <= k.dist.number() * (1.0 + 1e-12));
    CHECK(rel(res.dist.number(), k.dist.number()) < 1e-6);
    CHECK(res.dist.mean_temperature() < k.dist.mean_temperature());
    CHECK(res.residual < 1e-6);
  }
}

TEST_CASE("preconditions") {
  const auto& k = king_setup();
  auto bad = k.dist;
  bad.f.back() = 1.0;
  // the absorbing edge is imposed, not checked
  CHECK(collision_step(bad, 1e-9, k.gamma).f.back() == 0.0);
  CHECK_THROWS_AS(evaporation_rate(bad, k.gamma, 4.0 * pi), ContractViolation);
  bad.f.front() = -1.0;
  CHECK_THROWS_AS(collision_step(bad, 1e-9, k.gamma), ContractViolation);
  CHECK_THROWS_AS(collision_step(k.dist, -1.0, k.gamma), InvalidInput);
}
