#include <benchmark/benchmark.h>

#include <cmath>

#include "ucp/fokker_planck.hpp"
#include "ucp/ion_cloud.hpp"
#include "ucp/king.hpp"
#include "ucp/numerics.hpp"
#include "ucp/orbit_space.hpp"
#include "ucp/tbr.hpp"

using namespace ucp;

namespace {

const KingEquilibrium& king() {
  static const KingEquilibrium eq = [] {
    const PlasmaSpec spec;
    return solve_selfconsistent(spec, 7.0, 12.0 * spec.sigma);
  }();
  return eq;
}

void BM_KingSolve(benchmark::State& state) {
  const PlasmaSpec spec;
  KingOptions opt;
  opt.grid_points = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(solve_selfconsistent(spec, 7.0, 12.0 * spec.sigma, opt));
}
BENCHMARK(BM_KingSolve)->Arg(200)->Arg(800)->Unit(benchmark::kMillisecond);

void BM_PhaseVolume(benchmark::State& state) {
  const auto& eq = king();
  const PotentialProfile prof(eq.r, eq.phi, eq.dphi_dr);
  const double E = prof.E0() + 0.6 * (prof.E_t() - prof.E0());
  for (auto _ : state) benchmark::DoNotOptimize(phase_volume(prof, E));
}
BENCHMARK(BM_PhaseVolume);

void BM_Geometry(benchmark::State& state) {
  const auto& eq = king();
  const PotentialProfile prof(eq.r, eq.phi, eq.dphi_dr);
  for (auto _ : state) benchmark::DoNotOptimize(build_geometry(prof, static_cast<std::size_t>(state.range(0))));
}
BENCHMARK(BM_Geometry)->Arg(100)->Arg(300)->Unit(benchmark::kMillisecond);

void BM_CollisionStep(benchmark::State& state) {
  const auto& eq = king();
  const auto dist = king_distribution(eq, static_cast<std::size_t>(state.range(0)));
  const double gamma = gamma_coefficient(Species::electron(), coulomb_log_local(eq.params.n_e0, eq.params.T_K));
  for (auto _ : state) benchmark::DoNotOptimize(collision_step(dist, 2e-8, gamma));
}
BENCHMARK(BM_CollisionStep)->Arg(100)->Arg(300)->Arg(1000);

void BM_MasterEquationStep(benchmark::State& state) {
  BoundPopulation pop;
  pop.grid = BoundGrid::logarithmic();
  pop.p.assign(pop.grid.size(), 1.0);
  MasterEquationOptions opt;
  opt.n_e = 1e15;
  opt.T_e = 50.0;
  for (auto _ : state) benchmark::DoNotOptimize(master_equation_step(pop, 1e-8, opt));
}
BENCHMARK(BM_MasterEquationStep)->Unit(benchmark::kMillisecond);

void BM_PoissonRecouple(benchmark::State& state) {
  const auto& eq = king();
  const PotentialProfile prof(eq.r, eq.phi, eq.dphi_dr);
  const auto dist = king_distribution(eq, 200);
  const GaussianCloud cloud = GaussianCloud::from_spec(PlasmaSpec{});
  const auto later = cloud.at_time(1e-7);
  const auto r = num::linspace(0.0, 12.0 * later.sigma(), 300);
  for (auto _ : state) benchmark::DoNotOptimize(poisson_recouple(dist, prof, later, r));
}
BENCHMARK(BM_PoissonRecouple)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
