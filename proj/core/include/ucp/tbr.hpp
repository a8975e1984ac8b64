#pragma once

// Three-body recombination: the free-electron loss rate, the bound-state energy
// transfer kernel, the heating it feeds into the free electrons, and the bound
// population master equation.
//
// Bound energies in the kernel and master equation are in units of k_B T_e and
// negative (zero at the ionization threshold).

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "ucp/fokker_planck.hpp"
#include "ucp/orbit_space.hpp"
#include "ucp/plasma_params.hpp"

namespace ucp {

struct TbrState {
  double rate = 0.0;               // s^-1, loss rate of free electrons (>= 0)
  double heating = 0.0;            // W per electron
  double bottleneck_energy = 0.0;  // J, binding energy where up and down rates balance
  double epsilon_star = 0.0;       // J
};

// C n_e n_i (G' m_e)^5 / (k T_e / m_e)^{9/2}.
double tbr_rate(double n_e, double n_i, double T_e, double c_tbr = 1.0,
                const Species& electron = Species::electron());

// 11 (e^2 / k T_e)^2 (k T_e / m)^{1/2}, m^3/s.
double mk_rate_scale(double T_e, const Species& electron = Species::electron());

// Dimensionless kernel shape for eps_i -> eps_f; the diagonal belongs to the downward branch.
//   eps_f <= eps_i: (-eps_f)^{-4.83} (-eps_i)^{2.5}
//   eps_f >  eps_i: (-eps_i)^{-2.33} exp(-(eps_f - eps_i))
// eps_f may be positive on the upward branch (transition into the continuum).
double mk_shape(double eps_i, double eps_f);

// k0 * mk_shape, m^3/s per unit of dimensionless final energy.  Both energies must be bound.
double mk_kernel(double eps_i, double eps_f, double T_e, const Species& electron = Species::electron());

struct KernelTotals {
  double down = 0.0;        // int over eps_f < eps_i
  double up_bound = 0.0;    // int over eps_i < eps_f < 0
  double continuum = 0.0;   // int over eps_f > 0
};
// Kernel shape integrated over final states by quadrature.
KernelTotals mk_totals(double eps_i);

// Binding energy (units of k T_e, positive) where the total downward rate equals the
// total upward rate.  With include_continuum the upward total runs to eps_f -> infinity.
double bottleneck_binding(bool include_continuum = true);

// 5.4 (n_e0 / 1e9 cm^-3 * t_PE / 3 us)^{-2/9} Gamma_TBR k T_e.
double heating_rate(double n_e0, double t_PE, double gamma_tbr, double T_e);
// Cluster analog: every binary liberates about 100 m sigma_v^2 per formation.
double cluster_heating_rate(double gamma_tbr, double mass, double sigma_v);

// k * 500 K * (T_e / 1 K)^{-2/9} (n_e / 1e9 cm^-3)^{1/9}.
double epsilon_star(double T_e, double n_e);

TbrState tbr_state(double n_e, double n_i, double T_e, double t_PE, const ModelKnobs& knobs = {},
                   const Species& electron = Species::electron());

enum class HeatingWeighting { uniform, density_product };

// Edot(r) in J/kg/s.  With density_product the central value is scaled by
// n_e(r) n_i(r) / (n_e(0) n_i(0)); the tables share the radial grid r.
std::function<double(double)> heating_profile(double edot_center, HeatingWeighting weighting,
                                              const std::vector<double>& r = {},
                                              const std::vector<double>& n_e = {},
                                              const std::vector<double>& n_i = {});

// N~(E) = 16 pi^2 int_0^{r(E)} Edot(r) sqrt(2(E - Phi)) r^2 dr at each energy, m^6 s^-4.
std::vector<double> fp_source_term(const PotentialProfile& profile, const std::function<double(double)>& edot,
                                   std::span<const double> energies);
// The same evaluated at the mid-face energies of an FP mesh, ready for StepOptions::heating.
std::vector<double> fp_source_faces(const FpMesh& mesh, const PotentialProfile& profile,
                                    const std::function<double(double)>& edot);

// Logarithmic grid in binding energy; eps increases from -hi to -lo.
struct BoundGrid {
  std::vector<double> eps;
  std::vector<double> width;  // cell widths in eps
  double top_face = 0.0;      // upper edge of the shallowest cell; beyond it counts as ionized

  static BoundGrid logarithmic(std::size_t nodes = 200, double lo = 0.1, double hi = 20.0);
  [[nodiscard]] std::size_t size() const { return eps.size(); }
};

struct BoundPopulation {
  BoundGrid grid;
  std::vector<double> p;   // atoms per cell
  double ionized = 0.0;    // cumulative atoms lost across the top face
  double captured = 0.0;   // cumulative atoms added by recombination
  double t = 0.0;

  [[nodiscard]] double bound() const;
  [[nodiscard]] double mean_binding() const;  // units of k T_e
};

struct MasterEquationOptions {
  double n_e = 0.0;                // m^-3
  double T_e = 0.0;                // K
  double capture_rate = 0.0;       // atoms/s deposited into the shallowest cell
  double max_step_fraction = 0.2;  // sub-step limit on (largest escape rate) * dt
  Species electron = Species::electron();
};

// Transition rates W[j][l] (s^-1 per n_e k0) between cells and the ionization rate out
// of each cell, in units of k0.  `below` is the rate to energies under the deepest cell;
// the master equation deposits those atoms in the deepest cell.
struct TransitionTable {
  std::vector<std::vector<double>> W;
  std::vector<double> ionization;
  std::vector<double> below;
};
TransitionTable transition_table(const BoundGrid& grid);

// Explicit sub-cycled step of dp/dt = n_e sum [K p' - K p].
BoundPopulation master_equation_step(const BoundPopulation& pop, double dt, const MasterEquationOptions& options);

// Mean d eps / dt per atom in each cell, units of k0 (k T_e per unit time n_e k0).
// Positive means softening.  The continuum part is integrated analytically to infinity.
std::vector<double> master_equation_drift(const BoundGrid& grid, bool include_continuum = true);

// Binding energy (units of k T_e) where the drift changes sign, by linear interpolation
// between cells.  Throws ConvergenceError if the sign does not change exactly once.
double drift_sign_change(const BoundGrid& grid, bool include_continuum = true);

struct RydbergDistribution {
  double alpha = 0.0;
  double T_ryd = 0.0;          // K
  double normalization = 0.0;  // count
  double alpha_stderr = 0.0;
  double T_ryd_stderr = 0.0;
  bool at_equilibrium_bound = false;  // alpha >= 5/2
};

// Fits dN/dE ~ exp(-E / k T_Ryd) (E / k T_Ryd)^{-alpha} to a histogram of binding energies (J).
RydbergDistribution fit_rydberg_distribution(std::span<const double> binding_energies, std::size_t bins = 30);

}  // namespace ucp
