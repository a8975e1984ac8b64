#pragma once

// Orbit-averaged Fokker-Planck evolution of the isotropic electron distribution f(E).
//
// Sign convention: Pi(E) is the rate of change of the number of electrons with energy
// below E.  Positive Pi moves electrons down in energy; the loss across E_t is Pi(E_t) <= 0.

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "ucp/ion_cloud.hpp"
#include "ucp/king.hpp"
#include "ucp/orbit_space.hpp"

namespace ucp {

// Energy nodes with the phase volume at nodes and at the cell faces between them.
struct FpMesh {
  std::vector<double> E;         // J/kg, increasing, E.front() = E0, E.back() = E_t
  std::vector<double> tau;       // phase volume at nodes
  std::vector<double> g;         // d tau / dE at nodes
  std::vector<double> tau_face;  // at midpoints between nodes (size - 1 entries)
  std::vector<double> volume;    // phase volume of each node's cell

  [[nodiscard]] std::size_t size() const { return E.size(); }
  [[nodiscard]] double E0() const { return E.front(); }
  [[nodiscard]] double E_t() const { return E.back(); }

  static FpMesh from_profile(const PotentialProfile& profile, std::size_t nodes = 300);
  // Analytic geometry, e.g. the square or harmonic well.
  static FpMesh from_functions(double E0, double E_t, std::size_t nodes,
                               const std::function<double(double)>& tau,
                               const std::function<double(double)>& dtau_dE);
};

struct EnergyDistribution {
  FpMesh mesh;
  std::vector<double> f;  // m^-3 (m/s)^-3 at the nodes
  double t = 0.0;         // s

  [[nodiscard]] double number() const;         // sum f * cell volume
  [[nodiscard]] double energy_moment() const;  // int f E g dE, J/kg per electron times count
  // m_e int f tau dE / (k int f g dE): the kinetic temperature of the whole system.
  [[nodiscard]] double mean_temperature(double electron_mass = constants::electron_mass) const;
  void validate() const;
};

EnergyDistribution king_distribution(const KingEquilibrium& eq, std::size_t nodes = 300);
EnergyDistribution maxwellian_distribution(const FpMesh& mesh, double T, double n_scale,
                                           double electron_mass = constants::electron_mass);

struct StepOptions {
  bool absorbing = true;           // f(E_t) = 0 and escape through the top face
  std::vector<double> heating;     // N~ at the faces (size - 1), empty for none
};

struct StepReport {
  double boundary_flux = 0.0;  // Pi at the top face, electrons/s (<= 0 when absorbing)
  double number_before = 0.0;
  double number_after = 0.0;
};

// One backward-Euler step of the orbit-averaged operator.  Diffusion and drift
// coefficients are frozen at the old f; face values use Chang-Cooper weighting.
EnergyDistribution collision_step(const EnergyDistribution& dist, double dt, double gamma,
                                  const StepOptions& options = {}, StepReport* report = nullptr);

struct FluxProfile {
  std::vector<double> E;
  std::vector<double> Pi;   // electrons/s at the nodes
  std::vector<double> T_G;  // K, NaN where f = 0 or f is not decreasing
};

FluxProfile flux(const EnergyDistribution& dist, double gamma,
                 double electron_mass = constants::electron_mass);

// H(E) = int min(tau, tau') f' dE' and N(E) = -int min(tau, tau') df'/dE' dE'.
struct FluxCoefficients {
  std::vector<double> H;
  std::vector<double> N;
};
FluxCoefficients flux_coefficients(const EnergyDistribution& dist);

// dN/dt = prefactor * Gamma * f'(E_t) * int f tau dE.
double evaporation_rate(const EnergyDistribution& dist, double gamma, double prefactor);

// Single-encounter ejection rate for an isolated system; negative (loss).
// The integrand diverges logarithmically at E_t, so the E range stops one mesh cell short.
double ejection_rate(const EnergyDistribution& dist, const PotentialProfile& profile,
                     const Species& electron = Species::electron(), std::size_t radial_points = 120);

// n(r) of electrons streaming out ballistically at speed v from a steady loss rate.
std::vector<double> escape_density(double rate, const std::vector<double>& r, double speed);

struct StationaryResult {
  EnergyDistribution dist;
  bool diverges = false;
  double cutoff_energy = 0.0;  // J/kg; below it the solution exceeds the cap
};

// Solves Pi~ = Pi0 for f, coefficients from `seed`.  `outflow` is the loss rate through
// E_t.  For outflow > 0 the solution vanishes at E_t; outflow = 0 gives the homogeneous
// solution, which has no edge condition and is scaled to the seed's electron number.  `heating` holds N~ at the nodes.
StationaryResult stationary_solve(const EnergyDistribution& seed, double gamma, double outflow,
                                  const std::vector<double>& heating = {}, double divergence_cap = 10.0);

// L-infinity residual of d/dx [f + df/dx], x = m(E - E0)/kT, on nodes with x >= x_min,
// relative to the largest f.  The bracket uses Scharfetter-Gummel differencing, for
// which e^{-x} and constants are exact.
double kramers_limit_check(const EnergyDistribution& dist, double T_e, double x_min = 2.0,
                           double electron_mass = constants::electron_mass);

// Electron density at potential phi from the tabulated f.
double electron_density(const EnergyDistribution& dist, double phi);

struct RecoupleResult {
  PotentialProfile profile;
  EnergyDistribution dist;
  int iterations = 0;
  double residual = 0.0;         // last relative change of Phi
  double number_correction = 1.0;  // factor applied to f to undo remap drift
};

// Rebuilds Phi from f and the ion cloud on radial grid r (ending at the truncation
// radius), remapping f at fixed phase volume until Phi stops changing.  `previous` is
// the potential f was tabulated on and seeds the iteration.
RecoupleResult poisson_recouple(const EnergyDistribution& dist, const PotentialProfile& previous,
                                const GaussianCloud& cloud, const std::vector<double>& r,
                                double tolerance = 1e-6, int max_iterations = 50);

}  // namespace ucp
