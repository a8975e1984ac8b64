#pragma once

#include <vector>

#include "ucp/plasma_params.hpp"

namespace ucp {

// Spherical Gaussian ion cloud with net charge excess N_i - N_e and the
// self-similar expansion sigma(t)^2 = sigma0^2 + v0^2 t^2.
struct GaussianCloud {
  double N_i = 250000.0;
  double N_e = 230000.0;
  double sigma0 = 250e-6;
  double v0 = 0.0;
  double t = 0.0;
  Species electron = Species::electron();
  Species ion = Species::cesium133();

  static GaussianCloud from_spec(const PlasmaSpec& spec, double t = 0.0);

  [[nodiscard]] double sigma() const noexcept { return sigma_at(t); }
  [[nodiscard]] double sigma_at(double time) const noexcept;
  [[nodiscard]] double sigma_rate_at(double time) const noexcept;  // d sigma / dt
  [[nodiscard]] double peak_density() const noexcept;              // n_i(0) at time t
  [[nodiscard]] GaussianCloud at_time(double time) const;
  void validate() const;
};

double ion_density(const GaussianCloud& cloud, double r);
// N_i(r) = N_i [erf(r/sqrt2 sigma) - sqrt(2 r^2 / pi sigma^2) exp(-r^2/2 sigma^2)]
double enclosed_ions(const GaussianCloud& cloud, double r);
// Fraction of a unit Gaussian inside radius u sigma.
double gaussian_enclosed_fraction(double u);
// Per-mass potential energy of an electron in the ion field, J/kg (negative well).
double ionic_potential(const GaussianCloud& cloud, double r);
double ionic_potential_gradient(const GaussianCloud& cloud, double r);

double self_similar_velocity(const GaussianCloud& cloud, double r, double t);

struct CoolingResult {
  double T_e = 0.0;
  bool exhausted = false;  // energy balance ran out, temperature clamped at 0
};
// Electron temperature after adiabatic transfer of thermal energy into ion flow.
CoolingResult adiabatic_cooling(const GaussianCloud& cloud, double T_e0, double t);

struct Shell {
  double r_init = 0.0;
  double r_now = 0.0;
  double Ni_enclosed = 0.0;
  double Ne_enclosed = 0.0;
  bool frozen = false;  // no net outward charge; shell does not move
};

struct ShellEnsemble {
  std::vector<Shell> shells;
  double t = 0.0;
  bool spike_detected = false;
  double initial_peak_density = 0.0;
  std::vector<double> initial_density;  // n_i(r_init, 0)
  std::vector<double> density;          // n_i at shells[k].r_now, NaN beyond a crossing
  double spike_radius = 0.0;     // m, where crossing or the density criterion first fired
};

// Shells on a log grid in [r_min_sigma, r_max_sigma] sigma0 with N_e(r) = (N_e/N_i) N_i(r).
ShellEnsemble make_shells(const GaussianCloud& cloud, std::size_t count = 400,
                          double r_min_sigma = 0.05, double r_max_sigma = 8.0);

// Coulomb acceleration rate A = sqrt(2 q^2 (N_i - N_e) / (4 pi eps0 m_i r_i^3)), 1/s.
double shell_rate(const Shell& shell, const Species& ion);
double shell_position(const Shell& shell, const Species& ion, double t);
double shell_velocity(const Shell& shell, const Species& ion, double t);

ShellEnsemble evolve_shells(const ShellEnsemble& ensemble, const Species& ion, double t);

// t_CE = sqrt(4 pi eps0 m_i / (q^2 (n_i0 - n_e0)))
double coulomb_explosion_time(const GaussianCloud& cloud);

struct ConductivityResult {
  double coefficient = 0.0;     // kg m^-1 s^-1
  double mean_free_path = 0.0;  // m, 3 t_e sigma_v
  bool long_mean_free_path = false;
};
// rho: electron mass density; sigma_v: velocity dispersion used in t_e.
ConductivityResult conductivity_coefficient(double rho, double sigma_v, double ln_lambda,
                                            double cloud_sigma, double c = 1.0,
                                            const Species& electron = Species::electron());

}  // namespace ucp
