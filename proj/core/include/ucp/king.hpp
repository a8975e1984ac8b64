#pragma once

#include <cstddef>
#include <vector>

#include "ucp/ion_cloud.hpp"
#include "ucp/plasma_params.hpp"

namespace ucp {

// F^K(x) = e^x erf(sqrt x) - sqrt(4x/pi)(1 + 2x/3); vanishes like x^{5/2}.
double king_F(double x);
// T_e / T_K for a local trap depth eta_t: 1 - (8/(15 sqrt pi)) eta_t^{5/2} / F^K(eta_t).
double king_temperature_ratio(double eta_t);
// Cheap closed-form stand-in, erf(0.22 eta_t).
double king_temperature_ratio_approx(double eta_t);

struct KingParams {
  double eta = 7.0;
  double T_K = 0.0;       // K
  double n_e0 = 0.0;      // m^-3, central electron density
  double E_t = 0.0;       // J/kg, truncation energy (potential zero at infinity)
  double E0 = 0.0;        // J/kg, Phi(0)
  double r_t = 0.0;       // m
  double electron_mass = constants::electron_mass;
};

// Truncated Maxwellian f(E) = A (exp(-m(E-E0)/kT) - exp(-m(E_t-E0)/kT)), A fixed by n_e0.
double king_f_of_E(const KingParams& p, double E);
// d f / dE
double king_dfdE(const KingParams& p, double E);
double king_prefactor(const KingParams& p);  // A

struct KingOptions {
  std::size_t grid_points = 800;
  std::size_t refinement = 4;    // solver intervals per output interval
  double tail_window_lo = 6.0;   // in sigma
  double tail_window_hi = 12.0;
};

struct KingEquilibrium {
  KingParams params;
  GaussianCloud cloud;
  std::vector<double> r;        // m, uniform 0..r_t
  std::vector<double> eta_t;    // dimensionless trap depth
  std::vector<double> phi;      // J/kg, E_t - kT eta_t / m
  std::vector<double> dphi_dr;  // J/kg/m
  std::vector<double> n_e;      // m^-3
  std::vector<double> n_i;      // m^-3
  std::vector<double> T_e;      // K
  std::vector<double> N_e_enclosed;
  double N_e_computed = 0.0;
  double crossing_radius = 0.0;   // m, first r where n_e reaches n_i (NaN if none)
  double tail_exponent = 0.0;     // d ln n_e / d ln r over the tail window (NaN if empty)
  double ode_residual = 0.0;      // Gauss-law residual of the sampled profile, scaled by eta
  double newton_residual = 0.0;   // discrete residual of the Numerov equations / h^2
  double scaled_a = 0.0;          // e^2 sigma^2 n_i0 / (eps0 k T_K)
  double scaled_b = 0.0;          // n_e0 / n_i0
  int solves = 0;
};

KingEquilibrium solve_selfconsistent(const PlasmaSpec& spec, double eta, double r_t,
                                     const KingOptions& options = {});

double temperature_profile(const KingEquilibrium& eq, double r);
// Density-weighted mean electron temperature.
double mean_temperature(const KingEquilibrium& eq);

// 1.9 (eta - 2) k T_K = sqrt(2/pi) q^2 (N_i - N_e) / (4 pi eps0 sigma)
double temp_from_counts(double N_i, double N_e, double sigma, double eta);
// k T_K = q^2 sigma^2 (n_i0 - n_e0) / (3 eps0)
double harmonic_core_temperature(const KingEquilibrium& eq);

struct VelocityTable {
  double shell_radius = 0.0;
  double v_max = 0.0;
  std::vector<double> v;
  std::vector<double> king;        // cumulative number density below v
  std::vector<double> maxwellian;  // same for the untruncated Maxwellian at T_K
};
VelocityTable maxwellian_comparison(const KingEquilibrium& eq, double shell_quartile = 0.25,
                                    std::size_t points = 200);

}  // namespace ucp
