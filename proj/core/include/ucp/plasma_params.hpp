#pragma once

#include <string_view>

#include "ucp/constants.hpp"

namespace ucp {

struct Species {
  double mass = constants::electron_mass;          // kg
  double charge = -constants::elementary_charge;   // C

  static Species electron() { return {}; }
  static Species cesium133() { return {constants::cesium133_mass, constants::elementary_charge}; }
  void validate() const;
};

// Order-unity prefactors the model leaves open.  Defaults reproduce the
// formulas as commonly quoted; each can be overridden from a config block.
struct ModelKnobs {
  double n_star_prefactor = 1.0;        // multiplies the trapping-threshold count
  double c_tbr = 1.0;                   // three-body recombination rate constant
  double evaporation_prefactor = 4.0 * constants::pi;  // dN/dt = prefactor * Gamma f'(E_t) int f tau
  double conductivity_c = 1.0;          // thermal conductivity closure constant
};

struct PlasmaSpec {
  double N_i = 250000.0;
  double N_e = 230000.0;
  double sigma = 250e-6;       // m, Gaussian radius
  double T_e = 50.0;           // K, thermodynamic electron temperature
  double T_e_gamma = 50.0;     // K, photoionization excess energy as a temperature
  Species electron = Species::electron();
  Species ion = Species::cesium133();
  ModelKnobs knobs{};

  void validate() const;
  [[nodiscard]] double charge_excess() const noexcept { return N_i - N_e; }
  [[nodiscard]] double ion_peak_density() const noexcept;   // N_i / (2 pi sigma^2)^{3/2}
  [[nodiscard]] double electron_peak_density() const noexcept;
};

struct DerivedParams {
  double G_prime = 0.0;      // m^3 kg^-1 s^-2, negative
  double gamma_coeff = 0.0;  // m^6 s^-4, 4 pi G'^2 m_e^2 lnLambda
  double lambda_D = 0.0;
  double a_WS = 0.0;
  double r_L = 0.0;
  double ln_Lambda = 0.0;
  double omega_L = 0.0;
  double omega_E = 0.0;
  double omega_pl = 0.0;
  double t_e = 0.0;
  double sigma_v = 0.0;      // 3D r.m.s. speed, (1/2) m sigma_v^2 = (3/2) k T
  double N_star = 0.0;
  double t_PE = 0.0;
  double v0 = 0.0;

  [[nodiscard]] double sigma_v1() const noexcept { return sigma_v / 1.7320508075688772; }
};

double g_prime(const Species& electron);

// lnLambda = ln(2 lambda_D / r_L) for a homogeneous plasma at (n, T).
double coulomb_log_local(double n_e, double T_e);

// Collisional relaxation time for thermal speed v, density n and lnLambda.
double relaxation_time(const Species& electron, double v, double n_e, double ln_lambda);

// Gamma = 4 pi G'^2 m_e^2 lnLambda.
double gamma_coefficient(const Species& electron, double ln_lambda);

DerivedParams derive_params(const PlasmaSpec& spec, double density_n_e0);

// Trapping threshold N* for photoelectrons of temperature T_gamma in a cloud of radius sigma.
double n_star(const PlasmaSpec& spec);

struct CoulombLogGlobal {
  double Lambda = 0.0;
  double ln_Lambda = 0.0;   // NaN when strongly coupled
  bool strongly_coupled = false;
};
CoulombLogGlobal coulomb_log_global(const PlasmaSpec& spec);
// Cluster version Lambda = 0.4 N.
double cluster_coulomb_lambda(double n_bodies);

// Mean electron temperature from the virial extrapolation, T(K) = 1.6 dN / sigma(um).
double virial_temperature(const PlasmaSpec& spec);
// Same estimate evaluated from 3 k T N_e = coeff |G'| M_tot M_e / r_h with r_h = 1.54 sigma.
double virial_temperature_from_energy(const PlasmaSpec& spec, double coeff = 0.4);
// W_tot = -coeff G' ... energy of the net charge distribution, J (positive for repulsive charge).
double virial_potential_energy(const PlasmaSpec& spec, double coeff = 0.4);

enum class UnitSystem { plasma, cluster };
enum class Dimension { mass, length, time, velocity, acceleration, energy_per_mass, number_density };

Dimension parse_dimension(std::string_view name);

// Characteristic scales: plasma (m_e, 200 um, 100 ns); cluster (M_sun, 1 pc, 10 Myr).
double unit_scale(Dimension d, UnitSystem system);
double to_dimensionless(double si_value, Dimension d, UnitSystem system);
double from_dimensionless(double value, Dimension d, UnitSystem system);
// Maps an SI quantity of one system onto the SI quantity of the other system
// that has the same dimensionless value.
double scale_units(double si_value, Dimension d, UnitSystem from, UnitSystem to);
// G' m_e^2 t_p^2 / (m_p r_p^3) and G M_sun^2 T_c^2 / (M_c R_c^3).
double coupling_constant(UnitSystem system);

}  // namespace ucp
