#include "ucp/plasma_params.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "ucp/error.hpp"

namespace ucp {

using namespace constants;

void Species::validate() const {
  if (!(mass > 0.0)) throw InvalidInput("species mass must be positive");
}

void PlasmaSpec::validate() const {
  electron.validate();
  ion.validate();
  if (!(N_e >= 0.0) || !(N_i >= N_e)) throw InvalidInput("need N_i >= N_e >= 0");
  if (!(sigma > 0.0)) throw InvalidInput("sigma must be positive");
  if (!(T_e >= 0.0) || !(T_e_gamma >= 0.0)) throw InvalidInput("temperatures must be >= 0");
}

double PlasmaSpec::ion_peak_density() const noexcept {
  return N_i / std::pow(2.0 * pi * sigma * sigma, 1.5);
}

double PlasmaSpec::electron_peak_density() const noexcept {
  return N_e / std::pow(2.0 * pi * sigma * sigma, 1.5);
}

double g_prime(const Species& electron) {
  electron.validate();
  return -electron.charge * electron.charge / (4.0 * pi * epsilon0 * electron.mass * electron.mass);
}

double coulomb_log_local(double n_e, double T_e) {
  if (!(n_e > 0.0) || !(T_e > 0.0)) throw InvalidInput("lnLambda needs positive n and T");
  const double lambda_D = std::sqrt(epsilon0 * boltzmann * T_e / (elementary_charge * elementary_charge * n_e));
  const double r_L = coulomb_e2 / (boltzmann * T_e);
  return std::log(2.0 * lambda_D / r_L);
}

double gamma_coefficient(const Species& electron, double ln_lambda) {
  const double g = g_prime(electron);
  return 4.0 * pi * g * g * electron.mass * electron.mass * ln_lambda;
}

double relaxation_time(const Species& electron, double v, double n_e, double ln_lambda) {
  const double g = g_prime(electron);
  const double m = electron.mass;
  return 9.0 * v * v * v / (16.0 * std::sqrt(pi) * g * g * m * m * n_e * ln_lambda);
}

double n_star(const PlasmaSpec& spec) {
  const double q2 = spec.electron.charge * spec.electron.charge;
  const double kinetic = 1.5 * boltzmann * spec.T_e_gamma;
  return spec.knobs.n_star_prefactor * kinetic * spec.sigma * 4.0 * pi * epsilon0 / q2 *
         std::sqrt(pi / 2.0);
}

DerivedParams derive_params(const PlasmaSpec& spec, double n0) {
  spec.validate();
  if (!(n0 > 0.0)) throw InvalidInput("density must be positive");
  if (!(spec.T_e > 0.0)) throw InvalidInput("T_e must be positive");
  const double q2 = spec.electron.charge * spec.electron.charge;
  const double m = spec.electron.mass;
  const double kT = boltzmann * spec.T_e;

  DerivedParams p;
  p.G_prime = g_prime(spec.electron);
  p.lambda_D = std::sqrt(epsilon0 * kT / (q2 * n0));
  p.a_WS = std::pow(4.0 * pi * n0 / 3.0, -1.0 / 3.0);
  p.r_L = q2 / (4.0 * pi * epsilon0 * kT);
  p.ln_Lambda = std::log(2.0 * p.lambda_D / p.r_L);
  p.gamma_coeff = 4.0 * pi * p.G_prime * p.G_prime * m * m * p.ln_Lambda;
  p.omega_L = std::sqrt(4.0 * pi * q2 * n0 / (epsilon0 * m));
  p.omega_E = std::sqrt(4.0 * pi * q2 * n0 / (epsilon0 * spec.ion.mass));
  p.omega_pl = std::sqrt(q2 * n0 / (epsilon0 * m));
  p.sigma_v = std::sqrt(3.0 * kT / m);
  p.t_e = relaxation_time(spec.electron, p.sigma_v, n0, p.ln_Lambda);
  p.N_star = n_star(spec);
  p.v0 = std::sqrt(boltzmann * spec.T_e_gamma / spec.ion.mass);
  p.t_PE = p.v0 > 0.0 ? spec.sigma / p.v0 : std::numeric_limits<double>::infinity();
  return p;
}

CoulombLogGlobal coulomb_log_global(const PlasmaSpec& spec) {
  if (!(spec.N_e > 0.0)) throw InvalidInput("global Coulomb log needs N_e > 0");
  if (!(spec.N_i > spec.N_e)) throw InvalidInput("global Coulomb log needs N_i > N_e");
  const double dn = spec.charge_excess();
  CoulombLogGlobal out;
  out.Lambda = 0.1 * dn * std::sqrt(dn / spec.N_e);
  out.strongly_coupled = out.Lambda < 1.0;
  out.ln_Lambda = out.strongly_coupled ? std::numeric_limits<double>::quiet_NaN() : std::log(out.Lambda);
  return out;
}

double cluster_coulomb_lambda(double n_bodies) { return 0.4 * n_bodies; }

double virial_temperature(const PlasmaSpec& spec) {
  if (!(spec.sigma > 0.0)) throw InvalidInput("sigma must be positive");
  return 1.6 * spec.charge_excess() / (spec.sigma * 1e6);
}

double virial_potential_energy(const PlasmaSpec& spec, double coeff) {
  const double r_h = 1.54 * spec.sigma;
  const double g = g_prime(spec.electron);
  const double M = spec.electron.mass * spec.charge_excess();
  return -coeff * g * M * M / r_h;
}

double virial_temperature_from_energy(const PlasmaSpec& spec, double coeff) {
  if (!(spec.N_e > 0.0)) throw InvalidInput("virial temperature needs N_e > 0");
  const double r_h = 1.54 * spec.sigma;
  const double m = spec.electron.mass;
  const double w = coeff * std::abs(g_prime(spec.electron)) * m * spec.charge_excess() * m * spec.N_e / r_h;
  return w / (3.0 * boltzmann * spec.N_e);
}

Dimension parse_dimension(std::string_view name) {
  if (name == "mass") return Dimension::mass;
  if (name == "length") return Dimension::length;
  if (name == "time") return Dimension::time;
  if (name == "velocity") return Dimension::velocity;
  if (name == "acceleration") return Dimension::acceleration;
  if (name == "energy_per_mass") return Dimension::energy_per_mass;
  if (name == "number_density") return Dimension::number_density;
  throw InvalidInput("unknown dimension '" + std::string(name) + "'");
}

namespace {
struct BaseUnits {
  double mass, length, time;
};
BaseUnits base(UnitSystem s) {
  if (s == UnitSystem::plasma) return {electron_mass, 200e-6, 100e-9};
  return {solar_mass, parsec, 1e7 * julian_year};
}
}  // namespace

double unit_scale(Dimension d, UnitSystem system) {
  const auto [M, L, T] = base(system);
  switch (d) {
    case Dimension::mass: return M;
    case Dimension::length: return L;
    case Dimension::time: return T;
    case Dimension::velocity: return L / T;
    case Dimension::acceleration: return L / (T * T);
    case Dimension::energy_per_mass: return L * L / (T * T);
    case Dimension::number_density: return 1.0 / (L * L * L);
  }
  throw InvalidInput("unknown dimension");
}

double to_dimensionless(double si_value, Dimension d, UnitSystem system) {
  return si_value / unit_scale(d, system);
}

double from_dimensionless(double value, Dimension d, UnitSystem system) {
  return value * unit_scale(d, system);
}

double scale_units(double si_value, Dimension d, UnitSystem from, UnitSystem to) {
  return from_dimensionless(to_dimensionless(si_value, d, from), d, to);
}

double coupling_constant(UnitSystem system) {
  const auto [M, L, T] = base(system);
  if (system == UnitSystem::plasma) {
    const double m = electron_mass;
    return std::abs(g_prime(Species::electron())) * m * m * T * T / (M * L * L * L);
  }
  return gravitational * solar_mass * solar_mass * T * T / (M * L * L * L);
}

}  // namespace ucp
