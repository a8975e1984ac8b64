#include "ucp/ion_cloud.hpp"

#include <cmath>
#include <limits>

#include "ucp/error.hpp"
#include "ucp/numerics.hpp"

namespace ucp {

using namespace constants;

namespace {
constexpr double sqrt2 = 1.4142135623730951;
const double sqrt_2_over_pi = std::sqrt(2.0 / pi);
}  // namespace

GaussianCloud GaussianCloud::from_spec(const PlasmaSpec& spec, double t) {
  GaussianCloud c;
  c.N_i = spec.N_i;
  c.N_e = spec.N_e;
  c.sigma0 = spec.sigma;
  c.v0 = std::sqrt(boltzmann * spec.T_e_gamma / spec.ion.mass);
  c.t = t;
  c.electron = spec.electron;
  c.ion = spec.ion;
  return c;
}

void GaussianCloud::validate() const {
  if (!(sigma0 > 0.0)) throw InvalidInput("cloud sigma0 must be positive");
  if (!(N_e >= 0.0) || !(N_i >= N_e)) throw InvalidInput("cloud needs N_i >= N_e >= 0");
  if (!(v0 >= 0.0) || !(t >= 0.0)) throw InvalidInput("cloud needs v0 >= 0 and t >= 0");
}

double GaussianCloud::sigma_at(double time) const noexcept {
  return std::sqrt(sigma0 * sigma0 + v0 * v0 * time * time);
}

double GaussianCloud::sigma_rate_at(double time) const noexcept {
  return v0 * v0 * time / sigma_at(time);
}

double GaussianCloud::peak_density() const noexcept {
  const double s = sigma();
  return N_i / std::pow(2.0 * pi * s * s, 1.5);
}

GaussianCloud GaussianCloud::at_time(double time) const {
  GaussianCloud c = *this;
  c.t = time;
  return c;
}

double ion_density(const GaussianCloud& cloud, double r) {
  const double s = cloud.sigma();
  return cloud.peak_density() * std::exp(-r * r / (2.0 * s * s));
}

double gaussian_enclosed_fraction(double u) {
  if (u < 0.0) throw InvalidInput("radius must be nonnegative");
  if (u < 1e-3) {
    // leading series term avoids cancellation: sqrt(2/pi) u^3/3 (1 - 3u^2/10)
    return sqrt_2_over_pi * u * u * u / 3.0 * (1.0 - 0.3 * u * u);
  }
  return std::erf(u / sqrt2) - sqrt_2_over_pi * u * std::exp(-0.5 * u * u);
}

double enclosed_ions(const GaussianCloud& cloud, double r) {
  if (r < 0.0) throw InvalidInput("radius must be nonnegative");
  return cloud.N_i * gaussian_enclosed_fraction(r / cloud.sigma());
}

double ionic_potential(const GaussianCloud& cloud, double r) {
  if (r < 0.0) throw InvalidInput("radius must be nonnegative");
  const double g = g_prime(cloud.electron);
  const double s = cloud.sigma();
  const double pref = g * cloud.electron.mass * cloud.N_i;
  if (r < 1e-6 * s) {
    const double x2 = r * r / (2.0 * s * s);
    return pref * sqrt_2_over_pi / s * (1.0 - x2 / 3.0);
  }
  return pref * std::erf(r / (sqrt2 * s)) / r;
}

double ionic_potential_gradient(const GaussianCloud& cloud, double r) {
  if (r <= 0.0) return 0.0;
  const double g = g_prime(cloud.electron);
  return -g * cloud.electron.mass * enclosed_ions(cloud, r) / (r * r);
}

double self_similar_velocity(const GaussianCloud& cloud, double r, double t) {
  const double w = cloud.v0 * cloud.v0 / (cloud.sigma0 * cloud.sigma0);
  return t * r * w / (1.0 + w * t * t);
}

CoolingResult adiabatic_cooling(const GaussianCloud& cloud, double T_e0, double t) {
  const double s = cloud.sigma_at(t);
  const double ratio = t * cloud.v0 / s;
  const double T = T_e0 - cloud.ion.mass * cloud.v0 * cloud.v0 * ratio * ratio / boltzmann;
  if (T < 0.0) return {0.0, true};
  return {T, false};
}

ShellEnsemble make_shells(const GaussianCloud& cloud, std::size_t count, double r_min_sigma,
                          double r_max_sigma) {
  cloud.validate();
  if (count < 3) throw InvalidInput("need at least three shells");
  const auto radii = num::logspace(r_min_sigma * cloud.sigma0, r_max_sigma * cloud.sigma0, count);
  GaussianCloud c0 = cloud.at_time(0.0);
  const double ratio = cloud.N_i > 0.0 ? cloud.N_e / cloud.N_i : 0.0;
  ShellEnsemble ens;
  ens.shells.reserve(count);
  for (double r : radii) {
    Shell s;
    s.r_init = s.r_now = r;
    s.Ni_enclosed = enclosed_ions(c0, r);
    s.Ne_enclosed = ratio * s.Ni_enclosed;
    s.frozen = !(s.Ni_enclosed > s.Ne_enclosed);
    ens.shells.push_back(s);
  }
  ens.initial_peak_density = c0.peak_density();
  ens.initial_density.reserve(count);
  for (const auto& s : ens.shells) ens.initial_density.push_back(ion_density(c0, s.r_init));
  ens.density = ens.initial_density;
  return ens;
}

double shell_rate(const Shell& shell, const Species& ion) {
  const double dn = shell.Ni_enclosed - shell.Ne_enclosed;
  if (!(dn > 0.0)) return 0.0;
  const double r3 = shell.r_init * shell.r_init * shell.r_init;
  return std::sqrt(2.0 * ion.charge * ion.charge * dn / (4.0 * pi * epsilon0 * ion.mass * r3));
}

namespace {
// g(s) = s sqrt(1+s^2) + asinh(s) with x = 1 + s^2; g'(s) = 2 sqrt(1+s^2).
double implicit_lhs(double s) { return s * std::sqrt(1.0 + s * s) + std::asinh(s); }

double solve_stretch(double target) {
  if (target <= 0.0) return 0.0;
  // g(s) >= 2s and g(s) >= s^2, so the root lies below min(target/2, sqrt(target))
  double lo = 0.0, hi = std::min(0.5 * target, std::sqrt(target)) + 1e-300;
  if (implicit_lhs(hi) < target) hi *= 2.0;
  for (int k = 0; k < 60; ++k) {
    const double mid = 0.5 * (lo + hi);
    (implicit_lhs(mid) < target ? lo : hi) = mid;
  }
  double s = 0.5 * (lo + hi);
  for (int k = 0; k < 8; ++k) {
    const double step = (implicit_lhs(s) - target) / (2.0 * std::sqrt(1.0 + s * s));
    const double next = s - step;
    if (next < lo || next > hi) break;
    s = next;
    if (std::abs(step) < 1e-15 * std::max(s, 1e-300)) break;
  }
  return s;
}
}  // namespace

double shell_position(const Shell& shell, const Species& ion, double t) {
  if (t < 0.0) throw InvalidInput("time must be nonnegative");
  const double A = shell_rate(shell, ion);
  if (A == 0.0) return shell.r_init;
  const double s = solve_stretch(A * t);
  return shell.r_init * (1.0 + s * s);
}

double shell_velocity(const Shell& shell, const Species& ion, double t) {
  const double A = shell_rate(shell, ion);
  if (A == 0.0) return 0.0;
  const double s = solve_stretch(A * t);
  const double x = 1.0 + s * s;
  return shell.r_init * A * std::sqrt((x - 1.0) / x);
}

ShellEnsemble evolve_shells(const ShellEnsemble& ensemble, const Species& ion, double t) {
  ShellEnsemble out = ensemble;
  out.t = t;
  out.spike_detected = false;
  out.spike_radius = 0.0;
  const std::size_t n = out.shells.size();
  for (auto& s : out.shells) s.r_now = shell_position(s, ion, t);

  const std::vector<double>& n0 = ensemble.initial_density;

  std::size_t crossing = n;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    if (out.shells[k + 1].r_now <= out.shells[k].r_now) {
      crossing = k;
      break;
    }
  }
  out.density.assign(n, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t k = 0; k < n && k <= crossing; ++k) {
    const std::size_t a = k == 0 ? 0 : k - 1, b = k + 1 == n ? k : k + 1;
    const double dri = out.shells[b].r_init - out.shells[a].r_init;
    const double dr = out.shells[b].r_now - out.shells[a].r_now;
    const double ri = out.shells[k].r_init, r = out.shells[k].r_now;
    out.density[k] = n0[k] * (dri / dr) * (ri * ri) / (r * r);
  }
  if (crossing < n) {
    out.spike_detected = true;
    out.spike_radius = out.shells[crossing].r_now;
    for (std::size_t k = crossing; k < n; ++k) out.density[k] = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  for (std::size_t k = 0; k < n; ++k) {
    if (out.density[k] > 5.0 * ensemble.initial_peak_density) {
      out.spike_detected = true;
      out.spike_radius = out.shells[k].r_now;
      break;
    }
  }
  return out;
}

double coulomb_explosion_time(const GaussianCloud& cloud) {
  const double s = cloud.sigma();
  const double dn = (cloud.N_i - cloud.N_e) / std::pow(2.0 * pi * s * s, 1.5);
  if (!(dn > 0.0)) throw InvalidInput("Coulomb explosion needs a positive charge excess");
  const double q = cloud.ion.charge;
  return std::sqrt(4.0 * pi * epsilon0 * cloud.ion.mass / (q * q * dn));
}

ConductivityResult conductivity_coefficient(double rho, double sigma_v, double ln_lambda,
                                            double cloud_sigma, double c, const Species& electron) {
  if (!(sigma_v > 0.0)) throw InvalidInput("sigma_v must be positive");
  if (rho < 0.0) throw InvalidInput("density must be nonnegative");
  const double g = std::abs(g_prime(electron));
  ConductivityResult out;
  out.coefficient = c * (4.0 / (9.0 * std::sqrt(pi))) * 3.0 * g * electron.mass * rho * ln_lambda / sigma_v;
  if (rho > 0.0) {
    const double n = rho / electron.mass;
    out.mean_free_path = 3.0 * relaxation_time(electron, sigma_v, n, ln_lambda) * sigma_v;
  } else {
    out.mean_free_path = std::numeric_limits<double>::infinity();
  }
  out.long_mean_free_path = out.mean_free_path > cloud_sigma;
  return out;
}

}  // namespace ucp
