#include "ucp/orbit_space.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "ucp/error.hpp"

namespace ucp {

using namespace constants;

PotentialProfile::PotentialProfile(std::vector<double> r, std::vector<double> phi,
                                   std::vector<double> dphi_dr, double E_t) {
  if (r.size() < 3 || phi.size() != r.size() || dphi_dr.size() != r.size())
    throw InvalidInput("potential table needs at least three matching nodes");
  if (r.front() != 0.0) throw InvalidInput("potential table must start at r = 0");
  for (std::size_t k = 1; k < r.size(); ++k) {
    if (!(r[k] > r[k - 1])) throw InvalidInput("potential radii must increase strictly");
    if (phi[k] < phi[k - 1]) throw InvalidInput("potential is not confining (Phi decreases outward)");
  }
  const double edge = phi.back();
  phi_ = num::CubicHermite(std::move(r), std::move(phi), std::move(dphi_dr));
  E_t_ = std::isnan(E_t) ? edge : E_t;
  if (E_t_ < edge) throw InvalidInput("truncation energy below the edge potential");
  if (E_t_ < E0()) throw InvalidInput("truncation energy below the central potential");
}

double PotentialProfile::operator()(double r) const {
  if (r >= r_t()) return phi_.y().back();
  return phi_(r);
}

double PotentialProfile::gradient(double r) const {
  if (r >= r_t()) return phi_.slopes().back();
  return phi_.derivative(r);
}

double PotentialProfile::turning_radius(double E) const {
  if (E <= E0()) return 0.0;
  if (E >= phi_.y().back()) return r_t();
  return phi_.inverse(E);
}

namespace {

// Phi = -4 pi G' [ (1/r) int_0^r rho r'^2 + int_r^R rho r' ] for a tabulated mass density,
// interpolated as an even function of r
void add_tabulated(const std::vector<double>& r, const std::vector<double>& rho, double g,
                   std::vector<double>& phi, std::vector<double>& dphi) {
  const std::size_t n = r.size();
  const auto slopes = num::fd_slopes(r, rho, true);
  const auto inner = num::cumulative_moment(r, rho, slopes, 2);
  const auto outer = num::cumulative_moment(r, rho, slopes, 1);
  for (std::size_t k = 0; k < n; ++k) {
    const double tail = outer.back() - outer[k];
    const double mass_term = k == 0 ? 0.0 : inner[k] / r[k];
    phi[k] += -4.0 * pi * g * (mass_term + tail);
    dphi[k] += k == 0 ? 0.0 : 4.0 * pi * g * inner[k] / (r[k] * r[k]);
  }
}

}  // namespace

PotentialProfile total_potential(const GaussianCloud& cloud, const std::vector<double>& r,
                                 const std::vector<double>& n_e) {
  if (r.size() != n_e.size()) throw InvalidInput("density table size mismatch");
  const double g = g_prime(cloud.electron);
  std::vector<double> phi(r.size()), dphi(r.size()), rho(r.size());
  for (std::size_t k = 0; k < r.size(); ++k) {
    phi[k] = ionic_potential(cloud, r[k]);
    dphi[k] = ionic_potential_gradient(cloud, r[k]);
    rho[k] = cloud.electron.mass * n_e[k];
  }
  add_tabulated(r, rho, g, phi, dphi);
  return PotentialProfile(r, std::move(phi), std::move(dphi));
}

PotentialProfile total_potential(const std::vector<double>& r, const std::vector<double>& n_i,
                                 const std::vector<double>& n_e, const Species& electron) {
  if (r.size() != n_e.size() || r.size() != n_i.size()) throw InvalidInput("density table size mismatch");
  std::vector<double> phi(r.size(), 0.0), dphi(r.size(), 0.0), rho(r.size());
  for (std::size_t k = 0; k < r.size(); ++k) rho[k] = electron.mass * (n_e[k] - n_i[k]);
  add_tabulated(r, rho, g_prime(electron), phi, dphi);
  return PotentialProfile(r, std::move(phi), std::move(dphi));
}

namespace {

// 8-point Gauss-Legendre abscissae and weights on [-1, 1], positive half
constexpr std::array<double, 4> gl_x{0.1834346424956498, 0.5255324099163290, 0.7966664774136267,
                                     0.9602898564975363};
constexpr std::array<double, 4> gl_w{0.3626837833783620, 0.3137066458778873, 0.2223810344533745,
                                     0.1012285362903763};

}  // namespace

namespace {

// Calls add(r, weight) on quadrature nodes covering [0, r_max(E)].  Panels follow the
// table nodes, where Phi is a single cubic; the panel holding the turning point uses
// r = r_max - L w^2, w in [0, 1], which keeps sqrt(E - Phi) integrands smooth.
template <class Add>
void radial_quadrature(const PotentialProfile& profile, double r_max, Add&& add) {
  const auto& nodes = profile.r();
  std::size_t j = 0;
  for (; j + 1 < nodes.size() && nodes[j + 1] < r_max; ++j) {
    const double c = 0.5 * (nodes[j] + nodes[j + 1]), h = 0.5 * (nodes[j + 1] - nodes[j]);
    for (std::size_t i = 0; i < 4; ++i) {
      add(c - h * gl_x[i], h * gl_w[i]);
      add(c + h * gl_x[i], h * gl_w[i]);
    }
  }
  const double L = r_max - nodes[j];
  if (L > 0.0) {
    for (std::size_t i = 0; i < 4; ++i) {
      for (double w : {0.5 - 0.5 * gl_x[i], 0.5 + 0.5 * gl_x[i]}) add(r_max - L * w * w, 0.5 * gl_w[i] * 2.0 * L * w);
    }
  }
}

double clamp_energy(const PotentialProfile& profile, double E) {
  const double slack = 1e-13 * (profile.E_t() - profile.E0());
  if (E < profile.E0() - slack || E > profile.E_t() + slack)
    throw InvalidInput("energy outside [E0, E_t]");
  return std::clamp(E, profile.E0(), profile.E_t());
}

}  // namespace

PhasePoint phase_volume(const PotentialProfile& profile, double E) {
  E = clamp_energy(profile, E);
  const double r_max = profile.turning_radius(E);
  if (r_max <= 0.0) return {};

  PhasePoint out;
  radial_quadrature(profile, r_max, [&](double r, double weight) {
    const double v2 = std::max(2.0 * (E - profile(r)), 0.0);
    const double v = std::sqrt(v2);
    out.q += weight * v2 * v * r * r;
    out.dq_dE += weight * v * r * r;
  });
  out.q /= 3.0;
  return out;
}

double weighted_speed_integral(const PotentialProfile& profile, double E,
                               const std::function<double(double)>& weight) {
  E = clamp_energy(profile, E);
  const double r_max = profile.turning_radius(E);
  if (r_max <= 0.0) return 0.0;
  double sum = 0.0;
  radial_quadrature(profile, r_max, [&](double r, double w) {
    sum += w * weight(r) * std::sqrt(std::max(2.0 * (E - profile(r)), 0.0)) * r * r;
  });
  return sum;
}

void require_well(const PotentialProfile& profile) {
  if (!(profile.depth() > 0.0)) throw InvalidInput("potential well has no depth (E_t <= E0)");
}

PhaseGeometry build_geometry(const PotentialProfile& profile, std::size_t nodes) {
  require_well(profile);
  if (nodes < 3) throw InvalidInput("energy grid needs at least three nodes");
  return build_geometry(profile, num::linspace(profile.E0(), profile.E_t(), nodes));
}

PhaseGeometry build_geometry(const PotentialProfile& profile, const std::vector<double>& energies) {
  PhaseGeometry g;
  g.E = energies;
  g.q.resize(energies.size());
  g.dq_dE.resize(energies.size());
  g.tau.resize(energies.size());
  for (std::size_t k = 0; k < energies.size(); ++k) {
    const auto p = phase_volume(profile, std::min(energies[k], profile.E_t()));
    g.q[k] = p.q;
    g.dq_dE[k] = p.dq_dE;
    g.tau[k] = 16.0 * pi * pi * p.q;
  }
  return g;
}

double q_gauss_shape(double E, double E0, double E_t) {
  if (E <= E0 || E >= E_t) return 0.0;
  const double d = E - E0;
  return (E_t - E) * d * d * d;
}

QGaussApprox::QGaussApprox(const PotentialProfile& profile)
    : E0_(profile.E0()), Et_(profile.E_t()) {
  require_well(profile);
  const double mid = 0.5 * (E0_ + Et_);
  c_ = phase_volume(profile, mid).q / q_gauss_shape(mid, E0_, Et_);
}

double QGaussApprox::operator()(double E) const { return c_ * q_gauss_shape(E, E0_, Et_); }

double density_from_f(const std::function<double(double)>& f, double phi, double E_t) {
  if (phi >= E_t) return 0.0;
  // E = Phi + s^2
  const double s_max = std::sqrt(E_t - phi);
  const double integral =
      num::integrate([&](double s) { return f(phi + s * s) * 2.0 * s * s; }, 0.0, s_max, 1e-11);
  return 4.0 * pi * std::sqrt(2.0) * integral;
}

DistributionTable eddington_invert(const PotentialProfile& profile, const std::vector<double>& r,
                                   const std::vector<double>& n, std::size_t energies) {
  if (r.size() != n.size() || r.size() < 4) throw InvalidInput("density table size mismatch");
  if (energies < 3) throw InvalidInput("energy grid needs at least three nodes");
  require_well(profile);
  const double scale = *std::max_element(n.begin(), n.end());
  DistributionTable out;
  out.E = num::linspace(profile.E0(), profile.E_t(), energies);
  out.f.assign(energies, 0.0);
  if (scale <= 0.0) return out;

  for (std::size_t k = 1; k < r.size(); ++k)
    if (n[k] > n[k - 1] + 1e-12 * scale)
      throw InvalidInput("density must not increase outward for the Eddington inversion");

  // n(Phi) with finite-difference slopes taken in Phi; n is smooth in Phi even at the
  // centre, where it is not smooth in r. Nodes where Phi is flat carry no information.
  std::vector<double> p, v;
  for (std::size_t k = 0; k < r.size(); ++k) {
    const double phi = profile(r[k]);
    if (!p.empty() && !(phi > p.back())) continue;
    p.push_back(phi);
    v.push_back(n[k]);
  }
  if (p.back() < profile.E_t()) {
    p.push_back(profile.E_t());
    v.push_back(0.0);
  }
  if (p.size() < 3) throw InvalidInput("potential is too flat for the Eddington inversion");
  auto d = num::fd_slopes(p, v);
  for (auto& x : d) x = std::min(x, 0.0);
  const num::CubicHermite rho(p, v, d);

  const double Et = profile.E_t();
  // I(E) = int_E^{E_t} (-dn/dPhi) dPhi / sqrt(Phi - E), with Phi = E + s^2
  auto I = [&](double E) {
    if (E >= Et) return 0.0;
    return num::integrate([&](double s) { return -2.0 * rho.derivative(std::min(E + s * s, Et)); }, 0.0,
                          std::sqrt(Et - E), 1e-12);
  };
  const double span = Et - profile.E0();
  const double h = 2e-3 * span;
  const double norm = 1.0 / (std::sqrt(8.0) * pi * pi);
  for (std::size_t k = 0; k < energies; ++k) {
    const double E = out.E[k];
    // fifth-order stencils, one-sided near the ends of the energy range
    double dI;
    if (E - 2.0 * h < profile.E0())
      dI = (-25.0 * I(E) + 48.0 * I(E + h) - 36.0 * I(E + 2.0 * h) + 16.0 * I(E + 3.0 * h) - 3.0 * I(E + 4.0 * h)) / (12.0 * h);
    else if (E + 2.0 * h > Et)
      dI = (25.0 * I(E) - 48.0 * I(E - h) + 36.0 * I(E - 2.0 * h) - 16.0 * I(E - 3.0 * h) + 3.0 * I(E - 4.0 * h)) / (12.0 * h);
    else
      dI = (I(E - 2.0 * h) - 8.0 * I(E - h) + 8.0 * I(E + h) - I(E + 2.0 * h)) / (12.0 * h);
    out.f[k] = std::max(-norm * dI, 0.0);
  }
  return out;
}

}  // namespace ucp
