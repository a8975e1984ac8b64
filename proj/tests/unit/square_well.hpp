#pragma once

// Square-well reference for the orbit-averaged solver: the same electrons evolved by an
// independent speed-space discretization of the Landau operator.

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "ucp/constants.hpp"
#include "ucp/fokker_planck.hpp"

namespace ucp::test {

// Isotropic Landau operator for a single species in speed space,
//   df/dt = (4 pi Gamma / v^2) d/dv [ v^2 ( a df/dv + b f ) ],
//   a = (I4 / v^3 + J1) / 3,  b = I2 / v^2,
// with I_k = int_0^v f u^k du and J1 = int_v^vt f u du.  Finite volumes on a uniform
// speed grid, Heun time stepping.  In a square well of volume V this is the whole
// kinetic equation, so it is an independent check on the orbit-averaged solver.
class SpeedSpaceSolver {
 public:
  SpeedSpaceSolver(double v_t, std::size_t cells, double gamma, bool absorbing)
      : vt_(v_t), dv_(v_t / cells), gamma_(gamma), absorbing_(absorbing), v_(cells), w_(cells), f_(cells) {
    for (std::size_t j = 0; j < cells; ++j) {
      v_[j] = (j + 0.5) * dv_;
      const double lo = j * dv_, hi = (j + 1) * dv_;
      w_[j] = (hi * hi * hi - lo * lo * lo) / 3.0;
    }
  }

  template <class F>
  void set(F&& f) {
    for (std::size_t j = 0; j < v_.size(); ++j) f_[j] = f(v_[j]);
  }

  void advance(double t_end) {
    double t = 0.0;
    while (t < t_end) {
      double dt = stable_step();
      if (t + dt > t_end) dt = t_end - t;
      const auto k1 = rate(f_);
      std::vector<double> g(f_.size());
      for (std::size_t j = 0; j < g.size(); ++j) g[j] = f_[j] + dt * k1[j];
      const auto k2 = rate(g);
      for (std::size_t j = 0; j < g.size(); ++j) f_[j] += 0.5 * dt * (k1[j] + k2[j]);
      t += dt;
    }
  }

  // int f (v^2/2)^k 4 pi v^2 dv
  [[nodiscard]] double moment(int k) const {
    double s = 0.0;
    for (std::size_t j = 0; j < v_.size(); ++j) s += 4.0 * constants::pi * w_[j] * f_[j] * std::pow(0.5 * v_[j] * v_[j], k);
    return s;
  }

 private:
  // face fluxes G_{j+1/2} = v^2 (a f' + b f), j = 0..n-1 (face n-1 is the outer wall)
  std::vector<double> face_flux(const std::vector<double>& f) const {
    const std::size_t n = f.size();
    std::vector<double> I2(n + 1, 0.0), I4(n + 1, 0.0), J1(n + 1, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      I2[j + 1] = I2[j] + f[j] * w_[j];
      I4[j + 1] = I4[j] + f[j] * v_[j] * v_[j] * w_[j];
    }
    for (std::size_t j = n; j-- > 0;) J1[j] = J1[j + 1] + f[j] * v_[j] * dv_;
    std::vector<double> G(n, 0.0);
    for (std::size_t j = 0; j + 1 < n; ++j) {
      const double v = (j + 1) * dv_;
      const double a = (I4[j + 1] / (v * v * v) + J1[j + 1]) / 3.0;
      const double b = I2[j + 1] / (v * v);
      G[j] = v * v * (a * (f[j + 1] - f[j]) / dv_ + b * 0.5 * (f[j] + f[j + 1]));
    }
    if (absorbing_) {
      // f = 0 on the wall, half a cell beyond the last centre
      const double a = I4[n] / (3.0 * vt_ * vt_ * vt_);
      G[n - 1] = vt_ * vt_ * a * (0.0 - f[n - 1]) / (0.5 * dv_);
    }
    return G;
  }

  std::vector<double> rate(const std::vector<double>& f) const {
    const auto G = face_flux(f);
    std::vector<double> r(f.size());
    for (std::size_t j = 0; j < f.size(); ++j) {
      const double inner = j == 0 ? 0.0 : G[j - 1];
      r[j] = 4.0 * constants::pi * gamma_ * (G[j] - inner) / w_[j];
    }
    return r;
  }

  [[nodiscard]] double stable_step() const {
    double J1 = 0.0;
    for (std::size_t j = 0; j < f_.size(); ++j) J1 += f_[j] * v_[j] * dv_;
    double I4 = 0.0;
    for (std::size_t j = 0; j < f_.size(); ++j) I4 += f_[j] * v_[j] * v_[j] * w_[j];
    // a is bounded by J1(0)/3 + I4 / (3 v^3) near the wall; keep well inside explicit stability
    const double a_max = J1 / 3.0 + I4 / (3.0 * vt_ * vt_ * vt_);
    return 0.1 * dv_ * dv_ / (4.0 * constants::pi * gamma_ * a_max);
  }

  double vt_, dv_, gamma_;
  bool absorbing_;
  std::vector<double> v_, w_, f_;
};

struct SquareWellMoments {
  std::array<double, 3> orbit_averaged{};
  std::array<double, 3> speed_grid{};
  double shape_change = 0.0;  // relative change of <E^2>/<1> over the run

  [[nodiscard]] double worst() const {
    double w = 0.0;
    for (int k = 0; k < 3; ++k) w = std::max(w, std::abs(orbit_averaged[k] / speed_grid[k] - 1.0));
    return w;
  }
};

// A bimodal f in a 1 mm square well with a wall at 4 sigma_v1 (100 K), relaxed for 20 ns.
inline SquareWellMoments square_well_run(bool absorbing) {
  using namespace ucp::constants;
  const double R = 1e-3, V = 4.0 * pi / 3.0 * R * R * R;
  const double s1 = std::sqrt(boltzmann * 100.0 / electron_mass);
  const double vt = 4.0 * s1, Et = 0.5 * vt * vt;
  const double a = 0.6 * s1, v1 = 2.0 * s1, b = 0.3 * s1;
  const double f0 = 1e15 / std::pow(2.0 * pi * a * a, 1.5);
  auto shape = [&](double v) {
    auto raw = [&](double u) { return std::exp(-u * u / (2.0 * a * a)) + 0.3 * std::exp(-(u - v1) * (u - v1) / (2.0 * b * b)); };
    return f0 * std::max(0.0, raw(v) - raw(vt));
  };
  const double gamma = gamma_coefficient(Species::electron(), 6.0);
  const double t_end = 2e-8;

  SpeedSpaceSolver oracle(vt, 400, gamma, absorbing);
  oracle.set(shape);

  EnergyDistribution d;
  d.mesh = FpMesh::from_functions(
      0.0, Et, 400, [&](double E) { return V * 4.0 * pi / 3.0 * std::pow(2.0 * E, 1.5); },
      [&](double E) { return V * 4.0 * pi * std::sqrt(2.0 * E); });
  for (double E : d.mesh.E) d.f.push_back(shape(std::sqrt(2.0 * E)));
  auto moment = [&](int k) {
    double s = 0.0;
    for (std::size_t i = 0; i < d.f.size(); ++i) s += d.f[i] * d.mesh.volume[i] * std::pow(d.mesh.E[i], k);
    return s;
  };
  const double e2_start = moment(2) / moment(0);

  StepOptions opt;
  opt.absorbing = absorbing;
  const int steps = 1000;
  for (int k = 0; k < steps; ++k) d = collision_step(d, t_end / steps, gamma, opt);
  oracle.advance(t_end);

  SquareWellMoments out;
  for (int k = 0; k <= 2; ++k) {
    out.orbit_averaged[k] = moment(k);
    out.speed_grid[k] = V * oracle.moment(k);
  }
  out.shape_change = std::abs(moment(2) / moment(0) / e2_start - 1.0);
  return out;
}

}  // namespace ucp::test
