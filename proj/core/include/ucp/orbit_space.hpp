#pragma once

// Mean-field potential assembly and the isotropic phase-space geometry built on it.
// Energies are per unit electron mass (J/kg) and the potential vanishes at infinity.

#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

#include "ucp/ion_cloud.hpp"
#include "ucp/numerics.hpp"

namespace ucp {

class PotentialProfile {
 public:
  PotentialProfile() = default;
  // r strictly increasing from 0; dphi_dr is the exact gradient (used as Hermite slopes).
  // E_t defaults to Phi(r_t); a larger value models a hard wall at r_t.
  PotentialProfile(std::vector<double> r, std::vector<double> phi, std::vector<double> dphi_dr,
                   double E_t = std::numeric_limits<double>::quiet_NaN());

  [[nodiscard]] double operator()(double r) const;
  [[nodiscard]] double gradient(double r) const;
  // Outer turning point: largest r <= r_t with Phi(r) <= E.
  [[nodiscard]] double turning_radius(double E) const;

  [[nodiscard]] double E0() const { return phi_.y().front(); }
  [[nodiscard]] double E_t() const { return E_t_; }
  [[nodiscard]] double depth() const { return E_t_ - E0(); }
  [[nodiscard]] double r_t() const { return phi_.x().back(); }
  [[nodiscard]] const std::vector<double>& r() const { return phi_.x(); }
  [[nodiscard]] const std::vector<double>& phi() const { return phi_.y(); }
  [[nodiscard]] const std::vector<double>& dphi_dr() const { return phi_.slopes(); }

 private:
  num::CubicHermite phi_;
  double E_t_ = 0.0;
};

// Throws InvalidInput unless E_t > E0; a flat profile is a valid potential but not a well.
void require_well(const PotentialProfile& profile);

// Phi from ions (closed form) plus tabulated electrons, n_e = 0 beyond the table.
PotentialProfile total_potential(const GaussianCloud& cloud, const std::vector<double>& r,
                                 const std::vector<double>& n_e);

// Potential of an arbitrary pair of tabulated densities (m^-3) on a common grid.
PotentialProfile total_potential(const std::vector<double>& r, const std::vector<double>& n_i,
                                 const std::vector<double>& n_e, const Species& electron = Species::electron());

struct PhasePoint {
  double q = 0.0;
  double dq_dE = 0.0;
};

// q = (1/3) int (2(E - Phi))^{3/2} r^2 dr and its E-derivative.
PhasePoint phase_volume(const PotentialProfile& profile, double E);

// int_0^{r(E)} w(r) sqrt(2(E - Phi)) r^2 dr; w = 1 gives dq/dE.
double weighted_speed_integral(const PotentialProfile& profile, double E,
                               const std::function<double(double)>& weight);

struct PhaseGeometry {
  std::vector<double> E;
  std::vector<double> q;
  std::vector<double> dq_dE;
  std::vector<double> tau;  // 16 pi^2 q

  [[nodiscard]] std::size_t size() const { return E.size(); }
  [[nodiscard]] double E0() const { return E.front(); }
  [[nodiscard]] double E_t() const { return E.back(); }
};

PhaseGeometry build_geometry(const PotentialProfile& profile, std::size_t nodes = 300);
PhaseGeometry build_geometry(const PotentialProfile& profile, const std::vector<double>& energies);

// (E_t - E)(E - E0)^3, unnormalized.
double q_gauss_shape(double E, double E0, double E_t);

// The quartic shape scaled to match the quadrature q at the mid energy.
class QGaussApprox {
 public:
  explicit QGaussApprox(const PotentialProfile& profile);
  [[nodiscard]] double operator()(double E) const;
  [[nodiscard]] double calibration() const { return c_; }
  [[nodiscard]] double peak_energy() const { return E0_ + 0.75 * (Et_ - E0_); }

 private:
  double E0_ = 0.0, Et_ = 0.0, c_ = 0.0;
};

struct DistributionTable {
  std::vector<double> E;
  std::vector<double> f;  // m^-3 (m/s)^-3
};

// Ergodic distribution whose density on `profile` is n(r); n must decrease with Phi.
DistributionTable eddington_invert(const PotentialProfile& profile, const std::vector<double>& r,
                                   const std::vector<double>& n, std::size_t energies = 300);

// n(r) = 4 pi int_Phi^{E_t} f(E) sqrt(2(E - Phi)) dE for a tabulated f.
double density_from_f(const std::function<double(double)>& f, double phi, double E_t);

}  // namespace ucp
