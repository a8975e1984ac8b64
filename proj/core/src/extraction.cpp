#include "ucp/extraction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <boost/math/tools/minima.hpp>

#include "ucp/error.hpp"
#include "ucp/numerics.hpp"

namespace ucp {

using namespace constants;

namespace {

constexpr double threshold_coefficient = 2.38;

double coulomb_factor(double charge) { return charge / (4.0 * pi * epsilon0); }

}  // namespace

double truncation_radius(const PlasmaSpec& spec, double field, TruncationForm form) {
  if (field < 0.0) throw InvalidInput("field must be nonnegative");
  const double dn = spec.charge_excess();
  if (!(dn > 0.0)) throw InvalidInput("truncation radius needs N_i > N_e");
  if (field == 0.0) return std::numeric_limits<double>::infinity();
  const double q = std::abs(spec.electron.charge);
  const double far = std::sqrt(coulomb_factor(q) * dn / field);
  if (form == TruncationForm::far_field) return far;

  // The enclosed fraction only lowers the net field, so the saddle lies outside r_far.
  const double s = spec.sigma;
  auto excess_field = [&](double r) { return coulomb_factor(q) * dn * gaussian_enclosed_fraction(r / s) / (r * r) - field; };
  double hi = far * 1.5 + 10.0 * s;
  if (excess_field(far) <= 0.0) {
    // Field never reaches F outside the peak of the net-charge field: no saddle.
    const double peak = boost::math::tools::brent_find_minima(
                            [&](double r) { return -excess_field(r); }, 1e-3 * s, 10.0 * s, 40)
                            .first;
    if (excess_field(peak) < 0.0) return 0.0;
    return num::find_root(excess_field, peak, hi);
  }
  return num::find_root(excess_field, far, hi);
}

double equivalent_field(double charge_excess, double r_t, double charge) {
  if (!(r_t > 0.0)) throw InvalidInput("radius must be positive");
  return coulomb_factor(charge) * charge_excess / (r_t * r_t);
}

double threshold_field(double n_i0, double sigma, double charge) {
  if (n_i0 < 0.0 || !(sigma > 0.0)) throw InvalidInput("threshold field needs n_i0 >= 0 and sigma > 0");
  return threshold_coefficient * coulomb_factor(charge) * n_i0 * std::sqrt(2.0) * sigma;
}

double density_from_threshold(double field, double sigma, double charge) {
  if (field < 0.0 || !(sigma > 0.0)) throw InvalidInput("inverse threshold needs field >= 0 and sigma > 0");
  return field / (threshold_coefficient * coulomb_factor(charge) * std::sqrt(2.0) * sigma);
}

double threshold_coefficient_numeric() {
  // Field of a unit-density Gaussian at u sigma, in units of q sigma / (4 pi eps0):
  // (2 pi)^{3/2} frac(u) / u^2, divided by sqrt 2 to match the threshold form.
  auto neg = [](double u) { return -std::pow(2.0 * pi, 1.5) * gaussian_enclosed_fraction(u) / (u * u) / std::sqrt(2.0); };
  const auto best = boost::math::tools::brent_find_minima(neg, 0.1, 5.0, 50);
  return -best.second;
}

SigmaEstimate sigma_from_threshold(double N_i, double V_th, double N_i_ref, double V_th_ref, double sigma_ref) {
  if (!(N_i_ref > 0.0) || !(V_th_ref > 0.0) || !(sigma_ref > 0.0))
    throw InvalidInput("reference scan values must be positive");
  if (!(N_i > 0.0) || !(V_th > 0.0)) throw InvalidInput("N_i and V_th must be positive");
  SigmaEstimate e;
  e.sigma_squared = sigma_ref * sigma_ref * (N_i / N_i_ref) * (V_th_ref / V_th);
  e.sigma = std::sqrt(e.sigma_squared);
  return e;
}

ExpansionFit fit_expansion(std::span<const double> x, std::span<const double> sigma) {
  if (x.size() != sigma.size() || x.size() < 2) throw InvalidInput("expansion fit needs matching samples");
  std::vector<double> s2(sigma.size());
  for (std::size_t k = 0; k < sigma.size(); ++k) s2[k] = sigma[k] * sigma[k];
  const auto line = num::fit_line(x, s2);
  if (!(line.intercept > 0.0)) throw ConvergenceError("expansion fit gives a nonpositive sigma0^2");
  ExpansionFit fit;
  fit.sigma0 = std::sqrt(line.intercept);
  fit.slope = line.slope;
  double ss = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double d = s2[k] - (line.intercept + line.slope * x[k]);
    ss += d * d;
  }
  fit.residual = std::sqrt(ss / static_cast<double>(x.size()));
  return fit;
}

void ExtractionScan::validate() const {
  if (voltages.size() != ejected_counts.size() || voltages.size() < 3)
    throw InvalidInput("scan needs at least three (voltage, count) pairs");
  if (!(gap > 0.0)) throw InvalidInput("electrode gap must be positive");
  for (std::size_t k = 1; k < voltages.size(); ++k) {
    if (!(voltages[k] > voltages[k - 1])) throw InvalidInput("scan voltages must increase strictly");
    if (ejected_counts[k] < ejected_counts[k - 1]) throw InvalidInput("scan counts must be nondecreasing");
  }
}

ExtractionScan synthetic_scan(const KingEquilibrium& eq, std::span<const double> voltages, double gap,
                              double expansion_time) {
  if (!(gap > 0.0)) throw InvalidInput("electrode gap must be positive");
  const auto& r = eq.r;
  const auto& Ne_r = eq.N_e_enclosed;
  const double Ne = Ne_r.back();
  const double q = std::abs(eq.cloud.electron.charge);
  // Radii out to several truncation radii so the bare-ion maximum is always resolved.
  std::vector<double> radii = num::linspace(r[1], std::max(r.back(), 6.0 * eq.cloud.sigma()), 4000);

  auto electrons_inside = [&](double x) {
    if (x >= r.back()) return Ne;
    const auto it = std::upper_bound(r.begin(), r.end(), x);
    const std::size_t k = static_cast<std::size_t>(it - r.begin()) - 1;
    const double w = (x - r[k]) / (r[k + 1] - r[k]);
    return Ne_r[k] + w * (Ne_r[k + 1] - Ne_r[k]);
  };
  // Largest outward field of ions minus the innermost `kept` electrons.
  auto peak_field = [&](double kept) {
    double best = 0.0;
    for (double x : radii) {
      const double net = enclosed_ions(eq.cloud, x) - std::min(electrons_inside(x), kept);
      best = std::max(best, coulomb_factor(q) * net / (x * x));
    }
    return best;
  };

  ExtractionScan scan;
  scan.gap = gap;
  scan.expansion_time = expansion_time;
  scan.voltages.assign(voltages.begin(), voltages.end());
  scan.ejected_counts.resize(voltages.size());
  const double bare = peak_field(0.0);
  const double full = peak_field(Ne);
  for (std::size_t k = 0; k < voltages.size(); ++k) {
    const double F = voltages[k] / gap;
    double kept;
    if (F <= full) kept = Ne;
    else if (F >= bare) kept = 0.0;
    else kept = num::find_root([&](double n) { return peak_field(n) - F; }, 0.0, Ne, 1e-10);
    scan.ejected_counts[k] = Ne - kept;
  }
  for (std::size_t k = 1; k < voltages.size(); ++k)
    scan.ejected_counts[k] = std::max(scan.ejected_counts[k], scan.ejected_counts[k - 1]);
  return scan;
}

ThresholdDetection detect_threshold(const ExtractionScan& scan, double level) {
  scan.validate();
  const std::size_t n = scan.voltages.size();
  const std::size_t tail = std::max<std::size_t>(1, n / 10);
  double plateau = 0.0;
  for (std::size_t k = n - tail; k < n; ++k) plateau += scan.ejected_counts[k];
  plateau /= static_cast<double>(tail);
  if (!(plateau > 0.0)) throw ConvergenceError("scan has no ejected electrons");
  // Saturated means the whole tail window already sits at the plateau level.
  if (scan.ejected_counts[n - tail] < level * plateau)
    throw ConvergenceError("scan does not saturate", "plateau " + std::to_string(plateau));
  for (std::size_t k = 0; k < n; ++k) {
    if (scan.ejected_counts[k] >= level * plateau) return {scan.voltages[k], plateau};
  }
  return {scan.voltages.back(), plateau};
}

InferenceResult infer_temperature(const ExtractionScan& scan, const InferenceInputs& in) {
  if (!(in.eta > 2.0)) throw InvalidInput("inference needs eta > 2");
  if (!(in.sigma > 0.0)) throw InvalidInput("inference needs sigma > 0");
  const auto th = detect_threshold(scan);
  InferenceResult out;
  out.V_th = th.voltage;
  out.sigma = in.sigma;
  out.eta_assumed = in.eta;
  out.r_t = in.r_t;
  out.n_i0 = density_from_threshold(th.voltage / scan.gap, in.sigma);
  out.N_i = out.n_i0 * std::pow(2.0 * pi, 1.5) * std::pow(in.sigma, 3);
  if (in.charge_excess > 0.0) {
    out.charge_excess = in.charge_excess;
  } else {
    if (!(in.T_e_gamma > 0.0)) throw InvalidInput("inference needs either a charge excess or T_e_gamma");
    out.charge_excess = population_laws(out.N_i, in.sigma, in.T_e_gamma).charge_excess;
  }
  out.T_K = temp_from_counts(out.N_i, out.N_i - out.charge_excess, in.sigma, in.eta);
  return out;
}

PopulationLaws population_laws(double N_i, double sigma, double T_e_gamma) {
  if (!(N_i > 0.0) || !(sigma > 0.0) || !(T_e_gamma > 0.0))
    throw InvalidInput("population laws need positive N_i, sigma, T_e_gamma");
  PlasmaSpec spec;
  spec.N_i = N_i;
  spec.N_e = 0.0;
  spec.sigma = sigma;
  spec.T_e_gamma = T_e_gamma;
  PopulationLaws out;
  out.N_star = n_star(spec);
  if (N_i < out.N_star) {
    out.charge_excess = N_i;
    out.clamped = true;
  } else {
    out.charge_excess = out.N_star * std::sqrt(N_i / out.N_star);
  }
  out.T_e_gamma_check = 8.9 / (sigma * 1e6) * out.charge_excess * out.charge_excess / N_i;
  return out;
}

}  // namespace ucp
