#pragma once

// Truncation by an external field, the threshold field that empties the cloud, and
// temperature inference from electron extraction scans.

#include <span>
#include <vector>

#include "ucp/king.hpp"
#include "ucp/plasma_params.hpp"

namespace ucp {

enum class TruncationForm { far_field, gaussian };

// Saddle point of the cloud potential plus a uniform field F.  far_field treats the
// charge excess as a point charge, r_t = sqrt(q^2 dN / (4 pi eps0 q F)); gaussian
// spreads it over the cloud profile and takes the outer root.  F = 0 returns +inf.
double truncation_radius(const PlasmaSpec& spec, double field, TruncationForm form = TruncationForm::far_field);
// Uniform field whose far-field saddle sits at r_t.
double equivalent_field(double charge_excess, double r_t, double charge = constants::elementary_charge);

// F_th = 2.38 q n_i0 sqrt(2 sigma^2) / (4 pi eps0): the largest field of the bare ion cloud.
double threshold_field(double n_i0, double sigma, double charge = constants::elementary_charge);
double density_from_threshold(double field, double sigma, double charge = constants::elementary_charge);
// The 2.38 coefficient from a numerical maximization of the Gaussian cloud field.
double threshold_coefficient_numeric();

struct SigmaEstimate {
  double sigma = 0.0;          // m
  double sigma_squared = 0.0;  // m^2, compare with sigma0^2 + v0^2 t^2
};
// F_th ~ N_i / sigma^2 at fixed gap, so sigma = sigma0 sqrt((N_i / N_i0)(V_th0 / V_th)).
SigmaEstimate sigma_from_threshold(double N_i, double V_th, double N_i_ref, double V_th_ref, double sigma_ref);

struct ExpansionFit {
  double sigma0 = 0.0;  // m
  double slope = 0.0;   // d sigma^2 / d x
  double residual = 0.0;  // RMS of sigma^2 residuals, m^2
};
// Least-squares line sigma^2 = sigma0^2 + slope * x (x is t^2 or v0^2 t^2 style abscissa).
ExpansionFit fit_expansion(std::span<const double> x, std::span<const double> sigma);

struct ExtractionScan {
  std::vector<double> voltages;        // V, strictly increasing
  std::vector<double> ejected_counts;  // nondecreasing
  double gap = 0.0;                    // m, electrode separation
  double expansion_time = 0.0;         // s

  void validate() const;
};

// Scan generated from an equilibrium: at field F the outermost electrons leave until the
// largest field of the remaining net charge no longer exceeds F.
ExtractionScan synthetic_scan(const KingEquilibrium& eq, std::span<const double> voltages, double gap,
                              double expansion_time = 0.0);

struct ThresholdDetection {
  double voltage = 0.0;
  double saturation = 0.0;  // plateau count, averaged over the last 10% of the scan
};
// First voltage reaching 99% of the plateau.  Throws ConvergenceError if the scan never saturates.
ThresholdDetection detect_threshold(const ExtractionScan& scan, double level = 0.99);

struct InferenceInputs {
  double sigma = 0.0;          // m, cloud size at the scan
  double charge_excess = 0.0;  // N_i - N_e; <= 0 means use the population law with T_e_gamma
  double T_e_gamma = 0.0;      // K, needed only when charge_excess is not given
  double eta = 7.0;
  double r_t = 0.0;            // m, reported as-is
};

struct InferenceResult {
  double n_i0 = 0.0;
  double sigma = 0.0;
  double T_K = 0.0;
  double eta_assumed = 0.0;
  double r_t = 0.0;
  double V_th = 0.0;
  double N_i = 0.0;
  double charge_excess = 0.0;
};

InferenceResult infer_temperature(const ExtractionScan& scan, const InferenceInputs& inputs);

struct PopulationLaws {
  double N_star = 0.0;
  double charge_excess = 0.0;    // N* (N_i / N*)^{1/2}, clamped to N_i
  double T_e_gamma_check = 0.0;  // K, 8.9 / sigma(um) * dN^2 / N_i
  bool clamped = false;
};
PopulationLaws population_laws(double N_i, double sigma, double T_e_gamma);

}  // namespace ucp
