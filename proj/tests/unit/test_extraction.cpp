#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "test_support.hpp"
#include "ucp/error.hpp"
#include "ucp/extraction.hpp"
#include "ucp/numerics.hpp"
#include "ucp/plasma_params.hpp"

using namespace ucp;
using namespace ucp::constants;
using ucp::test::default_king;
using ucp::test::rel;

TEST_CASE("truncation radius in a uniform field") {
  PlasmaSpec spec;
  spec.N_e = spec.N_i - 1500.0;
  const double r1 = truncation_radius(spec, 1.0);
  INFO("r_t at 1 V/m: " << r1 * 1e3 << " mm");
  CHECK(rel(r1, 1.5e-3) < 0.05);
  CHECK(rel(r1 / spec.sigma, 6.0) < 0.05);
  CHECK(rel(truncation_radius(spec, 4.0), 0.5 * r1) < 1e-12);
  CHECK(truncation_radius(spec, 0.0) == std::numeric_limits<double>::infinity());

  // the Gaussian form only sees the enclosed excess, so it sits inside the far-field root
  const double rg = truncation_radius(spec, 1.0, TruncationForm::gaussian);
  CHECK(rg <= r1);
  CHECK(rel(rg, r1) < 0.01);
  CHECK(rel(equivalent_field(1500.0, r1), 1.0) < 1e-12);

  // a 12 sigma edge held by a charge excess of N* needs a couple of mV/cm
  const double f = equivalent_field(n_star(PlasmaSpec{}), 12.0 * spec.sigma);
  INFO("equivalent field " << f * 1e-2 * 1e3 << " mV/cm");
  CHECK(rel(f, 0.2) < 0.25);
}

TEST_CASE("threshold field") {
  const double c = threshold_coefficient_numeric();
  INFO("numerical coefficient " << c);
  CHECK(rel(c, 2.38) < 0.02);
  const double sigma = 250e-6, n = 1e15;
  const double F = threshold_field(n, sigma);
  CHECK(rel(F, 2.38 * elementary_charge * n * std::sqrt(2.0) * sigma / (4.0 * pi * epsilon0)) < 1e-12);
  CHECK(rel(density_from_threshold(F, sigma), n) < 1e-12);
  CHECK(rel(threshold_field(density_from_threshold(3.3, sigma), sigma), 3.3) < 1e-12);
  CHECK(threshold_field(0.0, sigma) == 0.0);
}

TEST_CASE("cloud size from threshold voltages") {
  const auto same = sigma_from_threshold(2e5, 0.4, 2e5, 0.4, 200e-6);
  CHECK(rel(same.sigma, 200e-6) < 1e-14);
  CHECK(rel(same.sigma_squared, 200e-6 * 200e-6) < 1e-14);
  // at fixed N_i the threshold falls as sigma^-2
  CHECK(rel(sigma_from_threshold(2e5, 0.1, 2e5, 0.4, 200e-6).sigma, 400e-6) < 1e-12);
  CHECK_THROWS_AS(sigma_from_threshold(2e5, 0.1, 0.0, 0.4, 200e-6), InvalidInput);

  // sigma^2 = sigma0^2 + v0^2 t^2 with sigma0 = 200 um and v0 = 80 m/s
  const double s0 = 200e-6, v0 = 80.0;
  std::vector<double> x, s;
  for (double t = 0.0; t <= 10e-6; t += 1e-6) {
    x.push_back(t * t);
    s.push_back(std::sqrt(s0 * s0 + v0 * v0 * t * t) * (1.0 + 0.01 * std::sin(7.0 * t / 1e-6)));
  }
  const auto fit = fit_expansion(x, s);
  CHECK(rel(fit.sigma0, s0) < 0.05);
  CHECK(rel(fit.slope, v0 * v0) < 0.10);
  CHECK(fit.residual > 0.0);
}

TEST_CASE("threshold detection") {
  ExtractionScan scan;
  scan.gap = 0.01;
  for (int k = 1; k <= 100; ++k) {
    const double v = 0.01 * k;
    scan.voltages.push_back(v);
    scan.ejected_counts.push_back(1000.0 * std::min(v / 0.4, 1.0));
  }
  const auto th = detect_threshold(scan);
  CHECK(th.saturation == doctest::Approx(1000.0));
  CHECK(th.voltage == doctest::Approx(0.40));

  auto rising = scan;
  for (std::size_t k = 0; k < rising.voltages.size(); ++k) rising.ejected_counts[k] = 10.0 * k;
  CHECK_THROWS_AS(detect_threshold(rising), ConvergenceError);

  auto bad = scan;
  bad.ejected_counts[50] = 0.0;
  CHECK_THROWS_AS(bad.validate(), InvalidInput);
}

TEST_CASE("inference from a synthetic scan of a King equilibrium") {
  const auto& eq = default_king();
  const PlasmaSpec spec;
  const double gap = 0.01;
  const double V_th = threshold_field(eq.n_i.front(), spec.sigma) * gap;
  const auto volts = num::linspace(0.02 * V_th, 2.5 * V_th, 250);
  const auto scan = synthetic_scan(eq, volts, gap);
  CHECK_NOTHROW(scan.validate());
  CHECK(scan.ejected_counts.front() < scan.ejected_counts.back());
  CHECK(rel(scan.ejected_counts.back(), spec.N_e) < 0.02);

  InferenceInputs in;
  in.sigma = spec.sigma;
  in.charge_excess = spec.N_i - spec.N_e;
  in.eta = 7.0;
  in.r_t = 12.0 * spec.sigma;
  const auto res = infer_temperature(scan, in);
  INFO("n_i0 " << res.n_i0 << " vs " << eq.n_i.front() << ", T_K " << res.T_K << " vs " << eq.params.T_K);
  CHECK(rel(res.n_i0, eq.n_i.front()) < 0.10);
  CHECK(res.T_K > 0.0);
  CHECK(res.eta_assumed == 7.0);
  CHECK(res.r_t == in.r_t);
  CHECK(rel(res.T_K, temp_from_counts(res.N_i, res.N_i - res.charge_excess, spec.sigma, 7.0)) < 1e-12);

  const auto half = synthetic_scan(eq, num::linspace(0.02 * V_th, 0.5 * V_th, 60), gap);
  CHECK_THROWS_AS(infer_temperature(half, in), ConvergenceError);
}

TEST_CASE("population laws") {
  const double sigma = 250e-6, T = 50.0;
  const auto p = population_laws(250000.0, sigma, T);
  CHECK(rel(p.N_star, 1500.0) < 0.10);
  CHECK(rel(p.charge_excess, 20000.0) < 0.10);
  CHECK_FALSE(p.clamped);
  INFO("closure: T_e_gamma from the counts " << p.T_e_gamma_check << " K vs " << T << " K");
  CHECK(rel(p.T_e_gamma_check, T) < 0.01);

  const auto full = population_laws(p.N_star, sigma, T);
  CHECK(rel(full.charge_excess, p.N_star) < 1e-12);
  const auto few = population_laws(0.5 * p.N_star, sigma, T);
  CHECK(few.clamped);
  CHECK(few.charge_excess == 0.5 * p.N_star);
}
