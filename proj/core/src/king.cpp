#include "ucp/king.hpp"

#include <array>
#include <cmath>
#include <algorithm>
#include <limits>
#include <sstream>

#include "ucp/error.hpp"
#include "ucp/numerics.hpp"

namespace ucp {

using namespace constants;

namespace {

const double two_over_sqrt_pi = 2.0 / std::sqrt(pi);
const double c52 = 8.0 / (15.0 * std::sqrt(pi));

// Tail of the series e^x erf(sqrt x) = (2/sqrt pi) sum_n 2^n x^{n+1/2} / (2n+1)!!
// starting at n = first.
double erf_series_tail(double x, int first) {
  double term = 1.0;  // 2^n x^n / (2n+1)!!
  for (int n = 1; n <= first; ++n) term *= 2.0 * x / (2.0 * n + 1.0);
  double sum = 0.0;
  for (int n = first; n < first + 200; ++n) {
    sum += term;
    if (term < 1e-17 * sum) break;
    term *= 2.0 * x / (2.0 * n + 3.0);
  }
  return two_over_sqrt_pi * std::sqrt(x) * sum;
}

}  // namespace

double king_F(double x) {
  if (x < 0.0) throw InvalidInput("king_F needs a nonnegative argument");
  if (x == 0.0) return 0.0;
  if (x < 2.0) return erf_series_tail(x, 2);
  return std::exp(x) * std::erf(std::sqrt(x)) - std::sqrt(4.0 * x / pi) * (1.0 + 2.0 * x / 3.0);
}

double king_temperature_ratio(double eta_t) {
  if (eta_t <= 0.0) return 0.0;
  if (eta_t < 2.0) {
    // F / (c52 x^{5/2}) = 1 + S with S the n >= 3 tail; ratio = S / (1 + S)
    const double lead = c52 * std::pow(eta_t, 2.5);
    const double s = erf_series_tail(eta_t, 3) / lead;
    return s / (1.0 + s);
  }
  return 1.0 - c52 * std::pow(eta_t, 2.5) / king_F(eta_t);
}

double king_temperature_ratio_approx(double eta_t) { return std::erf(0.22 * eta_t); }

double king_prefactor(const KingParams& p) {
  const double kT = boltzmann * p.T_K;
  const double m = p.electron_mass;
  return p.n_e0 * std::exp(p.eta) / (std::pow(2.0 * pi * kT / m, 1.5) * king_F(p.eta));
}

double king_f_of_E(const KingParams& p, double E) {
  if (E >= p.E_t) return 0.0;
  const double kT = boltzmann * p.T_K;
  const double m = p.electron_mass;
  const double base = p.n_e0 / (std::pow(2.0 * pi * kT / m, 1.5) * king_F(p.eta));
  return base * std::expm1(m * (p.E_t - E) / kT);
}

double king_dfdE(const KingParams& p, double E) {
  if (E > p.E_t) return 0.0;
  const double kT = boltzmann * p.T_K;
  const double m = p.electron_mass;
  const double base = p.n_e0 / (std::pow(2.0 * pi * kT / m, 1.5) * king_F(p.eta));
  return -base * (m / kT) * std::exp(m * (p.E_t - E) / kT);
}

namespace {

// d F^K / dx = e^x erf(sqrt x) - 2 sqrt(x/pi)
double king_F_prime(double x) {
  if (x <= 0.0) return 0.0;
  if (x < 2.0) return erf_series_tail(x, 1);
  return std::exp(x) * std::erf(std::sqrt(x)) - 2.0 * std::sqrt(x / pi);
}

// Scaled Poisson problem for y = x psi on a uniform grid x_k = k h, k = 0..N:
//   y'' = -a x (exp(-x^2/2) - b S(psi)),  S = F^K(psi) / F^K(eta),
// y_0 = y_N = 0 and psi(0) = eta imposed through the odd Taylor expansion of y
// at the first node.  Discretized with Numerov's fourth-order formula and solved
// by Newton iteration on (y_1..y_{N-1}, b).
class KingBvp {
 public:
  KingBvp(double eta, double x_t, std::size_t intervals)
      : eta_(eta), n_(intervals), h_(x_t / static_cast<double>(intervals)),
        F_eta_(king_F(eta)), Fp_eta_(king_F_prime(eta)) {
    x_.resize(n_ + 1);
    ion_.resize(n_ + 1);
    for (std::size_t k = 0; k <= n_; ++k) {
      x_[k] = h_ * static_cast<double>(k);
      ion_[k] = std::exp(-0.5 * x_[k] * x_[k]);
    }
  }

  struct State {
    std::vector<double> y;
    double b = 0.0;
  };

  // bare-ion solution: psi = eta - a (1 - sqrt(pi/2) erf(x/sqrt2)/x)
  [[nodiscard]] State ion_only(double a) const {
    State s;
    s.y.resize(n_ + 1);
    for (std::size_t k = 1; k < n_; ++k) {
      const double x = x_[k];
      s.y[k] = x * (eta_ - a * (1.0 - std::sqrt(pi / 2.0) * std::erf(x / std::sqrt(2.0)) / x));
    }
    return s;
  }

  [[nodiscard]] double a_min() const {
    const double xt = x_.back();
    return eta_ / (1.0 - std::sqrt(pi / 2.0) * std::erf(xt / std::sqrt(2.0)) / xt);
  }

  [[nodiscard]] double psi(const State& s, std::size_t k) const {
    if (k == 0) return eta_;
    if (k == n_) return 0.0;
    return s.y[k] / x_[k];
  }

  [[nodiscard]] double shape(double p) const {
    if (!(p > 0.0)) return 0.0;
    return king_F(std::min(p, 700.0)) / F_eta_;
  }
  [[nodiscard]] double shape_prime(double p) const {
    if (!(p > 0.0)) return 0.0;
    return king_F_prime(std::min(p, 700.0)) / F_eta_;
  }

  // Newton solve at fixed a; returns false when the iteration stalls.
  bool solve(double a, State& s, double& residual) const {
    const std::size_t m = n_ - 1;
    std::vector<double> g(n_ + 1), dg(n_ + 1), gb(n_ + 1);
    std::vector<double> R(m), sub(m), diag(m), sup(m), col(m);
    const double w = h_ * h_ / 12.0;

    auto evaluate = [&](const State& st, double& rc) {
      for (std::size_t k = 0; k <= n_; ++k) {
        const double p = psi(st, k);
        const double S = shape(p);
        g[k] = -a * x_[k] * (ion_[k] - st.b * S);
        dg[k] = (k == 0 || k == n_) ? 0.0 : a * st.b * shape_prime(p);
        gb[k] = a * x_[k] * S;
      }
      double norm = 0.0;
      for (std::size_t k = 1; k < n_; ++k) {
        const double ym = k == 1 ? 0.0 : st.y[k - 1];
        const double yp = k + 1 == n_ ? 0.0 : st.y[k + 1];
        R[k - 1] = yp - 2.0 * st.y[k] + ym - w * (g[k + 1] + 10.0 * g[k] + g[k - 1]);
        norm = std::max(norm, std::abs(R[k - 1]));
      }
      rc = st.y[1] - center(a, st.b);
      return std::max(norm, std::abs(rc));
    };

    double rc = 0.0;
    double norm = evaluate(s, rc);
    const double scale = std::max(eta_, 1.0);
    for (int it = 0; it < 60; ++it) {
      for (std::size_t k = 1; k < n_; ++k) {
        const std::size_t i = k - 1;
        diag[i] = -2.0 - 10.0 * w * dg[k];
        sub[i] = k == 1 ? 0.0 : 1.0 - w * dg[k - 1];
        sup[i] = k + 1 == n_ ? 0.0 : 1.0 - w * dg[k + 1];
        col[i] = -w * (gb[k + 1] + 10.0 * gb[k] + gb[k - 1]);
      }
      std::vector<double> u, v;
      try {
        u = num::solve_tridiagonal(sub, diag, sup, R);
        v = num::solve_tridiagonal(sub, diag, sup, col);
      } catch (const ConvergenceError&) {
        return false;
      }
      const double dP = center_db(a, s.b);
      const double denom = v[0] + dP;
      if (denom == 0.0 || !std::isfinite(denom)) return false;
      const double db = (rc - u[0]) / denom;

      double lambda = 1.0;
      State trial = s;
      double trial_rc = 0.0, trial_norm = 0.0;
      for (int half = 0; half < 30; ++half) {
        trial.b = s.b + lambda * db;
        for (std::size_t k = 1; k < n_; ++k) trial.y[k] = s.y[k] + lambda * (-u[k - 1] - v[k - 1] * db);
        trial_norm = evaluate(trial, trial_rc);
        if (std::isfinite(trial_norm) && trial_norm < norm * (1.0 - 1e-4 * lambda)) break;
        if (std::isfinite(trial_norm) && norm < 1e-13 * scale) break;
        lambda *= 0.5;
      }
      if (!std::isfinite(trial_norm)) return false;
      double step = std::abs(lambda * db);
      for (std::size_t k = 1; k < n_; ++k) step = std::max(step, std::abs(trial.y[k] - s.y[k]));
      s = std::move(trial);
      rc = trial_rc;
      norm = evaluate(s, rc);  // refresh derivative tables for the accepted state
      if (step < 1e-13 * scale && norm < 1e-11 * scale * h_ * h_) {
        residual = norm / (h_ * h_ * scale);
        return s.b >= 0.0;
      }
    }
    residual = norm / (h_ * h_ * scale);
    return norm < 1e-10 * scale * h_ * h_ && s.b >= 0.0;
  }

  // integral of x^2 b S(psi) dx by Simpson's rule (n_ even)
  [[nodiscard]] double electron_integral(const State& s) const {
    double sum = 0.0;
    for (std::size_t k = 1; k < n_; ++k) {
      const double f = x_[k] * x_[k] * shape(psi(s, k));
      sum += (k % 2 == 1 ? 4.0 : 2.0) * f;
    }
    return s.b * sum * h_ / 3.0;
  }

  [[nodiscard]] const std::vector<double>& x() const { return x_; }
  [[nodiscard]] double h() const { return h_; }
  [[nodiscard]] std::size_t intervals() const { return n_; }
  [[nodiscard]] double F_eta() const { return F_eta_; }

 private:
  [[nodiscard]] double c3(double a, double b) const { return -a * (1.0 - b) / 6.0; }
  [[nodiscard]] double n2(double a, double b) const { return -0.5 - b * (Fp_eta_ / F_eta_) * c3(a, b); }
  [[nodiscard]] double center(double a, double b) const {
    const double h3 = h_ * h_ * h_;
    return eta_ * h_ + c3(a, b) * h3 - a * n2(a, b) / 20.0 * h3 * h_ * h_;
  }
  [[nodiscard]] double center_db(double a, double b) const {
    const double h3 = h_ * h_ * h_;
    const double dn2 = -(Fp_eta_ / F_eta_) * (c3(a, b) + b * a / 6.0);
    return a / 6.0 * h3 - a * dn2 / 20.0 * h3 * h_ * h_;
  }

  double eta_;
  std::size_t n_;
  double h_;
  double F_eta_, Fp_eta_;
  std::vector<double> x_, ion_;
};

}  // namespace

KingEquilibrium solve_selfconsistent(const PlasmaSpec& spec, double eta, double r_t,
                                     const KingOptions& options) {
  spec.validate();
  if (!(spec.N_i > spec.N_e)) throw InvalidInput("King solve needs N_i > N_e");
  if (!(eta > 0.5 && eta < 30.0)) throw InvalidInput("eta must lie in (0.5, 30)");
  if (!(r_t > 0.0)) throw InvalidInput("truncation radius must be positive");
  if (options.grid_points < 16) throw InvalidInput("radial grid too coarse");
  if (!(spec.N_e > 0.0)) throw InvalidInput("King solve needs electrons");

  const double sigma = spec.sigma;
  const double x_t = r_t / sigma;
  const double n_i0 = spec.ion_peak_density();
  const double mass_scale = 4.0 * pi * sigma * sigma * sigma * n_i0;
  const std::size_t refine = std::max<std::size_t>(1, options.refinement);
  const std::size_t intervals = refine * (options.grid_points - 1);
  KingBvp bvp(eta, x_t, intervals % 2 == 0 ? intervals : 2 * intervals);
  const std::size_t stride = bvp.intervals() / (options.grid_points - 1);

  int solves = 0;
  double residual = 0.0;
  auto run = [&](double a, KingBvp::State& st) {
    ++solves;
    return bvp.solve(a, st, residual);
  };

  // continuation in a from the bare-ion limit a_min (b = 0) towards colder states
  struct Point {
    double a;
    double electrons;
    KingBvp::State state;
  };
  const double a_min = bvp.a_min();
  Point last{a_min * 1.0001, 0.0, bvp.ion_only(a_min * 1.0001)};
  if (!run(last.a, last.state))
    throw ConvergenceError("King solve failed at the bare-ion limit", "a_min=" + std::to_string(a_min));
  last.electrons = mass_scale * bvp.electron_integral(last.state);

  double factor = 1.25;
  Point next = last;
  for (int steps = 0;; ++steps) {
    if (last.electrons >= spec.N_e) break;
    if (steps > 2000 || last.a > 1e8 * a_min) {
      std::ostringstream os;
      os << "eta=" << eta << " target N_e=" << spec.N_e << " reached N_e=" << last.electrons
         << " at a=" << last.a << " (T_K=" << elementary_charge * elementary_charge * sigma * sigma * n_i0 / (epsilon0 * boltzmann * last.a) << " K)";
      throw ConvergenceError("electron count not reachable for this eta and r_t", os.str());
    }
    next = last;
    next.a = last.a * factor;
    if (!run(next.a, next.state)) {
      factor = std::sqrt(factor);
      if (factor < 1.0 + 1e-9) {
        std::ostringstream os;
        os << "eta=" << eta << " a=" << last.a << " residual=" << residual;
        throw ConvergenceError("continuation stalled", os.str());
      }
      continue;
    }
    next.electrons = mass_scale * bvp.electron_integral(next.state);
    if (next.electrons >= spec.N_e) break;
    last = next;
    factor = std::min(factor * 1.2, 1.5);
  }

  Point sol = last.electrons >= spec.N_e ? last : next;
  if (last.electrons < spec.N_e) {
    Point lo = last, hi = next;
    auto deficit = [&](double la) {
      const double a = std::exp(la);
      KingBvp::State st = (a - lo.a < hi.a - a) ? lo.state : hi.state;
      if (!run(a, st)) throw ConvergenceError("King inner solve failed during bracketing");
      const double got = mass_scale * bvp.electron_integral(st);
      sol = {a, got, st};
      if (got < spec.N_e) lo = sol;
      else hi = sol;
      return got - spec.N_e;
    };
    const double la = num::find_root(deficit, std::log(lo.a), std::log(hi.a), 1e-15);
    if (std::abs(sol.a - std::exp(la)) > 1e-12 * sol.a) deficit(la);
  }

  const double a = sol.a;
  const double b = sol.state.b;
  KingEquilibrium eq;
  eq.scaled_a = a;
  eq.scaled_b = b;
  eq.cloud = GaussianCloud::from_spec(spec);
  auto& P = eq.params;
  P.eta = eta;
  P.T_K = elementary_charge * elementary_charge * sigma * sigma * n_i0 / (epsilon0 * boltzmann * a);
  P.n_e0 = b * n_i0;
  P.r_t = r_t;
  P.electron_mass = spec.electron.mass;

  const double kT = boltzmann * P.T_K;
  const double m = spec.electron.mass;
  const double g = g_prime(spec.electron);
  eq.N_e_computed = sol.electrons;
  P.E_t = g * m * (spec.N_i * std::erf(x_t / std::sqrt(2.0)) - eq.N_e_computed) / r_t;
  P.E0 = P.E_t - kT * eta / m;

  // Gauss law on the fine grid: psi' x^2 = -a Q(x), Q = int x^2 (ion - b S)
  const auto& X = bvp.x();
  const std::size_t N = bvp.intervals();
  std::vector<double> fine_psi(N + 1), q_int(N + 1, 0.0), m_int(N + 1, 0.0);
  for (std::size_t k = 0; k <= N; ++k) fine_psi[k] = std::max(bvp.psi(sol.state, k), 0.0);
  auto charge = [&](std::size_t k) {
    return X[k] * X[k] * (std::exp(-0.5 * X[k] * X[k]) - b * bvp.shape(fine_psi[k]));
  };
  auto electron = [&](std::size_t k) { return X[k] * X[k] * b * bvp.shape(fine_psi[k]); };
  for (std::size_t k = 2; k <= N; k += 2) {
    // Simpson over pairs; odd nodes get the trapezoid-corrected half value
    q_int[k] = q_int[k - 2] + bvp.h() / 3.0 * (charge(k - 2) + 4.0 * charge(k - 1) + charge(k));
    m_int[k] = m_int[k - 2] + bvp.h() / 3.0 * (electron(k - 2) + 4.0 * electron(k - 1) + electron(k));
    q_int[k - 1] = q_int[k - 2] + bvp.h() / 12.0 * (5.0 * charge(k - 2) + 8.0 * charge(k - 1) - charge(k));
    m_int[k - 1] = m_int[k - 2] + bvp.h() / 12.0 * (5.0 * electron(k - 2) + 8.0 * electron(k - 1) - electron(k));
  }
  // psi' from Gauss's law, used for the potential gradient
  std::vector<double> fine_dpsi(N + 1, 0.0);
  for (std::size_t k = 1; k <= N; ++k) fine_dpsi[k] = -a * q_int[k] / (X[k] * X[k]);

  // independent residual: fourth-order centered derivative of psi vs Gauss's law
  double resid = 0.0;
  for (std::size_t k = 2; k + 2 <= N; ++k) {
    const double d = (-fine_psi[k + 2] + 8.0 * fine_psi[k + 1] - 8.0 * fine_psi[k - 1] + fine_psi[k - 2]) /
                     (12.0 * bvp.h());
    if (fine_psi[k + 2] <= 0.0) break;
    resid = std::max(resid, std::abs(d - fine_dpsi[k]) / std::max(eta, 1.0));
  }
  eq.ode_residual = resid;
  eq.newton_residual = residual;

  const std::size_t n = options.grid_points;
  eq.r.resize(n);
  eq.eta_t.resize(n);
  eq.phi.resize(n);
  eq.dphi_dr.resize(n);
  eq.n_e.resize(n);
  eq.n_i.resize(n);
  eq.T_e.resize(n);
  eq.N_e_enclosed.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t k = j * stride;
    const double x = X[k];
    const double psi = fine_psi[k];
    eq.r[j] = x * sigma;
    eq.eta_t[j] = psi;
    eq.phi[j] = P.E_t - kT * psi / m;
    eq.dphi_dr[j] = -kT * fine_dpsi[k] / (m * sigma);
    eq.n_e[j] = P.n_e0 * bvp.shape(psi);
    eq.n_i[j] = n_i0 * std::exp(-0.5 * x * x);
    eq.T_e[j] = P.T_K * king_temperature_ratio(psi);
    eq.N_e_enclosed[j] = mass_scale * m_int[k];
  }
  eq.phi.back() = P.E_t;

  eq.crossing_radius = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t k = 1; k < n; ++k) {
    const double d0 = eq.n_e[k - 1] - eq.n_i[k - 1], d1 = eq.n_e[k] - eq.n_i[k];
    if (d0 < 0.0 && d1 >= 0.0) {
      eq.crossing_radius = eq.r[k - 1] + (eq.r[k] - eq.r[k - 1]) * (-d0) / (d1 - d0);
      break;
    }
  }

  std::vector<double> lx, ly;
  for (std::size_t k = 1; k < n; ++k) {
    const double x = eq.r[k] / sigma;
    if (x >= options.tail_window_lo && x <= options.tail_window_hi && x < 0.95 * x_t && eq.n_e[k] > 0.0) {
      lx.push_back(std::log(x));
      ly.push_back(std::log(eq.n_e[k]));
    }
  }
  eq.tail_exponent = lx.size() >= 5 ? num::fit_line(lx, ly).slope : std::numeric_limits<double>::quiet_NaN();
  eq.solves = solves;
  return eq;
}

double temperature_profile(const KingEquilibrium& eq, double r) {
  if (r >= eq.params.r_t) return 0.0;
  const auto spline = num::CubicHermite::monotone(eq.r, eq.eta_t);
  return eq.params.T_K * king_temperature_ratio(std::max(spline(r), 0.0));
}

double mean_temperature(const KingEquilibrium& eq) {
  std::vector<double> w(eq.r.size()), wt(eq.r.size());
  for (std::size_t k = 0; k < eq.r.size(); ++k) {
    w[k] = 4.0 * pi * eq.r[k] * eq.r[k] * eq.n_e[k];
    wt[k] = w[k] * eq.T_e[k];
  }
  const double N = num::cumulative_trapezoid(eq.r, w).back();
  return N > 0.0 ? num::cumulative_trapezoid(eq.r, wt).back() / N : 0.0;
}

double temp_from_counts(double N_i, double N_e, double sigma, double eta) {
  if (!(eta > 2.0)) throw InvalidInput("temp_from_counts needs eta > 2");
  if (!(sigma > 0.0)) throw InvalidInput("sigma must be positive");
  return std::sqrt(2.0 / pi) * coulomb_e2 * (N_i - N_e) / sigma / (1.9 * (eta - 2.0) * boltzmann);
}

double harmonic_core_temperature(const KingEquilibrium& eq) {
  const double s = eq.cloud.sigma();
  const double dn = eq.n_i.front() - eq.n_e.front();
  return elementary_charge * elementary_charge * s * s * dn / (3.0 * epsilon0 * boltzmann);
}

VelocityTable maxwellian_comparison(const KingEquilibrium& eq, double shell_quartile,
                                    std::size_t points) {
  if (!(shell_quartile > 0.0 && shell_quartile < 1.0)) throw InvalidInput("quartile must be in (0,1)");
  if (points < 3) throw InvalidInput("need at least three velocity points");
  const double target = shell_quartile * eq.N_e_computed;
  std::size_t k = 1;
  while (k < eq.r.size() && eq.N_e_enclosed[k] < target) ++k;
  k = std::min(k, eq.r.size() - 1);
  const double w = (target - eq.N_e_enclosed[k - 1]) / (eq.N_e_enclosed[k] - eq.N_e_enclosed[k - 1]);
  const double r_i = eq.r[k - 1] + w * (eq.r[k] - eq.r[k - 1]);
  const double phi_i = eq.phi[k - 1] + w * (eq.phi[k] - eq.phi[k - 1]);

  const auto& P = eq.params;
  const double A = king_prefactor(P);
  const double m_over_kT = P.electron_mass / (boltzmann * P.T_K);
  VelocityTable t;
  t.shell_radius = r_i;
  t.v_max = std::sqrt(2.0 * std::max(P.E_t - phi_i, 0.0));
  const std::size_t fine = 20 * points;
  const auto v = num::linspace(0.0, 1.5 * t.v_max, fine);
  std::vector<double> gk(fine), gm(fine);
  for (std::size_t i = 0; i < fine; ++i) {
    const double E = 0.5 * v[i] * v[i] + phi_i;
    gk[i] = 4.0 * pi * v[i] * v[i] * king_f_of_E(P, E);
    gm[i] = 4.0 * pi * v[i] * v[i] * A * std::exp(-m_over_kT * (E - P.E0));
  }
  const auto ck = num::cumulative_trapezoid(v, gk);
  const auto cm = num::cumulative_trapezoid(v, gm);
  for (std::size_t i = 0; i < fine; i += 20) {
    t.v.push_back(v[i]);
    t.king.push_back(ck[i]);
    t.maxwellian.push_back(cm[i]);
  }
  t.v.push_back(v.back());
  t.king.push_back(ck.back());
  t.maxwellian.push_back(cm.back());
  return t;
}

}  // namespace ucp
