#include "ucp/tbr.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "ucp/error.hpp"
#include "ucp/numerics.hpp"

namespace ucp {

using namespace constants;

namespace {

constexpr double down_power = 4.83;
constexpr double down_initial_power = 2.5;
constexpr double up_power = 2.33;
constexpr double reference_density = 1e15;  // 1e9 cm^-3

void require_bound(double eps) {
  if (!(eps < 0.0)) throw InvalidInput("bound-state energies must be negative");
}

}  // namespace

double tbr_rate(double n_e, double n_i, double T_e, double c_tbr, const Species& electron) {
  if (!(T_e > 0.0)) throw InvalidInput("recombination rate diverges at T_e = 0");
  if (n_e < 0.0 || n_i < 0.0) throw InvalidInput("densities must be nonnegative");
  const double gm = std::abs(g_prime(electron)) * electron.mass;
  const double v2 = boltzmann * T_e / electron.mass;
  return c_tbr * n_e * n_i * std::pow(gm, 5) / std::pow(v2, 4.5);
}

double mk_rate_scale(double T_e, const Species& electron) {
  if (!(T_e > 0.0)) throw InvalidInput("kernel needs T_e > 0");
  const double kT = boltzmann * T_e;
  const double b = coulomb_e2 / kT;
  return 11.0 * b * b * std::sqrt(kT / electron.mass);
}

double mk_shape(double eps_i, double eps_f) {
  if (eps_f <= eps_i) return std::pow(-eps_f, -down_power) * std::pow(-eps_i, down_initial_power);
  return std::pow(-eps_i, -up_power) * std::exp(-(eps_f - eps_i));
}

double mk_kernel(double eps_i, double eps_f, double T_e, const Species& electron) {
  require_bound(eps_i);
  require_bound(eps_f);
  return mk_rate_scale(T_e, electron) * mk_shape(eps_i, eps_f);
}

KernelTotals mk_totals(double eps_i) {
  require_bound(eps_i);
  const double u = -eps_i;
  KernelTotals t;
  // eps_f = -u / s maps (-inf, eps_i] onto (0, 1]
  t.down = num::integrate([&](double s) { return s <= 0.0 ? 0.0 : mk_shape(eps_i, -u / s) * u / (s * s); }, 0.0, 1.0);
  t.up_bound = num::integrate([&](double e) { return mk_shape(eps_i, e); }, eps_i, 0.0);
  // eps_f = -ln s maps (0, inf) onto (0, 1)
  t.continuum = num::integrate([&](double s) { return s <= 0.0 ? 0.0 : mk_shape(eps_i, -std::log(s)) / s; }, 0.0, 1.0);
  return t;
}

double bottleneck_binding(bool include_continuum) {
  auto balance = [&](double u) {
    const auto t = mk_totals(-u);
    return t.down - t.up_bound - (include_continuum ? t.continuum : 0.0);
  };
  return num::find_root(balance, 0.5, 20.0, 1e-10);
}

double heating_rate(double n_e0, double t_PE, double gamma_tbr, double T_e) {
  if (gamma_tbr == 0.0) return 0.0;
  if (!(n_e0 > 0.0) || !(t_PE > 0.0) || !(T_e > 0.0) || gamma_tbr < 0.0)
    throw InvalidInput("heating rate inputs must be positive");
  const double scale = (n_e0 / reference_density) * (t_PE / 3e-6);
  return 5.4 * std::pow(scale, -2.0 / 9.0) * gamma_tbr * boltzmann * T_e;
}

double cluster_heating_rate(double gamma_tbr, double mass, double sigma_v) {
  return 100.0 * gamma_tbr * mass * sigma_v * sigma_v;
}

double epsilon_star(double T_e, double n_e) {
  if (!(T_e > 0.0) || !(n_e > 0.0)) throw InvalidInput("epsilon_star needs positive T_e and n_e");
  return boltzmann * 500.0 * std::pow(T_e, -2.0 / 9.0) * std::pow(n_e / reference_density, 1.0 / 9.0);
}

TbrState tbr_state(double n_e, double n_i, double T_e, double t_PE, const ModelKnobs& knobs,
                   const Species& electron) {
  TbrState s;
  s.rate = tbr_rate(n_e, n_i, T_e, knobs.c_tbr, electron);
  s.heating = n_e > 0.0 ? heating_rate(n_e, t_PE, s.rate, T_e) : 0.0;
  s.bottleneck_energy = bottleneck_binding() * boltzmann * T_e;
  s.epsilon_star = n_e > 0.0 ? epsilon_star(T_e, n_e) : 0.0;
  return s;
}

std::function<double(double)> heating_profile(double edot_center, HeatingWeighting weighting,
                                              const std::vector<double>& r, const std::vector<double>& n_e,
                                              const std::vector<double>& n_i) {
  if (weighting == HeatingWeighting::uniform) return [edot_center](double) { return edot_center; };
  if (r.size() < 2 || n_e.size() != r.size() || n_i.size() != r.size())
    throw InvalidInput("density-weighted heating needs matching r, n_e, n_i tables");
  std::vector<double> w(r.size());
  const double norm = n_e.front() * n_i.front();
  if (!(norm > 0.0)) throw InvalidInput("central densities must be positive");
  for (std::size_t k = 0; k < r.size(); ++k) w[k] = n_e[k] * n_i[k] / norm;
  auto shape = num::CubicHermite::monotone(r, std::move(w));
  return [edot_center, shape = std::move(shape)](double x) {
    if (x > shape.back_x()) return 0.0;
    return edot_center * std::max(shape(x), 0.0);
  };
}

std::vector<double> fp_source_term(const PotentialProfile& profile, const std::function<double(double)>& edot,
                                   std::span<const double> energies) {
  std::vector<double> out(energies.size());
  for (std::size_t k = 0; k < energies.size(); ++k)
    out[k] = 16.0 * pi * pi * weighted_speed_integral(profile, energies[k], edot);
  return out;
}

std::vector<double> fp_source_faces(const FpMesh& mesh, const PotentialProfile& profile,
                                    const std::function<double(double)>& edot) {
  std::vector<double> faces(mesh.size() - 1);
  for (std::size_t k = 0; k + 1 < mesh.size(); ++k) faces[k] = 0.5 * (mesh.E[k] + mesh.E[k + 1]);
  return fp_source_term(profile, edot, faces);
}

BoundGrid BoundGrid::logarithmic(std::size_t nodes, double lo, double hi) {
  if (nodes < 3 || !(lo > 0.0) || !(hi > lo)) throw InvalidInput("bad bound grid");
  const auto u = num::logspace(hi, lo, nodes);  // deepest first
  const double ratio = std::pow(hi / lo, 1.0 / static_cast<double>(nodes - 1));
  BoundGrid g;
  g.eps.resize(nodes);
  g.width.resize(nodes);
  for (std::size_t k = 0; k < nodes; ++k) {
    g.eps[k] = -u[k];
    g.width[k] = u[k] * (std::sqrt(ratio) - 1.0 / std::sqrt(ratio));
  }
  g.top_face = -lo / std::sqrt(ratio);
  return g;
}

double BoundPopulation::bound() const {
  double s = 0.0;
  for (double x : p) s += x;
  return s;
}

double BoundPopulation::mean_binding() const {
  double s = 0.0, w = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    s += p[k] * -grid.eps[k];
    w += p[k];
  }
  return w > 0.0 ? s / w : 0.0;
}

TransitionTable transition_table(const BoundGrid& grid) {
  const std::size_t n = grid.size();
  TransitionTable t;
  t.W.assign(n, std::vector<double>(n, 0.0));
  t.ionization.resize(n);
  t.below.resize(n);
  const double bottom_face = grid.eps[0] - 0.5 * grid.width[0];
  for (std::size_t j = 0; j < n; ++j) {
    const double ej = grid.eps[j];
    for (std::size_t l = 0; l < n; ++l) {
      if (l != j) t.W[j][l] = mk_shape(ej, grid.eps[l]) * grid.width[l];
    }
    t.below[j] = std::pow(-ej, down_initial_power) * std::pow(-bottom_face, 1.0 - down_power) / (down_power - 1.0);
    t.ionization[j] = std::pow(-ej, -up_power) * std::exp(-(grid.top_face - ej));
  }
  return t;
}

BoundPopulation master_equation_step(const BoundPopulation& pop, double dt, const MasterEquationOptions& options) {
  if (dt < 0.0) throw InvalidInput("negative time step");
  if (pop.p.size() != pop.grid.size()) throw InvalidInput("population does not match its grid");
  BoundPopulation out = pop;
  if (dt == 0.0) return out;
  if (!(options.T_e > 0.0) || options.n_e < 0.0) throw InvalidInput("master equation needs T_e > 0, n_e >= 0");

  const auto table = transition_table(pop.grid);
  const double scale = options.n_e * mk_rate_scale(options.T_e, options.electron);
  const std::size_t n = pop.grid.size();
  std::vector<double> escape(n);
  double fastest = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    double s = table.ionization[j] + (j == 0 ? 0.0 : table.below[j]);
    for (double w : table.W[j]) s += w;
    escape[j] = s * scale;
    fastest = std::max(fastest, escape[j]);
  }
  const auto substeps = static_cast<std::size_t>(std::ceil(fastest * dt / options.max_step_fraction));
  const std::size_t count = std::max<std::size_t>(substeps, 1);
  const double h = dt / static_cast<double>(count);

  std::vector<double> gain(n);
  for (std::size_t s = 0; s < count; ++s) {
    std::fill(gain.begin(), gain.end(), 0.0);
    double lost = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double pj = out.p[j];
      if (pj == 0.0) continue;
      for (std::size_t l = 0; l < n; ++l) gain[l] += h * scale * table.W[j][l] * pj;
      if (j != 0) gain[0] += h * scale * table.below[j] * pj;
      lost += h * scale * table.ionization[j] * pj;
      gain[j] -= h * escape[j] * pj;
    }
    gain[n - 1] += h * options.capture_rate;
    for (std::size_t j = 0; j < n; ++j) out.p[j] += gain[j];
    out.ionized += lost;
    out.captured += h * options.capture_rate;
  }
  out.t += dt;
  return out;
}

std::vector<double> master_equation_drift(const BoundGrid& grid, bool include_continuum) {
  const auto table = transition_table(grid);
  const double bottom_face = grid.eps[0] - 0.5 * grid.width[0];
  std::vector<double> drift(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j) {
    double s = 0.0;
    for (std::size_t l = 0; l < grid.size(); ++l) s += (grid.eps[l] - grid.eps[j]) * table.W[j][l];
    // below the grid: mean of (eps_f - eps_j) over eps_f < bottom face, in closed form
    const double u = -grid.eps[j], ub = -bottom_face;
    s += std::pow(u, down_initial_power) *
         (u * std::pow(ub, 1.0 - down_power) / (down_power - 1.0) - std::pow(ub, 2.0 - down_power) / (down_power - 2.0));
    if (include_continuum) {
      const double d = grid.top_face - grid.eps[j];
      s += std::pow(-grid.eps[j], -up_power) * std::exp(-d) * (d + 1.0);
    }
    drift[j] = s;
  }
  return drift;
}

double drift_sign_change(const BoundGrid& grid, bool include_continuum) {
  const auto d = master_equation_drift(grid, include_continuum);
  int changes = 0;
  double where = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t j = 0; j + 1 < d.size(); ++j) {
    if ((d[j] < 0.0) != (d[j + 1] < 0.0)) {
      ++changes;
      const double w = d[j] / (d[j] - d[j + 1]);
      where = -(grid.eps[j] + w * (grid.eps[j + 1] - grid.eps[j]));
    }
  }
  if (changes != 1)
    throw ConvergenceError("master-equation drift does not change sign exactly once",
                           "sign changes: " + std::to_string(changes));
  return where;
}

RydbergDistribution fit_rydberg_distribution(std::span<const double> binding_energies, std::size_t bins) {
  if (binding_energies.size() < 50) throw InvalidInput("Rydberg fit needs at least 50 samples");
  if (bins < 4) throw InvalidInput("Rydberg fit needs at least 4 bins");
  const auto [lo_it, hi_it] = std::minmax_element(binding_energies.begin(), binding_energies.end());
  if (!(*lo_it > 0.0)) throw InvalidInput("binding energies must be positive");
  if (!(*hi_it > *lo_it * (1.0 + 1e-9))) throw ConvergenceError("degenerate binding-energy samples");

  const auto edges = num::logspace(*lo_it, *hi_it * (1.0 + 1e-12), bins + 1);
  std::vector<double> counts(bins, 0.0);
  for (double e : binding_energies) {
    const auto it = std::upper_bound(edges.begin(), edges.end(), e);
    const auto b = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(it - edges.begin() - 1, 0, static_cast<std::ptrdiff_t>(bins) - 1));
    counts[b] += 1.0;
  }

  // ln(dN/dE) = c - alpha ln E - E / kT, weights = counts
  const double e_scale = *hi_it;
  std::vector<std::vector<double>> A(3, std::vector<double>(3, 0.0));
  std::vector<double> rhs(3, 0.0);
  std::vector<std::array<double, 4>> rows;
  for (std::size_t b = 0; b < bins; ++b) {
    if (counts[b] < 1.0) continue;
    const double centre = std::sqrt(edges[b] * edges[b + 1]);
    const double y = std::log(counts[b] / (edges[b + 1] - edges[b]));
    const std::array<double, 3> x{1.0, std::log(centre / e_scale), centre / e_scale};
    rows.push_back({x[0], x[1], x[2], y});
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) A[i][j] += counts[b] * x[i] * x[j];
      rhs[i] += counts[b] * x[i] * y;
    }
  }
  if (rows.size() < 4) throw ConvergenceError("too few populated bins for the Rydberg fit");
  const auto c = num::solve_dense(A, rhs);
  if (!(c[2] < 0.0)) throw ConvergenceError("Rydberg fit has no exponential cutoff");

  RydbergDistribution out;
  out.alpha = -c[1];
  const double kT = -e_scale / c[2];
  out.T_ryd = kT / boltzmann;
  out.normalization = static_cast<double>(binding_energies.size());

  double chi2 = 0.0;
  std::size_t used = 0;
  for (std::size_t b = 0, r = 0; b < bins; ++b) {
    if (counts[b] < 1.0) continue;
    const auto& row = rows[r++];
    const double res = row[3] - (c[0] * row[0] + c[1] * row[1] + c[2] * row[2]);
    chi2 += counts[b] * res * res;
    ++used;
  }
  const double dof = static_cast<double>(used) - 3.0;
  const double s2 = dof > 0.0 ? chi2 / dof : 0.0;
  const auto col1 = num::solve_dense(A, {0.0, 1.0, 0.0});
  const auto col2 = num::solve_dense(A, {0.0, 0.0, 1.0});
  out.alpha_stderr = std::sqrt(std::max(col1[1] * s2, 0.0));
  const double c2_err = std::sqrt(std::max(col2[2] * s2, 0.0));
  out.T_ryd_stderr = out.T_ryd * c2_err / std::abs(c[2]);
  out.at_equilibrium_bound = out.alpha >= 2.5;
  return out;
}

}  // namespace ucp
