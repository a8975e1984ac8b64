#include "ucp/fokker_planck.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

#include "ucp/error.hpp"
#include "ucp/numerics.hpp"

namespace ucp {

using namespace constants;

namespace {

constexpr std::array<double, 4> gl_x{0.1834346424956498, 0.5255324099163290, 0.7966664774136267,
                                     0.9602898564975363};
constexpr std::array<double, 4> gl_w{0.3626837833783620, 0.3137066458778873, 0.2223810344533745,
                                     0.1012285362903763};

// sum of w f(x) over the 8-point Gauss-Legendre rule on [a, b]
template <class F>
double gauss8(F&& f, double a, double b) {
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  double s = 0.0;
  for (std::size_t i = 0; i < 4; ++i) s += gl_w[i] * (f(c - h * gl_x[i]) + f(c + h * gl_x[i]));
  return s * h;
}

// Bernoulli function w / (e^w - 1)
double bernoulli(double w) {
  if (std::abs(w) < 1e-8) return 1.0 - 0.5 * w;
  if (w > 700.0) return w * std::exp(-w);
  return w / std::expm1(w);
}

double log_mean(double a, double b) {
  if (a <= 0.0 || b <= 0.0) return 0.0;
  const double r = b / a;
  if (std::abs(r - 1.0) < 1e-6) return a * (1.0 + 0.5 * (r - 1.0) - (r - 1.0) * (r - 1.0) / 12.0);
  return (b - a) / std::log(r);
}

std::vector<double> trapezoid_weights(const std::vector<double>& x) {
  std::vector<double> w(x.size(), 0.0);
  for (std::size_t i = 1; i < x.size(); ++i) {
    const double h = x[i] - x[i - 1];
    w[i - 1] += 0.5 * h;
    w[i] += 0.5 * h;
  }
  return w;
}

// df/dE at the nodes: f (ln f)' where f > 0, plain differences elsewhere.  The log form
// makes Maxwellian slopes exact on any grid.
std::vector<double> node_slopes(const EnergyDistribution& dist) {
  const auto& E = dist.mesh.E;
  const auto& f = dist.f;
  const std::size_t n = E.size();
  std::vector<double> plain = num::fd_slopes(E, f);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t a = i == 0 ? 0 : (i + 1 == n ? n - 3 : i - 1);
    bool positive = f[a] > 0.0 && f[a + 1] > 0.0 && f[a + 2] > 0.0;
    if (!positive) {
      out[i] = plain[i];
      continue;
    }
    const std::array<double, 3> x{E[a], E[a + 1], E[a + 2]};
    const std::array<double, 3> y{std::log(f[a]), std::log(f[a + 1]), std::log(f[a + 2])};
    const auto d = num::fd_slopes(x, y);
    out[i] = f[i] * d[i - a];
  }
  return out;
}

num::CubicHermite f_interpolant(const EnergyDistribution& dist) {
  return num::CubicHermite(dist.mesh.E, dist.f, num::fd_slopes(dist.mesh.E, dist.f));
}

FpMesh assemble_mesh(const std::vector<double>& E, const std::vector<double>& tau_all,
                     const std::vector<double>& g_all) {
  // tau_all / g_all interleave nodes and faces: node i at 2i, face i at 2i + 1
  FpMesh m;
  const std::size_t n = E.size();
  m.E = E;
  m.tau.resize(n);
  m.g.resize(n);
  m.tau_face.resize(n - 1);
  m.volume.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    m.tau[i] = tau_all[2 * i];
    m.g[i] = g_all[2 * i];
  }
  for (std::size_t i = 0; i + 1 < n; ++i) m.tau_face[i] = tau_all[2 * i + 1];
  for (std::size_t i = 0; i < n; ++i) {
    const double lo = i == 0 ? m.tau.front() : m.tau_face[i - 1];
    const double hi = i + 1 == n ? m.tau.back() : m.tau_face[i];
    m.volume[i] = hi - lo;
  }
  return m;
}

std::vector<double> interleaved_energies(const std::vector<double>& E) {
  std::vector<double> all;
  all.reserve(2 * E.size() - 1);
  for (std::size_t i = 0; i < E.size(); ++i) {
    all.push_back(E[i]);
    if (i + 1 < E.size()) all.push_back(0.5 * (E[i] + E[i + 1]));
  }
  return all;
}

}  // namespace

FpMesh FpMesh::from_profile(const PotentialProfile& profile, std::size_t nodes) {
  if (nodes < 4) throw InvalidInput("energy mesh needs at least four nodes");
  require_well(profile);
  const auto E = num::linspace(profile.E0(), profile.E_t(), nodes);
  const auto geo = build_geometry(profile, interleaved_energies(E));
  std::vector<double> g(geo.dq_dE.size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = 16.0 * pi * pi * geo.dq_dE[i];
  return assemble_mesh(E, geo.tau, g);
}

FpMesh FpMesh::from_functions(double E0, double E_t, std::size_t nodes,
                              const std::function<double(double)>& tau,
                              const std::function<double(double)>& dtau_dE) {
  if (nodes < 4) throw InvalidInput("energy mesh needs at least four nodes");
  if (!(E_t > E0)) throw InvalidInput("mesh needs E_t > E0");
  const auto E = num::linspace(E0, E_t, nodes);
  const auto all = interleaved_energies(E);
  std::vector<double> t(all.size()), g(all.size());
  for (std::size_t i = 0; i < all.size(); ++i) {
    t[i] = tau(all[i]);
    g[i] = dtau_dE(all[i]);
  }
  return assemble_mesh(E, t, g);
}

double EnergyDistribution::number() const {
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += f[i] * mesh.volume[i];
  return s;
}

double EnergyDistribution::energy_moment() const {
  const auto w = trapezoid_weights(mesh.E);
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += w[i] * f[i] * mesh.E[i] * mesh.g[i];
  return s;
}

double EnergyDistribution::mean_temperature(double electron_mass) const {
  const auto w = trapezoid_weights(mesh.E);
  double kin = 0.0, num = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    kin += w[i] * f[i] * mesh.tau[i];
    num += w[i] * f[i] * mesh.g[i];
  }
  if (!(num > 0.0)) return 0.0;
  return electron_mass * kin / (boltzmann * num);
}

void EnergyDistribution::validate() const {
  if (f.size() != mesh.size() || mesh.size() < 4) throw InvalidInput("distribution and mesh sizes differ");
  for (double v : f)
    if (!(v >= 0.0) || !std::isfinite(v)) throw ContractViolation("distribution must be finite and nonnegative");
}

EnergyDistribution king_distribution(const KingEquilibrium& eq, std::size_t nodes) {
  const PotentialProfile profile(eq.r, eq.phi, eq.dphi_dr);
  EnergyDistribution d;
  d.mesh = FpMesh::from_profile(profile, nodes);
  d.f.resize(nodes);
  for (std::size_t i = 0; i < nodes; ++i) d.f[i] = king_f_of_E(eq.params, d.mesh.E[i]);
  d.f.back() = 0.0;
  return d;
}

EnergyDistribution maxwellian_distribution(const FpMesh& mesh, double T, double n_scale,
                                           double electron_mass) {
  if (!(T > 0.0)) throw InvalidInput("Maxwellian needs T > 0");
  const double kT = boltzmann * T;
  const double A = n_scale / std::pow(2.0 * pi * kT / electron_mass, 1.5);
  EnergyDistribution d;
  d.mesh = mesh;
  d.f.resize(mesh.size());
  for (std::size_t i = 0; i < mesh.size(); ++i) d.f[i] = A * std::exp(-electron_mass * (mesh.E[i] - mesh.E0()) / kT);
  return d;
}

EnergyDistribution collision_step(const EnergyDistribution& dist, double dt, double gamma,
                                  const StepOptions& options, StepReport* report) {
  dist.validate();
  if (!(dt >= 0.0)) throw InvalidInput("time step must be nonnegative");
  const auto& m = dist.mesh;
  const std::size_t n = m.size();
  const std::size_t faces = n - 1;
  if (!options.heating.empty() && options.heating.size() != faces)
    throw InvalidInput("heating term must be given at the mesh faces");

  EnergyDistribution out = dist;
  out.t = dist.t + dt;
  if (options.absorbing) out.f.back() = 0.0;
  const auto& f = out.f;

  // Frozen coefficients from the log-mean face values: for a Maxwellian the drift to
  // diffusion ratio is then exactly m/kT, which keeps it a discrete fixed point.
  std::vector<double> delta(faces), fbar(faces), df(faces);
  for (std::size_t k = 0; k < faces; ++k) {
    delta[k] = m.E[k + 1] - m.E[k];
    fbar[k] = log_mean(f[k], f[k + 1]);
    df[k] = (f[k + 1] - f[k]) / delta[k];
  }
  // D_k = 4 pi Gamma sum_l Delta_l min(tau_k, tau_l) fbar_l, same for A with -df
  std::vector<double> D(faces), A(faces);
  {
    double low_d = 0.0, low_a = 0.0, high_d = 0.0, high_a = 0.0;
    for (std::size_t l = 0; l < faces; ++l) {
      high_d += delta[l] * fbar[l];
      high_a += delta[l] * df[l];
    }
    for (std::size_t k = 0; k < faces; ++k) {
      const double tk = m.tau_face[k];
      low_d += delta[k] * tk * fbar[k];
      low_a += delta[k] * tk * df[k];
      high_d -= delta[k] * fbar[k];
      high_a -= delta[k] * df[k];
      D[k] = 4.0 * pi * gamma * (low_d + tk * high_d);
      A[k] = -4.0 * pi * gamma * (low_a + tk * high_a);
    }
  }

  // Pi_k = a_k f_k + b_k f_{k+1}
  std::vector<double> a(faces), b(faces);
  for (std::size_t k = 0; k < faces; ++k) {
    const double drift = A[k] - (options.heating.empty() ? 0.0 : options.heating[k]);
    const double diff = D[k] / delta[k];
    if (diff > 1e-300 * std::abs(drift) && diff > 0.0) {
      const double w = drift / diff;
      a[k] = -diff * bernoulli(w);
      b[k] = diff * bernoulli(-w);
    } else {
      a[k] = std::min(drift, 0.0);
      b[k] = std::max(drift, 0.0);
    }
  }

  const std::size_t unknowns = options.absorbing ? n - 1 : n;
  std::vector<double> sub(unknowns, 0.0), diag(unknowns, 0.0), sup(unknowns, 0.0), rhs(unknowns);
  for (std::size_t i = 0; i < unknowns; ++i) {
    const double c = m.volume[i] / dt;
    diag[i] = c;
    rhs[i] = c * dist.f[i];
    if (i < faces) {  // upper face i
      diag[i] -= a[i];
      if (i + 1 < unknowns) sup[i] = -b[i];
    }
    if (i > 0) {  // lower face i - 1
      diag[i] += b[i - 1];
      sub[i] = a[i - 1];
    }
  }
  std::vector<double> next;
  if (dt == 0.0) {
    next.assign(dist.f.begin(), dist.f.begin() + static_cast<std::ptrdiff_t>(unknowns));
  } else {
    try {
      next = num::solve_tridiagonal(sub, diag, sup, rhs);
    } catch (const ConvergenceError& e) {
      throw ConvergenceError("collision step failed; reduce the time step", e.diagnostics());
    }
  }
  for (std::size_t i = 0; i < unknowns; ++i) {
    if (!std::isfinite(next[i]) || next[i] < -1e-12 * std::abs(rhs[i] / std::max(diag[i], 1e-300)) - 1e-300)
      throw ConvergenceError("collision step produced negative f; reduce the time step");
    out.f[i] = std::max(next[i], 0.0);
  }
  if (report) {
    report->number_before = dist.number();
    report->number_after = out.number();
    report->boundary_flux = options.absorbing ? a[faces - 1] * out.f[faces - 1] : 0.0;
  }
  return out;
}

FluxCoefficients flux_coefficients(const EnergyDistribution& dist) {
  const auto& m = dist.mesh;
  const std::size_t n = m.size();
  const auto w = trapezoid_weights(m.E);
  const auto s = node_slopes(dist);
  FluxCoefficients c;
  c.H.assign(n, 0.0);
  c.N.assign(n, 0.0);
  // prefix sums over tau-weighted terms below and plain sums above each node
  double low_h = 0.0, low_n = 0.0, high_h = 0.0, high_n = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    high_h += w[j] * dist.f[j];
    high_n += w[j] * s[j];
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double ti = m.tau[i];
    low_h += w[i] * m.tau[i] * dist.f[i];
    low_n += w[i] * m.tau[i] * s[i];
    high_h -= w[i] * dist.f[i];
    high_n -= w[i] * s[i];
    c.H[i] = low_h + ti * high_h;
    c.N[i] = -(low_n + ti * high_n);
  }
  return c;
}

FluxProfile flux(const EnergyDistribution& dist, double gamma, double electron_mass) {
  dist.validate();
  const auto& m = dist.mesh;
  const std::size_t n = m.size();
  const auto w = trapezoid_weights(m.E);
  const auto s = node_slopes(dist);
  FluxProfile out;
  out.E = m.E;
  out.Pi.assign(n, 0.0);
  out.T_G.assign(n, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < n; ++i) {
    // pairwise form f_j s_i - f_i s_j cancels exactly for equal log-slopes
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      sum += w[j] * std::min(m.tau[i], m.tau[j]) * (dist.f[j] * s[i] - dist.f[i] * s[j]);
    }
    out.Pi[i] = 4.0 * pi * gamma * sum;
    if (dist.f[i] > 0.0 && s[i] < 0.0) out.T_G[i] = -electron_mass * dist.f[i] / (boltzmann * s[i]);
  }
  return out;
}

double evaporation_rate(const EnergyDistribution& dist, double gamma, double prefactor) {
  dist.validate();
  const double scale = *std::max_element(dist.f.begin(), dist.f.end());
  if (scale == 0.0) return 0.0;
  if (dist.f.back() > 1e-12 * scale) throw ContractViolation("evaporation rate needs f(E_t) = 0");
  const auto s = node_slopes(dist);
  const auto w = trapezoid_weights(dist.mesh.E);
  double moment = 0.0;
  for (std::size_t j = 0; j < dist.f.size(); ++j) moment += w[j] * dist.f[j] * dist.mesh.tau[j];
  return prefactor * gamma * s.back() * moment;
}

double electron_density(const EnergyDistribution& dist, double phi) {
  const auto& E = dist.mesh.E;
  if (phi >= E.back()) return 0.0;
  const auto fi = f_interpolant(dist);
  auto f = [&](double e) { return std::max(fi(e), 0.0); };
  double sum = 0.0;
  std::size_t j = 0;
  while (j + 1 < E.size() && E[j + 1] <= phi) ++j;
  // partial panel [phi, E_{j+1}] with E = phi + L w^2
  const double top = E[j + 1];
  const double L = top - phi;
  sum += gauss8([&](double u) { return f(phi + L * u * u) * std::sqrt(L) * u * 2.0 * L * u; }, 0.0, 1.0);
  for (std::size_t k = j + 1; k + 1 < E.size(); ++k)
    sum += gauss8([&](double e) { return f(e) * std::sqrt(e - phi); }, E[k], E[k + 1]);
  return 4.0 * pi * std::sqrt(2.0) * sum;
}

double ejection_rate(const EnergyDistribution& dist, const PotentialProfile& profile,
                     const Species& electron, std::size_t radial_points) {
  dist.validate();
  const auto& E = dist.mesh.E;
  const double Et = dist.mesh.E_t();
  const double cut = Et - (E[E.size() - 1] - E[E.size() - 2]);
  const auto fi = f_interpolant(dist);
  auto f = [&](double e) { return e >= Et ? 0.0 : std::max(fi(e), 0.0); };
  const double gm = g_prime(electron) * electron.mass * electron.mass;
  const double pref = (2.0 / 3.0) * std::pow(16.0 * gm * pi * pi, 2);

  const double r_t = profile.r_t();
  auto shell = [&](double r) {
    const double phi = profile(r);
    const double lo = std::max(phi, dist.mesh.E0());
    if (lo >= cut) return 0.0;
    auto outer = [&](double e) {
      // inner variable u = E + E' - Phi - E_t in [0, E - Phi]
      const double span = e - phi;
      if (span <= 0.0) return 0.0;
      const double inner = gauss8([&](double u) { return u * std::sqrt(u) * f(u + phi + Et - e); }, 0.0, span);
      const double gap = Et - e;
      return inner * f(e) / (gap * gap);
    };
    double s = 0.0;
    const std::size_t panels = 64;
    // the 1/(E_t - E)^2 factor calls for panels graded towards the cut
    const double x0 = std::log(Et - lo), x1 = std::log(Et - cut);
    for (std::size_t p = 0; p < panels; ++p) {
      const double a = x0 + (x1 - x0) * static_cast<double>(p) / panels;
      const double b = x0 + (x1 - x0) * static_cast<double>(p + 1) / panels;
      s += gauss8([&](double x) { const double e = Et - std::exp(x); return outer(e) * std::exp(x); }, b, a);
    }
    return s;
  };
  double total = 0.0;
  const auto rs = num::linspace(0.0, r_t, radial_points + 1);
  for (std::size_t i = 0; i + 1 < rs.size(); ++i)
    total += gauss8([&](double r) { return r * r * shell(r); }, rs[i], rs[i + 1]);
  return -pref * total;
}

std::vector<double> escape_density(double rate, const std::vector<double>& r, double speed) {
  if (!(speed > 0.0)) throw InvalidInput("escape speed must be positive");
  std::vector<double> n(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (!(r[i] > 0.0)) throw InvalidInput("escape density needs positive radii");
    n[i] = std::abs(rate) / (4.0 * pi * r[i] * r[i] * speed);
  }
  return n;
}

StationaryResult stationary_solve(const EnergyDistribution& seed, double gamma, double outflow,
                                  const std::vector<double>& heating, double divergence_cap) {
  seed.validate();
  if (!(gamma > 0.0)) throw InvalidInput("stationary solve needs Gamma > 0");
  if (outflow < 0.0) throw InvalidInput("outflow is a loss rate and must be nonnegative");
  const auto& m = seed.mesh;
  const std::size_t n = m.size();
  if (!heating.empty() && heating.size() != n) throw InvalidInput("heating must be given at the nodes");
  const auto c = flux_coefficients(seed);

  // ratio N'/H with N' = N - N~/(4 pi Gamma); undefined at E0 where both vanish
  std::vector<double> ratio(n, 0.0);
  for (std::size_t i = 1; i < n; ++i) {
    const double src = heating.empty() ? 0.0 : heating[i] / (4.0 * pi * gamma);
    ratio[i] = c.H[i] > 0.0 ? (c.N[i] - src) / c.H[i] : 0.0;
  }
  ratio[0] = ratio[1] + (ratio[1] - ratio[2]);  // linear extrapolation to E0
  // G(E) = int_{E0}^{E} ratio
  std::vector<double> G(n, 0.0);
  for (std::size_t i = 1; i < n; ++i) G[i] = G[i - 1] + 0.5 * (ratio[i] + ratio[i - 1]) * (m.E[i] - m.E[i - 1]);

  StationaryResult res;
  res.dist = seed;
  auto& f = res.dist.f;
  if (outflow == 0.0) {
    for (std::size_t i = 0; i < n; ++i) f[i] = std::exp(-G[i]);
    const double scale = seed.number() / res.dist.number();
    for (auto& v : f) v *= scale;
    res.cutoff_energy = m.E0();
    return res;
  }
  // f(E) = (outflow / 4 pi Gamma) e^{-G(E)} int_E^{E_t} e^{G(E')} / H(E') dE'
  const double amp = outflow / (4.0 * pi * gamma);
  f.assign(n, 0.0);
  double acc = 0.0;  // running integral, kept relative to e^{G_i}
  for (std::size_t i = n - 1; i-- > 0;) {
    const double h = m.E[i + 1] - m.E[i];
    const double upper = 1.0 / c.H[i + 1];
    const double lower = c.H[i] > 0.0 ? 1.0 / c.H[i] : std::numeric_limits<double>::infinity();
    // shift the accumulated integral from base G_{i+1} to base G_i
    acc *= std::exp(G[i + 1] - G[i]);
    acc += 0.5 * h * (upper * std::exp(G[i + 1] - G[i]) + lower);
    f[i] = amp * acc;
  }
  const double cap = divergence_cap * *std::max_element(seed.f.begin(), seed.f.end());
  res.cutoff_energy = m.E0();
  for (std::size_t i = n; i-- > 0;) {
    if (!(f[i] <= cap)) {
      res.diverges = true;
      res.cutoff_energy = m.E[std::min(i + 1, n - 1)];
      for (std::size_t k = 0; k <= i; ++k) f[k] = std::isfinite(f[k]) ? std::min(f[k], cap) : cap;
      break;
    }
  }
  return res;
}

double kramers_limit_check(const EnergyDistribution& dist, double T_e, double x_min,
                           double electron_mass) {
  dist.validate();
  if (!(T_e > 0.0)) throw InvalidInput("Kramers check needs T_e > 0");
  const auto& E = dist.mesh.E;
  const std::size_t n = E.size();
  const double beta = electron_mass / (boltzmann * T_e);
  std::vector<double> x(n), J(n - 1);
  for (std::size_t i = 0; i < n; ++i) x[i] = beta * (E[i] - E.front());
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const double h = x[k + 1] - x[k];
    J[k] = (bernoulli(-h) * dist.f[k + 1] - bernoulli(h) * dist.f[k]) / h;
  }
  const double scale = *std::max_element(dist.f.begin(), dist.f.end());
  if (scale == 0.0) return 0.0;
  double worst = 0.0;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (x[i] < x_min) continue;
    const double r = (J[i] - J[i - 1]) / (0.5 * (x[i + 1] - x[i - 1]));
    worst = std::max(worst, std::abs(r) / scale);
  }
  return worst;
}

namespace {

struct DensityResponse {
  double n = 0.0;
  double chi = 0.0;  // -dn/dPhi at fixed f(E)
};

DensityResponse density_and_response(const num::CubicHermite& fi, const std::vector<double>& E, double phi) {
  DensityResponse out;
  if (phi >= E.back()) return out;
  auto f = [&](double e) { return std::max(fi(e), 0.0); };
  std::size_t j = 0;
  while (j + 1 < E.size() && E[j + 1] <= phi) ++j;
  const double L = E[j + 1] - phi;
  double n = gauss8([&](double u) { return f(phi + L * u * u) * 2.0 * L * std::sqrt(L) * u * u; }, 0.0, 1.0);
  double chi = gauss8([&](double u) { return f(phi + L * u * u) * 2.0 * std::sqrt(L); }, 0.0, 1.0);
  for (std::size_t k = j + 1; k + 1 < E.size(); ++k) {
    n += gauss8([&](double e) { return f(e) * std::sqrt(e - phi); }, E[k], E[k + 1]);
    chi += gauss8([&](double e) { return f(e) / std::sqrt(e - phi); }, E[k], E[k + 1]);
  }
  out.n = 4.0 * pi * std::sqrt(2.0) * n;
  out.chi = 4.0 * pi / std::sqrt(2.0) * chi;
  return out;
}

// (1/r^2)(r^2 e')' - c chi e = rhs on a uniform grid from r = 0, regular at the
// centre and with the exterior monopole condition e' = -e/r at the edge.
std::vector<double> screened_poisson(const std::vector<double>& r, const std::vector<double>& c_chi,
                                     const std::vector<double>& rhs) {
  const std::size_t n = r.size();
  const double h = r[1] - r[0];
  std::vector<double> sub(n, 0.0), diag(n, 0.0), sup(n, 0.0);
  diag[0] = -6.0 / (h * h) - c_chi[0];
  sup[0] = 6.0 / (h * h);
  for (std::size_t k = 1; k < n; ++k) {
    const double lo = (r[k] - 0.5 * h) * (r[k] - 0.5 * h), hi = (r[k] + 0.5 * h) * (r[k] + 0.5 * h);
    const double w = 1.0 / (r[k] * r[k] * h * h);
    sub[k] = lo * w;
    diag[k] = -(lo + hi) * w - c_chi[k];
    if (k + 1 < n) {
      sup[k] = hi * w;
    } else {
      // ghost node e_n = e_{n-2} - 2 h e_{n-1} / r_{n-1}
      sub[k] += hi * w;
      diag[k] -= hi * w * 2.0 * h / r[k];
    }
  }
  return num::solve_tridiagonal(sub, diag, sup, rhs);
}

}  // namespace

RecoupleResult poisson_recouple(const EnergyDistribution& dist, const PotentialProfile& previous,
                                const GaussianCloud& cloud, const std::vector<double>& r, double tolerance,
                                int max_iterations) {
  dist.validate();
  if (r.size() < 8 || r.front() != 0.0) throw InvalidInput("recouple needs a radial grid starting at 0");
  const std::size_t nodes = dist.mesh.size();
  const std::size_t nr = r.size();
  const double c = 4.0 * pi * std::abs(g_prime(cloud.electron)) * cloud.electron.mass;

  // f as a function of tau, fixed while the potential adjusts
  const num::CubicHermite E_of_tau(dist.mesh.E, dist.mesh.tau, dist.mesh.g);
  const auto f_src = f_interpolant(dist);
  const double tau_top = dist.mesh.tau.back();
  auto remap = [&](const PotentialProfile& profile) {
    EnergyDistribution d;
    d.mesh = FpMesh::from_profile(profile, nodes);
    d.t = dist.t;
    d.f.resize(nodes);
    for (std::size_t i = 0; i < nodes; ++i)
      d.f[i] = d.mesh.tau[i] >= tau_top ? 0.0 : std::max(f_src(E_of_tau.inverse(d.mesh.tau[i])), 0.0);
    d.f.back() = 0.0;
    return d;
  };

  // homologous first guess: a cloud rescaled by lambda has Phi(r) -> Phi(r / lambda) / lambda
  const double lambda = r.back() / previous.r_t();
  std::vector<double> phi(nr), dphi(nr);
  for (std::size_t k = 0; k < nr; ++k) {
    phi[k] = previous(r[k] / lambda) / lambda;
    dphi[k] = previous.gradient(r[k] / lambda) / (lambda * lambda);
  }

  RecoupleResult res;
  res.profile = PotentialProfile(r, phi, dphi);
  res.dist = remap(res.profile);
  std::vector<double> n_e(nr), c_chi(nr), rhs(nr);
  for (int it = 1;; ++it) {
    const auto fi = f_interpolant(res.dist);
    for (std::size_t k = 0; k < nr; ++k) {
      const auto dr = density_and_response(fi, res.dist.mesh.E, res.profile(r[k]));
      n_e[k] = dr.n;
      c_chi[k] = c * dr.chi;
    }
    // T = Phi[n_e(Phi_k)]; Newton with the local response gives Phi_{k+1} = T + e
    const PotentialProfile T = total_potential(cloud, r, n_e);
    const double depth = T.depth();
    if (!(depth > 0.0)) throw ConvergenceError("recoupled potential lost its well", "iteration " + std::to_string(it));
    double change = 0.0;
    for (std::size_t k = 0; k < nr; ++k) {
      const double D = T.phi()[k] - res.profile.phi()[k];
      change = std::max(change, std::abs(D) / depth);
      rhs[k] = c_chi[k] * D;
    }
    res.iterations = it;
    res.residual = change;
    if (change <= tolerance) {
      res.profile = T;
      res.dist = remap(res.profile);
      break;
    }
    if (it >= max_iterations) {
      std::ostringstream os;
      os << "relative change " << change << " after " << it << " iterations";
      throw ConvergenceError("Poisson recoupling did not converge", os.str());
    }
    // At fixed f(tau) orbit energies follow the orbit-averaged potential change, so the
    // density responds to dPhi - <dPhi> rather than dPhi.  <.> is approximated by one
    // electron-weighted mean and handled as a rank-one update.
    const auto e1 = screened_poisson(r, c_chi, rhs);
    const auto e2 = screened_poisson(r, c_chi, c_chi);
    double wsum = 0.0, m_de = 0.0, m_e2 = 0.0;
    for (std::size_t k = 0; k < nr; ++k) {
      const double w = n_e[k] * r[k] * r[k];
      const double D = T.phi()[k] - res.profile.phi()[k];
      wsum += w;
      m_de += w * (D + e1[k]);
      m_e2 += w * e2[k];
    }
    const double gamma_shift = wsum > 0.0 ? (m_de / wsum) / (1.0 + m_e2 / wsum) : 0.0;
    std::vector<double> e(nr);
    for (std::size_t k = 0; k < nr; ++k) e[k] = e1[k] - gamma_shift * e2[k];
    const auto de = num::fd_slopes(r, e, true);
    const auto& old_phi = res.profile.phi();
    const auto& old_dphi = res.profile.dphi_dr();
    for (double theta = 1.0;; theta *= 0.5) {
      for (std::size_t k = 0; k < nr; ++k) {
        phi[k] = (1.0 - theta) * old_phi[k] + theta * (T.phi()[k] + e[k]);
        dphi[k] = (1.0 - theta) * old_dphi[k] + theta * (T.dphi_dr()[k] + de[k]);
      }
      try {
        res.profile = PotentialProfile(r, phi, dphi);
        break;
      } catch (const InvalidInput&) {
        if (theta < 1e-3) throw ConvergenceError("Poisson recoupling lost confinement", "damping exhausted");
      }
    }
    res.dist = remap(res.profile);
  }
  // with no phase volume lost through the top, undo the interpolation drift in N_e
  if (res.dist.mesh.tau.back() >= tau_top) {
    const double N1 = res.dist.number();
    res.number_correction = N1 > 0.0 ? dist.number() / N1 : 1.0;
    for (auto& v : res.dist.f) v *= res.number_correction;
  }
  return res;
}

}  // namespace ucp
