// ucp: command line front end to the ultracold plasma library.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "ucp/error.hpp"
#include "ucp/extraction.hpp"
#include "ucp/fokker_planck.hpp"
#include "ucp/ion_cloud.hpp"
#include "ucp/king.hpp"
#include "ucp/numerics.hpp"
#include "ucp/orbit_space.hpp"
#include "ucp/plasma_params.hpp"
#include "ucp/scenario.hpp"
#include "ucp/table_io.hpp"
#include "ucp/tbr.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace ucp;

namespace {

struct Common {
  std::string config;
  std::string out = ".";
  std::optional<std::uint64_t> seed;
  std::string format = "csv";
};

Scenario load(const Common& c) {
  Scenario sc = c.config.empty() ? Scenario{} : load_scenario(c.config);
  if (c.seed) sc.seed = *c.seed;
  return sc;
}

OutputFormat format_of(const Common& c) { return parse_format(c.format); }

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

void write_json(const fs::path& path, const json& j) {
  fs::create_directories(path.parent_path());
  std::ofstream os(path);
  if (!os) throw Error("cannot write " + path.string());
  os << j.dump(2) << '\n';
  std::cout << path.string() << '\n';
}

void report(const fs::path& p) { std::cout << p.string() << '\n'; }

double gaussian_peak(double N, double sigma) { return N / (std::pow(2.0 * constants::pi, 1.5) * sigma * sigma * sigma); }

void cmd_params(const Common& c, double density) {
  const Scenario sc = load(c);
  const double n = density > 0.0 ? density : gaussian_peak(sc.spec.N_e, sc.spec.sigma);
  const auto p = derive_params(sc.spec, n);
  const auto glob = coulomb_log_global(sc.spec);
  const std::vector<std::pair<std::string, double>> rows{
      {"n_e0_m3", n},          {"G_prime", p.G_prime},       {"gamma_coeff", p.gamma_coeff},
      {"lambda_D_m", p.lambda_D}, {"a_WS_m", p.a_WS},         {"r_L_m", p.r_L},
      {"ln_Lambda", p.ln_Lambda}, {"ln_Lambda_global", glob.ln_Lambda}, {"omega_L_per_s", p.omega_L},
      {"omega_E_per_s", p.omega_E}, {"omega_pl_per_s", p.omega_pl}, {"t_e_s", p.t_e},
      {"sigma_v_m_per_s", p.sigma_v}, {"N_star", p.N_star},   {"t_PE_s", p.t_PE},
      {"v0_m_per_s", p.v0},     {"virial_T_K", virial_temperature(sc.spec)}};
  if (format_of(c) == OutputFormat::json) {
    json j;
    for (const auto& [k, v] : rows) j[k] = finite_or_null(v);
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::cout << std::setprecision(6);
  for (const auto& [k, v] : rows) std::cout << std::left << std::setw(20) << k << ' ' << v << '\n';
}

KingEquilibrium solve_king(const Scenario& sc) {
  KingOptions opt;
  opt.grid_points = sc.numerics.king_grid_points;
  return solve_selfconsistent(sc.spec, sc.eta0, truncation_radius_at(sc, GaussianCloud::from_spec(sc.spec)), opt);
}

void cmd_king(const Common& c) {
  const Scenario sc = load(c);
  const auto eq = solve_king(sc);
  Table t{{"r_m", "eta_t", "n_e_m3", "n_i_m3", "T_e_K"}, {}};
  for (std::size_t k = 0; k < eq.r.size(); ++k) t.add_row({eq.r[k], eq.eta_t[k], eq.n_e[k], eq.n_i[k], eq.T_e[k]});
  report(write_table(c.out, "king_profile", t, format_of(c)));
  json j{{"eta", eq.params.eta},
         {"T_K", eq.params.T_K},
         {"n_e0", eq.params.n_e0},
         {"r_t", eq.params.r_t},
         {"N_e", eq.N_e_computed},
         {"crossing_radius", finite_or_null(eq.crossing_radius)},
         {"tail_exponent", finite_or_null(eq.tail_exponent)}};
  write_json(fs::path(c.out) / "king_summary.json", j);
}

void cmd_geometry(const Common& c, std::size_t nodes) {
  const Scenario sc = load(c);
  const auto eq = solve_king(sc);
  const PotentialProfile profile(eq.r, eq.phi, eq.dphi_dr);
  const auto g = build_geometry(profile, nodes);
  Table t{{"E_J_per_kg", "q", "dq_dE", "tau"}, {}};
  for (std::size_t k = 0; k < g.size(); ++k) t.add_row({g.E[k], g.q[k], g.dq_dE[k], g.tau[k]});
  report(write_table(c.out, "geometry", t, format_of(c)));
}

void cmd_evolve(const Common& c) {
  const Scenario sc = load(c);
  RunOutput out{c.out, format_of(c), true};
  const auto rec = run(sc, &out);
  std::cout << "snapshots " << rec.snapshots.size() << ", N_e " << rec.N_e_initial << " -> " << rec.N_e_final
            << ", bookkeeping error " << rec.bookkeeping_error() << '\n';
}

void cmd_explode(const Common& c, std::size_t shells, std::size_t frames, double t_end) {
  const Scenario sc = load(c);
  GaussianCloud cloud = GaussianCloud::from_spec(sc.spec);
  cloud.v0 = 0.0;
  if (t_end <= 0.0) t_end = 2.0 * coulomb_explosion_time(cloud);
  const auto ens = make_shells(cloud, shells);
  Table t{{"t_s", "r_m", "n_i_m3", "u_i_m_per_s"}, {}};
  for (double time : num::linspace(0.0, t_end, frames)) {
    const auto now = evolve_shells(ens, cloud.ion, time);
    for (std::size_t k = 0; k < now.shells.size(); ++k)
      t.add_row({time, now.shells[k].r_now, now.density[k], shell_velocity(now.shells[k], cloud.ion, time)});
  }
  report(write_table(c.out, "explode", t, format_of(c)));
}

void cmd_tbr(const Common& c, double duration, std::size_t frames) {
  const Scenario sc = load(c);
  const double n_e = gaussian_peak(sc.spec.N_e, sc.spec.sigma);
  const double n_i = gaussian_peak(sc.spec.N_i, sc.spec.sigma);
  Table rates{{"T_e_K", "tbr_rate_per_s", "heating_W", "epsilon_star_J"}, {}};
  const double t_pe = derive_params(sc.spec, n_e).t_PE;
  for (double T : num::logspace(1.0, 1000.0, 31)) {
    const double g = tbr_rate(n_e, n_i, T, sc.spec.knobs.c_tbr);
    rates.add_row({T, g, heating_rate(n_e, t_pe, g, T), epsilon_star(T, n_e)});
  }
  report(write_table(c.out, "tbr_rates", rates, format_of(c)));

  BoundPopulation pop;
  pop.grid = BoundGrid::logarithmic();
  pop.p.assign(pop.grid.size(), 0.0);
  MasterEquationOptions me;
  me.n_e = n_e;
  me.T_e = sc.spec.T_e;
  me.capture_rate = tbr_rate(n_e, n_i, sc.spec.T_e, sc.spec.knobs.c_tbr) * sc.spec.N_e;
  Table snaps{{"t_s", "eps", "f_bound"}, {}};
  const double dt = duration / static_cast<double>(frames);
  for (std::size_t k = 0; k <= frames; ++k) {
    if (k > 0) pop = master_equation_step(pop, dt, me);
    for (std::size_t j = 0; j < pop.grid.size(); ++j)
      snaps.add_row({pop.t, pop.grid.eps[j], pop.p[j] / pop.grid.width[j]});
  }
  report(write_table(c.out, "tbr_master_equation", snaps, format_of(c)));
}

void cmd_infer(const Common& c, const std::string& scan_path, bool population_law) {
  const Scenario sc = load(c);
  const auto scan = read_scan_csv(scan_path, sc.extraction.gap, sc.extraction.expansion_time);
  InferenceInputs in;
  in.sigma = GaussianCloud::from_spec(sc.spec).at_time(sc.extraction.expansion_time).sigma();
  in.eta = sc.eta0;
  in.T_e_gamma = sc.spec.T_e_gamma;
  in.charge_excess = population_law ? 0.0 : sc.spec.charge_excess();
  in.r_t = sc.truncation.mode == TruncationMode::field ? truncation_radius(sc.spec, sc.truncation.field)
                                                       : sc.truncation.multiple * in.sigma;
  const auto r = infer_temperature(scan, in);
  json j{{"n_i0", r.n_i0}, {"sigma", r.sigma},       {"T_K", r.T_K},     {"eta_assumed", r.eta_assumed},
         {"r_t", r.r_t},   {"V_th", r.V_th},         {"N_i", r.N_i},     {"charge_excess", r.charge_excess}};
  write_json(fs::path(c.out) / "inference.json", j);
}

void cmd_reproduce(const Common& c, const std::string& name) {
  const Scenario sc = load(c);
  for (const auto& p : reproduce_figure(name, sc, c.out, format_of(c))) report(p);
}

void cmd_sweep(const Common& c, unsigned threads) {
  if (c.config.empty()) throw ConfigError("sweep needs --config");
  std::ifstream is(c.config);
  if (!is) throw ConfigError("cannot open config " + c.config);
  std::stringstream ss;
  ss << is.rdbuf();
  auto scenarios = parse_sweep(ss.str());
  if (c.seed) {
    for (auto& s : scenarios) s.seed = *c.seed;
  }
  const auto results = sweep(scenarios, c.out, format_of(c), threads);
  json summary = json::array();
  bool failed = false;
  for (const auto& r : results) {
    json e{{"name", r.name}};
    if (r.record) {
      e["scenario_hash"] = r.record->scenario_hash;
      e["N_e_final"] = r.record->N_e_final;
      e["snapshots"] = r.record->snapshots.size();
    } else {
      e["error"] = r.error;
      failed = true;
    }
    summary.push_back(e);
  }
  write_json(fs::path(c.out) / "sweep.json", summary);
  if (failed) throw Error("some sweep scenarios failed; see sweep.json");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ultracold plasma electron kinetics"};
  app.require_subcommand(1);
  app.fallthrough();
  Common common;
  app.add_option("--config", common.config, "Scenario JSON file");
  app.add_option("--out", common.out, "Output directory");
  app.add_option("--seed", common.seed, "Seed for the master-equation sampling");
  app.add_option("--format", common.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));

  double density = 0.0;
  auto* params = app.add_subcommand("params", "Derived plasma parameters");
  params->add_option("--density", density, "Electron density in m^-3 (default: Gaussian peak)");

  auto* king = app.add_subcommand("king", "Self-consistent King equilibrium");
  std::size_t nodes = 300;
  auto* geometry = app.add_subcommand("geometry", "Phase-space volume of the King potential");
  geometry->add_option("--nodes", nodes, "Energy nodes");
  auto* evolve = app.add_subcommand("evolve", "Full Fokker-Planck evolution");

  std::size_t shells = 400, frames = 5;
  double t_end = 0.0;
  auto* explode = app.add_subcommand("explode", "Lagrangian shell Coulomb explosion");
  explode->add_option("--shells", shells);
  explode->add_option("--frames", frames, "Number of output times");
  explode->add_option("--t-end", t_end, "Last output time in s (default 2 t_CE)");

  double tbr_duration = 1e-6;
  std::size_t tbr_frames = 10;
  auto* tbr = app.add_subcommand("tbr", "Recombination rate tables and bound-state master equation");
  tbr->add_option("--duration", tbr_duration, "Master-equation span in s");
  tbr->add_option("--frames", tbr_frames);

  std::string scan;
  bool population_law = false;
  auto* infer = app.add_subcommand("infer", "Temperature from an extraction scan");
  infer->add_option("--scan", scan, "Scan CSV (voltage, count)")->required();
  infer->add_flag("--population-law", population_law, "Charge excess from the population law");

  std::string figure;
  auto* reproduce = app.add_subcommand("reproduce", "Dataset for one figure");
  reproduce->add_option("name", figure)->required()->check(CLI::IsMember(figure_names()));

  unsigned threads = 0;
  auto* sweep_cmd = app.add_subcommand("sweep", "Run a sweep of scenarios in parallel");
  sweep_cmd->add_option("--threads", threads);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*params) cmd_params(common, density);
    else if (*king) cmd_king(common);
    else if (*geometry) cmd_geometry(common, nodes);
    else if (*evolve) cmd_evolve(common);
    else if (*explode) cmd_explode(common, shells, frames, t_end);
    else if (*tbr) cmd_tbr(common, tbr_duration, tbr_frames);
    else if (*infer) cmd_infer(common, scan, population_law);
    else if (*reproduce) cmd_reproduce(common, figure);
    else if (*sweep_cmd) cmd_sweep(common, threads);
  } catch (const InvalidInput& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const ConvergenceError& e) {
    std::cerr << "convergence error: " << e.what();
    if (!e.diagnostics().empty()) std::cerr << " (" << e.diagnostics() << ')';
    std::cerr << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
