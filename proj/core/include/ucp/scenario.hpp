#pragma once

// Scenario configuration, the coupled evolution loop (expansion, Poisson recoupling,
// collisions, recombination, losses) and the dataset generators built on it.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ucp/plasma_params.hpp"
#include "ucp/table_io.hpp"
#include "ucp/tbr.hpp"

namespace ucp {

enum class TruncationMode { field, sigma_multiple, isolated };

struct Truncation {
  TruncationMode mode = TruncationMode::sigma_multiple;
  double field = 0.0;      // V/m, field mode
  double multiple = 12.0;  // r_t / sigma for sigma_multiple; outer box for isolated
};

struct PhysicsToggles {
  bool collisions = true;
  bool tbr_heating = false;  // recombination heating and the matching free-electron loss
  bool evaporation = true;   // absorbing boundary at E_t; reflecting when off
  bool expansion = true;
  bool master_equation = false;
  HeatingWeighting heating_weighting = HeatingWeighting::density_product;
};

struct NumericsConfig {
  std::size_t energy_nodes = 200;
  std::size_t radial_points = 300;
  double macro_step = 0.0;  // s; 0 picks 5% of the initial relaxation time
  std::size_t king_grid_points = 800;
  double recouple_tolerance = 1e-6;
};

struct ExtractionConfig {
  double gap = 0.01;            // m
  double expansion_time = 0.0;  // s
};

struct Scenario {
  std::string name = "scenario";
  PlasmaSpec spec{};
  double eta0 = 7.0;
  Truncation truncation{};
  double duration = 2e-6;           // s
  double snapshot_interval = 2e-7;  // s
  PhysicsToggles physics{};
  NumericsConfig numerics{};
  ExtractionConfig extraction{};
  std::uint64_t seed = 1;

  void validate() const;
};

// JSON with unit-suffixed keys, for example {"plasma": {"sigma_m": 2.5e-4, "T_e_K": 50}}.
// Unknown keys and wrong types raise ConfigError; absent keys keep their defaults.
Scenario parse_scenario(std::string_view json_text);
Scenario load_scenario(const std::filesystem::path& path);
std::string to_json(const Scenario& scenario);
// FNV-1a of the canonical JSON form, as 16 hex digits.
std::string scenario_hash(const Scenario& scenario);
// {"base": {...}, "scenarios": [{...}, ...]}: each entry is merged over the base.
std::vector<Scenario> parse_sweep(std::string_view json_text);

// Truncation radius for the cloud at its current size.
double truncation_radius_at(const Scenario& scenario, const GaussianCloud& cloud);

struct RateSet {
  double evaporation = 0.0;  // electrons/s lost across E_t (>= 0)
  double ejection = 0.0;     // electrons/s lost by single encounters (>= 0)
  double tbr = 0.0;          // s^-1 per free electron
  double tbr_heating = 0.0;  // W per electron
};

struct Snapshot {
  double t = 0.0;
  double sigma = 0.0;
  double r_t = 0.0;
  double N_e = 0.0;
  double T_mean = 0.0;  // K, kinetic temperature of the whole system
  double T_K = 0.0;     // K, from the slope of ln f over the lower half of the well
  double eta = 0.0;     // m (E_t - E0) / k T_K
  double n_e0 = 0.0;
  RateSet rates{};
  double bound_atoms = 0.0;
  double rydberg_alpha = 0.0;  // NaN unless the master equation runs
  double rydberg_T = 0.0;
};

struct Bookkeeping {
  double evaporated = 0.0;
  double ejected = 0.0;
  double captured = 0.0;
  double reionized = 0.0;
  double truncated = 0.0;  // lost when the top of phase space shrinks during recoupling
};

struct RunRecord {
  std::string scenario_hash;
  std::vector<Snapshot> snapshots;
  std::vector<std::filesystem::path> files;
  Bookkeeping totals{};
  double N_e_initial = 0.0;
  double N_e_final = 0.0;

  // |Delta N_e + losses - gains| / N_e_initial
  [[nodiscard]] double bookkeeping_error() const;
};

struct RunOutput {
  std::filesystem::path dir;
  OutputFormat format = OutputFormat::csv;
  bool write_profiles = true;
};

// Runs the scenario.  With an output, snapshots are appended as they are taken
// (snapshots.csv or snapshots.jsonl), profiles go to profile_<k>, and record.json
// summarizes the run at the end.
RunRecord run(const Scenario& scenario, const RunOutput* output = nullptr);

Table snapshot_table(const RunRecord& record);

struct SweepEntry {
  std::string name;
  std::optional<RunRecord> record;
  std::string error;  // empty on success
};
// Each scenario writes to out_dir/<index>_<name>.  threads = 0 uses the hardware count.
std::vector<SweepEntry> sweep(const std::vector<Scenario>& scenarios, const std::filesystem::path& out_dir,
                              OutputFormat format, unsigned threads = 0);

// Dataset names: nb_ion, spike, king_vs_mc, simp_king, thr_test, mk_test.
std::vector<std::string> figure_names();
std::vector<std::filesystem::path> reproduce_figure(std::string_view name, const Scenario& base,
                                                    const std::filesystem::path& out_dir, OutputFormat format);

}  // namespace ucp
