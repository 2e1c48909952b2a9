#pragma once

// Verification runs: a serializable run configuration, the acceptance suite
// behind `verify-all` with one CSV and one JSON verdict entry per criterion,
// and the export of log-log decay datasets.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dhs/decay.hpp"
#include "dhs/multiplier.hpp"

namespace dhs {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string command = "verify-all";
  std::uint64_t seed = 1;
  /// 0 selects hardware concurrency. Outputs do not depend on it.
  unsigned threads = 0;
  /// Empty: $DHS_OUTPUT_DIR, else "dhs_output".
  std::string output_dir;
  /// Directory of an earlier run whose CSV files must be reproduced byte for byte.
  std::string reference_dir;
  /// Criteria to run; empty runs all eight.
  std::vector<int> criteria;

  // Kernel identities.
  double heat_t_min = 1e-3;
  double heat_t_max = 1e3;
  int heat_t_count = 60;
  int heat_n_count = 50;
  std::vector<double> semigroup_times{0.1, 1.0, 10.0};
  std::int64_t semigroup_n = 20;
  std::vector<double> symbol_times{0.01, 1.0, 30.0, 300.0};
  double mass_tol = 1e-10;
  double heat_residual_tol = 1e-10;
  double semigroup_tol = 1e-9;
  double symbol_tol = 1e-8;
  double symbol_truncation = 1e-10;

  // Representation consistency.
  int parts_k_max = 6;
  std::vector<std::int64_t> parts_m{1, 2, 5, 20};
  std::vector<double> parts_t{0.1, 1.0, 10.0};
  double parts_tol = 1e-8;

  // Decay exponents.
  double decay_x_min = 8.0;
  double decay_x_max = 512.0;
  int points_per_octave = 4;
  ZSampling sampling = ZSampling::half_integer;
  double slope_tol = 0.2;
  TimeSampling time;

  // Uniformity.
  double uniform_x_min = 1.0;
  double uniform_x_max = 512.0;
  int uniform_k_max = 4;
  double uniformity_ratio = 3.0;

  // Atom sweeps.
  std::vector<double> sweep_p{0.4, 0.5, 0.75, 1.0};
  std::vector<double> radii{1.0, 4.0, 16.0, 64.0};
  int atoms = 50;
  Profile profile = Profile::exp;
  double sweep_ratio = 5.0;
  double trend_tol = 0.25;
  /// Grid of the point-mass probe of the maximal operator, "min:max:count".
  std::string t_grid = "1e-6:1e4:601";
  double refinement_tol = 1e-3;

  // Multipliers.
  std::vector<Profile> path_profiles{Profile::one, Profile::exp, Profile::indicator, Profile::logsign};
  int path_sequences = 20;
  std::int64_t path_support = 48;
  double path_tol = 1e-7;

  // Oracle equivalence.
  std::int64_t bessel_n_max = 64;
  std::vector<double> bessel_x{0.1, 1.0, 10.0, 100.0};
  double bessel_tol = 1e-11;
  int derivative_k_max = 8;
  std::vector<double> derivative_t{0.5, 1.0, 4.0};
  std::vector<double> derivative_theta{0.4, 1.0, 2.0, 2.9};
  double derivative_tol = 1e-4;

  /// Runtime budgets in seconds, criteria 1..7 and the whole run.
  std::vector<double> budgets{30.0, 60.0, 300.0, 180.0, 300.0, 300.0, 60.0, 900.0};

  std::string resolved_output_dir() const;
};

/// Pretty-printed JSON of every field.
std::string run_config_to_json(const RunConfig& cfg);
/// Fields missing from the text keep their defaults. Unknown keys, wrong types
/// and malformed JSON throw ConfigError.
RunConfig run_config_from_json(const std::string& text);
RunConfig load_run_config(const std::string& path);

enum class Verdict { pass, fail, flagged };
std::string verdict_name(Verdict v);

struct ItemResult {
  std::string label;
  Verdict verdict = Verdict::pass;
  std::string classification;
  std::map<std::string, double> measured;
};

struct CriterionResult {
  int id = 0;
  std::string title;
  Verdict verdict = Verdict::pass;
  double seconds = 0.0;
  double budget = 0.0;
  std::string csv;
  std::map<std::string, double> measured;
  std::vector<ItemResult> items;
  std::vector<std::string> warnings;
};

/// fail if any item fails or the budget is exceeded, else flagged if any item
/// is flagged, else pass.
Verdict combine_verdicts(const std::vector<ItemResult>& items);

/// Runs criterion id (1..7) and writes its CSV rows to csv.
CriterionResult run_criterion(int id, const RunConfig& cfg, std::ostream& csv);

struct RunReport {
  RunConfig config;
  std::vector<CriterionResult> criteria;
  double seconds = 0.0;
  /// 0 iff every criterion passes.
  int exit_code() const;
};

/// Runs the selected criteria into cfg.resolved_output_dir(): criterionN.csv
/// for each and verdict.json. Criterion 8 covers the total time and, with a
/// reference directory, byte equality of the CSV files. Progress lines go to log.
RunReport verify_all(const RunConfig& cfg, std::ostream* log = nullptr);

void write_verdict_json(std::ostream& out, const RunReport& report);

std::uint64_t fnv1a(std::string_view bytes);

/// Reads criterion3.csv and verdict.json of a run directory and writes one
/// "x,value,fit" file per decay dataset into out_dir, with fit the reported
/// power law. Returns the written paths. Throws std::runtime_error when the run
/// directory or its files are missing.
std::vector<std::string> export_plots(const std::string& run_dir, const std::string& out_dir);

}  // namespace dhs
