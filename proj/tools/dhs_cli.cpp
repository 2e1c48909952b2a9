#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "dhs/decay.hpp"
#include "dhs/grid.hpp"
#include "dhs/hardy.hpp"
#include "dhs/harness.hpp"
#include "dhs/operators.hpp"
#include "dhs/parallel.hpp"
#include "dhs/sequence.hpp"

using namespace dhs;
using json = nlohmann::ordered_json;

namespace {

struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Sequence load(const std::string& path) {
  try {
    return read_sequence_file(path);
  } catch (const ParseError& e) {
    throw InputError(path + ": " + e.what());
  }
}

json fit_json(const LogLogFit& f) {
  return json{{"slope", f.slope}, {"intercept", f.intercept}, {"slope_ci", f.slope_ci}, {"points", f.points}};
}

json sweep_summary(const SweepReport& r) {
  std::size_t flagged = 0;
  for (const auto& a : r.atoms) flagged += a.flagged;
  json j{{"op", sweep_operator_name(r.config.op)},
         {"p", r.config.p},
         {"count", r.config.count},
         {"radii", r.config.radii},
         {"seed", r.config.seed},
         {"max_total", r.max_total},
         {"median_total", r.median_total},
         {"trend", fit_json(r.trend)},
         {"near_bound_holds", r.near_bound_holds},
         {"flagged_atoms", flagged},
         {"flagged", r.flagged}};
  if (r.config.op == SweepOperator::mult) {
    j["profile"] = profile_name(r.config.profile);
    j["moments_vanish"] = r.moments_vanish;
    j["max_molecule"] = r.max_molecule;
    j["median_molecule"] = r.median_molecule;
    j["molecule_trend"] = fit_json(r.molecule_trend);
  }
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discrete heat semigroup and Hardy space verification tools"};
  app.require_subcommand(1);
  unsigned threads = 0;
  app.add_option("--threads", threads, "Worker threads (0: all cores)");

  // verify-all
  auto* verify = app.add_subcommand("verify-all", "Run the acceptance suite and write CSV files and verdict.json");
  std::string config_path, output_dir, reference_dir;
  std::vector<int> criteria;
  std::uint64_t seed = 0;
  bool dump_config = false;
  verify->add_option("--config", config_path, "RunConfig JSON file")->check(CLI::ExistingFile);
  verify->add_option("--output", output_dir, "Output directory (default: $DHS_OUTPUT_DIR, else dhs_output)");
  verify->add_option("--reference", reference_dir, "Earlier run directory the CSV files must reproduce");
  verify->add_option("--criteria", criteria, "Criteria to run")->delimiter(',');
  auto* seed_opt = verify->add_option("--seed", seed, "Random seed");
  verify->add_flag("--dump-config", dump_config, "Print the effective config and exit");

  // single operators
  std::string input;
  double t = 1.0;
  auto* heat = app.add_subcommand("heat", "Apply W_t to a sequence");
  heat->add_option("input", input, "Sequence file")->required();
  heat->add_option("--t", t, "Time")->required();

  std::string t_grid = "1e-6:1e4:601";
  auto* max_cmd = app.add_subcommand("maximal", "Heat maximal operator over a log t grid");
  max_cmd->add_option("input", input, "Sequence file")->required();
  max_cmd->add_option("--t-grid", t_grid, "min:max:count");

  std::string g_grid;
  auto* g_cmd = app.add_subcommand("gfun", "Littlewood-Paley g-function");
  g_cmd->add_option("input", input, "Sequence file")->required();
  g_cmd->add_option("--u-grid", g_grid, "u_min:u_max:count in u = log t");

  double p = 2.0;
  std::int64_t margin = 0;
  auto* hil = app.add_subcommand("hilbert", "Discrete Hilbert transform");
  hil->add_option("input", input, "Sequence file")->required();
  hil->add_option("--p", p, "Exponent of the tail bound");
  hil->add_option("--margin", margin, "Output window beyond the support");

  std::string psi = "exp", path = "kernel";
  auto* mult_cmd = app.add_subcommand("mult", "Laplace transform type multiplier");
  mult_cmd->add_option("input", input, "Sequence file")->required();
  mult_cmd->add_option("--psi", psi, "one|exp|indicator|logsign");
  mult_cmd->add_option("--path", path, "fourier|kernel|both");
  mult_cmd->add_option("--margin", margin, "Output window beyond the support");

  // atoms
  auto* atoms = app.add_subcommand("atoms", "Random atom sweeps and atom validation");
  atoms->require_subcommand(1);
  auto* sweep_cmd = atoms->add_subcommand("sweep", "Operator norms over random atoms (CSV on stdout)");
  std::string op = "maximal", summary_path;
  std::vector<double> radii{1.0, 4.0, 16.0, 64.0};
  int count = 50;
  std::uint64_t sweep_seed = 1;
  double sweep_p = 1.0;
  sweep_cmd->add_option("--op", op, "maximal|gfun|mult");
  sweep_cmd->add_option("--p", sweep_p, "Atom exponent in (0, 1]");
  sweep_cmd->add_option("--r0", radii, "Radii")->delimiter(',');
  sweep_cmd->add_option("--count", count, "Atoms per radius");
  sweep_cmd->add_option("--seed", sweep_seed, "Random seed");
  sweep_cmd->add_option("--psi", psi, "Multiplier profile for --op mult");
  sweep_cmd->add_option("--summary", summary_path, "Write the JSON summary here instead of stderr");

  auto* validate = atoms->add_subcommand("validate", "Check the atom conditions of a sequence file");
  double q = 2.0, radius = 0.0;
  std::int64_t center = 0;
  std::string flavor = "hardy";
  validate->add_option("input", input, "Sequence file")->required();
  validate->add_option("--p", p, "Atom exponent in (0, 1]")->required();
  validate->add_option("--q", q, "Size exponent (inf allowed)");
  auto* center_opt = validate->add_option("--center", center, "Ball center (default: middle of the support)");
  validate->add_option("--radius", radius, "Ball radius (default: half the support width)");
  validate->add_option("--flavor", flavor, "plain|hardy");

  // decay
  auto* decay = app.add_subcommand("decay", "Decay check of one kernel quantity (CSV on stdout)");
  std::string kind, sampling = "half_integer";
  DecayParams dp;
  decay->add_option("kind", kind, "eq31 eq32 eq41 eq42 eq33 eq43 eq44 eq52 eq53 hna hnb hnc")->required();
  decay->add_option("--k", dp.k, "Derivative order");
  decay->add_option("--n", dp.n, "Family index of hna/hnb/hnc");
  decay->add_option("--psi", psi, "Profile of eq44/eq52/eq53/hnc");
  decay->add_option("--x-min", dp.x_min);
  decay->add_option("--x-max", dp.x_max);
  decay->add_option("--sampling", sampling, "geometric|integer|half_integer");

  // export-plots
  auto* export_cmd = app.add_subcommand("export-plots", "Write x,value,fit CSV files for the decay datasets of a run");
  std::string run_dir, out_dir;
  export_cmd->add_option("--run", run_dir, "Run directory (default: $DHS_OUTPUT_DIR, else dhs_output)");
  export_cmd->add_option("--out", out_dir, "Destination (default: RUN/plots)");

  CLI11_PARSE(app, argc, argv);
  set_thread_count(threads);

  try {
    if (*verify) {
      RunConfig cfg = config_path.empty() ? RunConfig{} : load_run_config(config_path);
      cfg.threads = threads ? threads : cfg.threads;
      if (!output_dir.empty()) cfg.output_dir = output_dir;
      if (!reference_dir.empty()) cfg.reference_dir = reference_dir;
      if (!criteria.empty()) cfg.criteria = criteria;
      if (seed_opt->count()) cfg.seed = seed;
      if (dump_config) {
        std::cout << run_config_to_json(cfg) << '\n';
        return 0;
      }
      const auto report = verify_all(cfg, &std::cerr);
      for (const auto& c : report.criteria)
        std::cout << "criterion " << c.id << " " << verdict_name(c.verdict) << "  " << c.title << '\n';
      std::cout << "verdict: " << cfg.resolved_output_dir() << "/verdict.json\n";
      return report.exit_code();
    }
    if (*heat) {
      write_sequence(std::cout, heat_apply(load(input), t));
      return 0;
    }
    if (*max_cmd) {
      OperatorConfig cfg;
      cfg.t_grid = parse_log_grid(t_grid);
      const auto r = maximal(load(input), cfg);
      if (r.refinement_delta > 1e-3)
        std::cerr << "warning: t grid " << t_grid << " needs refinement (refinement delta " << r.refinement_delta
                  << ")\n";
      write_sequence(std::cout, r.value);
      return 0;
    }
    if (*g_cmd) {
      OperatorConfig cfg;
      if (!g_grid.empty()) {
        const auto a = g_grid.find(':'), b = g_grid.rfind(':');
        if (a == std::string::npos || a == b) throw std::invalid_argument("--u-grid needs u_min:u_max:count");
        cfg.g_grid = {std::stod(g_grid.substr(0, a)), std::stod(g_grid.substr(a + 1, b - a - 1)),
                      static_cast<std::size_t>(std::stoul(g_grid.substr(b + 1)))};
      }
      const auto r = g_function(load(input), cfg);
      if (r.flagged) std::cerr << "warning: g-function tail not resolved on the support (tail " << r.tail << ")\n";
      write_sequence(std::cout, r.value);
      return r.flagged ? 1 : 0;
    }
    if (*hil) {
      const auto r = hilbert(load(input), p, margin);
      std::cerr << "margin " << r.margin << ", vanishing moments " << r.vanishing_moments << ", p-tail bound " << r.tail
                << '\n';
      write_sequence(std::cout, r.value);
      return 0;
    }
    if (*mult_cmd) {
      const LaplaceMultiplier mult(parse_profile(psi));
      const auto f = load(input);
      MultiplierOptions opts;
      opts.margin = margin;
      if (path == "both") {
        const auto a = multiplier_apply(f, mult, MultiplierPath::fourier, opts);
        const auto b = multiplier_apply(f, mult, MultiplierPath::kernel, opts);
        const double scale = lp_quasinorm(b.value, 2.0);
        std::cerr << "fourier vs kernel: relative l2 difference "
                  << (scale > 0 ? lp_quasinorm(a.value - b.value, 2.0) / scale : 0.0) << '\n';
        write_sequence(std::cout, b.value);
        return a.flagged || b.flagged ? 1 : 0;
      }
      const auto r = multiplier_apply(f, mult, parse_multiplier_path(path), opts);
      if (r.flagged) std::cerr << "warning: multiplier error estimate " << r.error << " not certified\n";
      write_sequence(std::cout, r.value);
      return r.flagged ? 1 : 0;
    }
    if (*sweep_cmd) {
      SweepConfig cfg;
      cfg.op = parse_sweep_operator(op);
      cfg.p = sweep_p;
      cfg.count = count;
      cfg.radii = radii;
      cfg.seed = sweep_seed;
      cfg.profile = parse_profile(psi);
      const auto r = atom_operator_sweep(cfg);
      write_sweep_csv(std::cout, r);
      const std::string summary = sweep_summary(r).dump(2) + "\n";
      if (summary_path.empty()) {
        std::cerr << summary;
      } else {
        std::ofstream out(summary_path);
        out << summary;
      }
      return r.flagged ? 1 : 0;
    }
    if (*validate) {
      Atom atom;
      atom.values = load(input);
      atom.p = p;
      atom.q = q;
      atom.flavor = parse_atom_flavor(flavor);
      if (atom.values.empty()) throw InputError(input + ": empty sequence");
      atom.center = center_opt->count() ? center : (atom.values.first() + atom.values.last()) / 2;
      atom.radius = radius > 0.0 ? radius
                                 : std::max<double>(1.0, static_cast<double>(std::max(atom.values.last() - atom.center,
                                                                                      atom.center - atom.values.first())));
      const auto v = validate_atom(atom);
      json conditions = json::array();
      for (const auto& c : v.conditions)
        conditions.push_back(json{{"name", c.name}, {"ok", c.ok}, {"measured", c.measured}, {"bound", c.bound}});
      std::cout << json{{"valid", v.valid}, {"center", atom.center}, {"radius", atom.radius}, {"conditions", conditions}}
                       .dump(2)
                << '\n';
      return v.valid ? 0 : 1;
    }
    if (*decay) {
      dp.profile = parse_profile(psi);
      dp.sampling = parse_z_sampling(sampling);
      const auto r = verify_decay_suite(parse_decay_kind(kind), dp);
      write_decay_csv(std::cout, r);
      std::cerr << r.label << ": slope " << r.fit.slope << " +- " << r.fit.slope_ci << " (claimed "
                << r.claimed_exponent << "), max/median ratio " << r.max_ratio / r.median_ratio
                << (r.flagged ? ", flagged" : "") << '\n';
      return r.flagged ? 1 : 0;
    }
    if (*export_cmd) {
      if (run_dir.empty()) run_dir = RunConfig{}.resolved_output_dir();
      if (out_dir.empty()) out_dir = run_dir + "/plots";
      for (const auto& path_out : export_plots(run_dir, out_dir)) std::cout << path_out << '\n';
      return 0;
    }
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
