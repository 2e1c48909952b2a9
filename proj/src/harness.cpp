#include "dhs/harness.hpp"

#include <quadmath.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

#include "dhs/bessel.hpp"
#include "dhs/faa_di_bruno.hpp"
#include "dhs/grid.hpp"
#include "dhs/hardy.hpp"
#include "dhs/kernel_analysis.hpp"
#include "dhs/operators.hpp"
#include "dhs/parallel.hpp"
#include "dhs/sequence.hpp"

namespace dhs {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// ---------------------------------------------------------------- config JSON

json time_to_json(const TimeSampling& t) {
  return json{{"t_min", t.t_min},         {"t_max_factor", t.t_max_factor}, {"per_decade", t.per_decade},
              {"u_min", t.u_min},         {"dz_span", t.dz_span},           {"moment_span", t.moment_span},
              {"order", t.order},         {"panel", t.panel}};
}

json config_to_json(const RunConfig& c) {
  std::vector<std::string> profiles;
  for (auto p : c.path_profiles) profiles.push_back(profile_name(p));
  json j;
  j["command"] = c.command;
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  j["output_dir"] = c.output_dir;
  j["reference_dir"] = c.reference_dir;
  j["criteria"] = c.criteria;
  j["heat_t_min"] = c.heat_t_min;
  j["heat_t_max"] = c.heat_t_max;
  j["heat_t_count"] = c.heat_t_count;
  j["heat_n_count"] = c.heat_n_count;
  j["semigroup_times"] = c.semigroup_times;
  j["semigroup_n"] = c.semigroup_n;
  j["symbol_times"] = c.symbol_times;
  j["mass_tol"] = c.mass_tol;
  j["heat_residual_tol"] = c.heat_residual_tol;
  j["semigroup_tol"] = c.semigroup_tol;
  j["symbol_tol"] = c.symbol_tol;
  j["symbol_truncation"] = c.symbol_truncation;
  j["parts_k_max"] = c.parts_k_max;
  j["parts_m"] = c.parts_m;
  j["parts_t"] = c.parts_t;
  j["parts_tol"] = c.parts_tol;
  j["decay_x_min"] = c.decay_x_min;
  j["decay_x_max"] = c.decay_x_max;
  j["points_per_octave"] = c.points_per_octave;
  j["sampling"] = z_sampling_name(c.sampling);
  j["slope_tol"] = c.slope_tol;
  j["time"] = time_to_json(c.time);
  j["uniform_x_min"] = c.uniform_x_min;
  j["uniform_x_max"] = c.uniform_x_max;
  j["uniform_k_max"] = c.uniform_k_max;
  j["uniformity_ratio"] = c.uniformity_ratio;
  j["sweep_p"] = c.sweep_p;
  j["radii"] = c.radii;
  j["atoms"] = c.atoms;
  j["profile"] = profile_name(c.profile);
  j["sweep_ratio"] = c.sweep_ratio;
  j["trend_tol"] = c.trend_tol;
  j["t_grid"] = c.t_grid;
  j["refinement_tol"] = c.refinement_tol;
  j["path_profiles"] = profiles;
  j["path_sequences"] = c.path_sequences;
  j["path_support"] = c.path_support;
  j["path_tol"] = c.path_tol;
  j["bessel_n_max"] = c.bessel_n_max;
  j["bessel_x"] = c.bessel_x;
  j["bessel_tol"] = c.bessel_tol;
  j["derivative_k_max"] = c.derivative_k_max;
  j["derivative_t"] = c.derivative_t;
  j["derivative_theta"] = c.derivative_theta;
  j["derivative_tol"] = c.derivative_tol;
  j["budgets"] = c.budgets;
  return j;
}

template <class T>
void read(const json& j, const char* key, T& field) {
  if (!j.contains(key)) return;
  try {
    field = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

void check_keys(const json& j, const json& reference, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, value] : j.items())
    if (!reference.contains(key)) throw ConfigError("unknown config key '" + where + key + "'");
}

RunConfig config_from_json(const json& j) {
  RunConfig c;
  const json defaults = config_to_json(c);
  check_keys(j, defaults, "");
  read(j, "command", c.command);
  read(j, "seed", c.seed);
  read(j, "threads", c.threads);
  read(j, "output_dir", c.output_dir);
  read(j, "reference_dir", c.reference_dir);
  read(j, "criteria", c.criteria);
  read(j, "heat_t_min", c.heat_t_min);
  read(j, "heat_t_max", c.heat_t_max);
  read(j, "heat_t_count", c.heat_t_count);
  read(j, "heat_n_count", c.heat_n_count);
  read(j, "semigroup_times", c.semigroup_times);
  read(j, "semigroup_n", c.semigroup_n);
  read(j, "symbol_times", c.symbol_times);
  read(j, "mass_tol", c.mass_tol);
  read(j, "heat_residual_tol", c.heat_residual_tol);
  read(j, "semigroup_tol", c.semigroup_tol);
  read(j, "symbol_tol", c.symbol_tol);
  read(j, "symbol_truncation", c.symbol_truncation);
  read(j, "parts_k_max", c.parts_k_max);
  read(j, "parts_m", c.parts_m);
  read(j, "parts_t", c.parts_t);
  read(j, "parts_tol", c.parts_tol);
  read(j, "decay_x_min", c.decay_x_min);
  read(j, "decay_x_max", c.decay_x_max);
  read(j, "points_per_octave", c.points_per_octave);
  read(j, "slope_tol", c.slope_tol);
  read(j, "uniform_x_min", c.uniform_x_min);
  read(j, "uniform_x_max", c.uniform_x_max);
  read(j, "uniform_k_max", c.uniform_k_max);
  read(j, "uniformity_ratio", c.uniformity_ratio);
  read(j, "sweep_p", c.sweep_p);
  read(j, "radii", c.radii);
  read(j, "atoms", c.atoms);
  read(j, "sweep_ratio", c.sweep_ratio);
  read(j, "trend_tol", c.trend_tol);
  read(j, "t_grid", c.t_grid);
  read(j, "refinement_tol", c.refinement_tol);
  read(j, "path_sequences", c.path_sequences);
  read(j, "path_support", c.path_support);
  read(j, "path_tol", c.path_tol);
  read(j, "bessel_n_max", c.bessel_n_max);
  read(j, "bessel_x", c.bessel_x);
  read(j, "bessel_tol", c.bessel_tol);
  read(j, "derivative_k_max", c.derivative_k_max);
  read(j, "derivative_t", c.derivative_t);
  read(j, "derivative_theta", c.derivative_theta);
  read(j, "derivative_tol", c.derivative_tol);
  read(j, "budgets", c.budgets);
  try {
    if (j.contains("sampling")) c.sampling = parse_z_sampling(j.at("sampling").get<std::string>());
    if (j.contains("profile")) c.profile = parse_profile(j.at("profile").get<std::string>());
    if (j.contains("path_profiles")) {
      c.path_profiles.clear();
      for (const auto& name : j.at("path_profiles")) c.path_profiles.push_back(parse_profile(name.get<std::string>()));
    }
    if (j.contains("t_grid")) parse_log_grid(c.t_grid);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (j.contains("time")) {
    const json& t = j.at("time");
    check_keys(t, defaults.at("time"), "time.");
    read(t, "t_min", c.time.t_min);
    read(t, "t_max_factor", c.time.t_max_factor);
    read(t, "per_decade", c.time.per_decade);
    read(t, "u_min", c.time.u_min);
    read(t, "dz_span", c.time.dz_span);
    read(t, "moment_span", c.time.moment_span);
    read(t, "order", c.time.order);
    read(t, "panel", c.time.panel);
  }
  if (c.budgets.size() != 8) throw ConfigError("config key 'budgets' needs 8 entries");
  for (int id : c.criteria)
    if (id < 1 || id > 8) throw ConfigError("config key 'criteria': " + std::to_string(id) + " is not in 1..8");
  return c;
}

// ------------------------------------------------------------------- verdicts

ItemResult item(std::string label, bool ok, std::string classification = {}) {
  ItemResult r;
  r.label = std::move(label);
  r.verdict = ok ? Verdict::pass : Verdict::fail;
  r.classification = std::move(classification);
  return r;
}

ItemResult tolerance_item(std::string label, double worst, double tol) {
  const bool ok = worst < tol;
  ItemResult r = item(std::move(label), ok, ok ? "within tolerance" : "exceeds tolerance");
  r.measured = {{"max_error", worst}, {"tolerance", tol}};
  return r;
}

// -------------------------------------------------------- 1: kernel identities

CriterionResult heat_identities(const RunConfig& cfg, std::ostream& csv) {
  CriterionResult res;
  res.title = "heat kernel identities";
  csv << "check,n,t,s,error\n";

  const auto times = log_grid(cfg.heat_t_min, cfg.heat_t_max, static_cast<std::size_t>(std::max(cfg.heat_t_count, 0)));
  double mass = 0.0;
  for (double t : times) {
    const auto radius = heat_kernel_radius(t, 1e-15);
    const auto row = heat_kernel_row(radius, t);
    double sum = 0.0;
    for (std::int64_t n = radius; n >= 1; --n) sum += 2.0 * row[static_cast<std::size_t>(n)];
    const double err = std::abs(sum + row[0] - 1.0);
    mass = std::max(mass, err);
    csv << "mass,," << num(t) << ",," << num(err) << '\n';
  }
  res.items.push_back(tolerance_item("mass conservation", mass, cfg.mass_tol));

  double residual = 0.0;
  const std::int64_t n_count = std::max(cfg.heat_n_count, 0);
  if (n_count > 0) {
    for (double t : times) {
      const auto g = heat_kernel_row(n_count, t);
      const auto dg = heat_kernel_dt_row(n_count - 1, t);
      for (std::int64_t n = 0; n < n_count; ++n) {
        const double lap = g[static_cast<std::size_t>(std::abs(n - 1))] + g[static_cast<std::size_t>(n + 1)] -
                           2.0 * g[static_cast<std::size_t>(n)];
        const double err = std::abs(dg[static_cast<std::size_t>(n)] - lap);
        residual = std::max(residual, err);
        csv << "heat_equation," << n << ',' << num(t) << ",," << num(err) << '\n';
      }
    }
  }
  res.items.push_back(tolerance_item("heat equation residual", residual, cfg.heat_residual_tol));

  auto full_row = [](double t) {
    const auto r = heat_kernel_radius(t, 1e-15);
    const auto half = heat_kernel_row(r, t);
    std::vector<cplx> full(static_cast<std::size_t>(2 * r + 1));
    for (std::int64_t n = -r; n <= r; ++n) full[static_cast<std::size_t>(n + r)] = half[static_cast<std::size_t>(std::abs(n))];
    return Sequence(-r, std::move(full));
  };
  double semigroup = 0.0;
  for (double s : cfg.semigroup_times)
    for (double t : cfg.semigroup_times) {
      const auto conv = convolve(full_row(s), full_row(t));
      double err = 0.0;
      for (std::int64_t n = -cfg.semigroup_n; n <= cfg.semigroup_n; ++n)
        err = std::max(err, std::abs(conv[n] - heat_kernel(n, s + t)));
      semigroup = std::max(semigroup, err);
      csv << "semigroup,," << num(t) << ',' << num(s) << ',' << num(err) << '\n';
    }
  res.items.push_back(tolerance_item("semigroup law", semigroup, cfg.semigroup_tol));

  double symbol = 0.0;
  bool truncated = true;
  for (double t : cfg.symbol_times) {
    const auto r = heat_kernel_radius(t, cfg.symbol_truncation);
    truncated = truncated && heat_kernel_tail_bound(r, t) <= cfg.symbol_truncation;
    const auto half = heat_kernel_row(r, t);
    std::vector<cplx> full(static_cast<std::size_t>(2 * r + 1));
    for (std::int64_t n = -r; n <= r; ++n) full[static_cast<std::size_t>(n + r)] = half[static_cast<std::size_t>(std::abs(n))];
    const Sequence g(-r, std::move(full));
    const auto grid = TorusGrid::for_support(g.size());
    const auto values = fourier(g, grid);
    double err = 0.0;
    for (std::size_t j = 0; j < grid.size; ++j)
      err = std::max(err, std::abs(values[j] - torus_profile(t, grid.theta(j))));
    symbol = std::max(symbol, err);
    csv << "symbol,," << num(t) << ",," << num(err) << '\n';
  }
  auto sym = tolerance_item("torus symbol", symbol, cfg.symbol_tol);
  if (!truncated) {
    sym.verdict = Verdict::flagged;
    sym.classification = "truncation tail above its bound";
  }
  res.items.push_back(sym);
  res.measured = {{"mass", mass}, {"heat_residual", residual}, {"semigroup", semigroup}, {"symbol", symbol}};
  return res;
}

// ------------------------------------------------ 2: representation consistency

CriterionResult representation(const RunConfig& cfg, std::ostream& csv) {
  CriterionResult res;
  res.title = "integration by parts representation";
  csv << "k,m,t,value,reference,error\n";
  struct Point {
    int k;
    std::int64_t m;
    double t;
  };
  std::vector<Point> points;
  for (int k = 1; k <= cfg.parts_k_max; ++k)
    for (auto m : cfg.parts_m)
      for (double t : cfg.parts_t) points.push_back({k, m, t});
  std::vector<QuadResult> values(points.size());
  parallel_for(points.size(), [&](std::size_t i) { values[i] = kernel_via_parts(points[i].k, points[i].m, points[i].t); });

  double worst = 0.0;
  bool converged = true;
  for (int k = 1; k <= cfg.parts_k_max; ++k) {
    double err_k = 0.0;
    bool conv_k = true;
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (points[i].k != k) continue;
      const double ref = heat_kernel(points[i].m, points[i].t);
      const double err = std::abs(values[i].value - ref);
      err_k = std::max(err_k, err);
      conv_k = conv_k && values[i].converged;
      csv << k << ',' << points[i].m << ',' << num(points[i].t) << ',' << num(values[i].value) << ',' << num(ref) << ','
          << num(err) << '\n';
    }
    auto it = tolerance_item("k=" + std::to_string(k), err_k, cfg.parts_tol);
    if (!conv_k) {
      it.verdict = Verdict::flagged;
      it.classification = "quadrature not converged";
    }
    res.items.push_back(it);
    worst = std::max(worst, err_k);
    converged = converged && conv_k;
  }
  res.measured = {{"max_error", worst}, {"converged", converged ? 1.0 : 0.0}};
  return res;
}

// ------------------------------------------------------------ 3 and 4: decay

struct DecayItem {
  DecayKind kind;
  int k = 0;
  int n = 0;
  Profile profile = Profile::one;
};

std::vector<DecayItem> decay_items() {
  std::vector<DecayItem> items;
  for (auto kind : {DecayKind::eq31, DecayKind::eq32, DecayKind::eq41, DecayKind::eq42}) items.push_back({kind});
  for (int k = 1; k <= 3; ++k) items.push_back({DecayKind::eq33, k});
  for (int k = 0; k <= 2; ++k) items.push_back({DecayKind::eq43, k});
  for (int k = 0; k <= 2; ++k)
    for (auto p : {Profile::one, Profile::exp, Profile::logsign}) items.push_back({DecayKind::eq44, k, 0, p});
  for (auto kind : {DecayKind::eq52, DecayKind::eq53})
    for (auto p : {Profile::one, Profile::exp, Profile::logsign}) items.push_back({kind, 0, 0, p});
  return items;
}

std::vector<DecayItem> uniformity_items(int k_max) {
  std::vector<DecayItem> items;
  for (int k = 1; k <= k_max; ++k)
    for (int n = 0; n <= k; ++n) {
      items.push_back({DecayKind::hna, k, n});
      items.push_back({DecayKind::hnb, k, n});
      for (auto p : {Profile::one, Profile::exp, Profile::logsign}) items.push_back({DecayKind::hnc, k, n, p});
    }
  return items;
}

// Same labels as verify_decay_suite, for items that are not evaluated.
std::string decay_label(const DecayItem& it) {
  const std::string k = " k=" + std::to_string(it.k), n = " n=" + std::to_string(it.n),
                    psi = " psi=" + profile_name(it.profile);
  std::string suffix;
  switch (it.kind) {
    case DecayKind::eq33:
    case DecayKind::eq43: suffix = k; break;
    case DecayKind::eq44: suffix = k + psi; break;
    case DecayKind::eq52:
    case DecayKind::eq53: suffix = psi; break;
    case DecayKind::hna:
    case DecayKind::hnb: suffix = n + k; break;
    case DecayKind::hnc: suffix = n + k + psi; break;
    default: break;
  }
  return decay_kind_name(it.kind) + suffix;
}

std::map<std::string, double> decay_measured(const DecayReport& r) {
  return {{"slope", r.fit.slope},
          {"slope_ci", r.fit.slope_ci},
          {"intercept", r.fit.intercept},
          {"claimed_exponent", r.claimed_exponent},
          {"max_ratio", r.max_ratio},
          {"median_ratio", r.median_ratio},
          {"cancellation", r.cancellation},
          {"points", static_cast<double>(r.samples.size())}};
}

std::vector<DecayReport> run_decay_items(const std::vector<DecayItem>& items, const RunConfig& cfg, double x_min,
                                         double x_max, std::ostream& csv) {
  csv << "kind,x,value,claimed_rate,ratio\n";
  std::vector<DecayReport> reports;
  if (!(x_min > 0.0) || x_max < x_min) {
    for (const auto& it : items) {
      DecayReport r;
      r.kind = it.kind;
      r.label = decay_label(it);
      reports.push_back(r);
    }
    return reports;
  }
  DecayCache cache;
  for (const auto& it : items) {
    DecayParams p;
    p.x_min = x_min;
    p.x_max = x_max;
    p.points_per_octave = cfg.points_per_octave;
    p.sampling = cfg.sampling;
    p.k = it.k;
    p.n = it.n;
    p.profile = it.profile;
    p.time = cfg.time;
    reports.push_back(verify_decay_suite(it.kind, p, &cache));
    write_decay_csv(csv, reports.back(), false);
  }
  return reports;
}

CriterionResult decay_exponents(const RunConfig& cfg, std::ostream& csv) {
  CriterionResult res;
  res.title = "decay exponents";
  const auto reports = run_decay_items(decay_items(), cfg, cfg.decay_x_min, cfg.decay_x_max, csv);
  std::size_t passed = 0;
  double worst = 0.0;
  for (const auto& r : reports) {
    ItemResult it;
    it.label = r.label;
    it.measured = decay_measured(r);
    const double gap = r.fit.slope - r.claimed_exponent;
    if (r.samples.size() < 2) {
      it.verdict = Verdict::fail;
      it.classification = "empty range";
    } else if (r.flagged) {
      it.verdict = Verdict::flagged;
      it.classification = "tail or grid end not certified";
    } else if (r.cancellation < vanishing_cancellation) {
      it.verdict = Verdict::fail;
      it.classification = "vanishes identically; slope undefined";
    } else if (std::abs(gap) <= cfg.slope_tol) {
      it.verdict = Verdict::pass;
      it.classification = "slope within tolerance";
    } else if (gap < 0.0) {
      it.verdict = Verdict::fail;
      it.classification = "decays faster than claimed; bound satisfied";
    } else {
      it.verdict = Verdict::fail;
      it.classification = "decays slower than claimed";
    }
    if (it.verdict == Verdict::pass) ++passed;
    if (r.samples.size() >= 2 && r.cancellation >= vanishing_cancellation) worst = std::max(worst, std::abs(gap));
    res.items.push_back(it);
  }
  res.measured = {{"items", static_cast<double>(reports.size())},
                  {"passed", static_cast<double>(passed)},
                  {"max_slope_gap", worst}};
  return res;
}

CriterionResult uniformity(const RunConfig& cfg, std::ostream& csv) {
  CriterionResult res;
  res.title = "uniform bounds";
  const auto reports = run_decay_items(uniformity_items(cfg.uniform_k_max), cfg, cfg.uniform_x_min, cfg.uniform_x_max, csv);
  std::size_t passed = 0;
  double worst = 0.0;
  for (const auto& r : reports) {
    ItemResult it;
    it.label = r.label;
    it.measured = decay_measured(r);
    const double spread = r.median_ratio > 0.0 ? r.max_ratio / r.median_ratio : INFINITY;
    it.measured["max_over_median"] = spread;
    if (r.samples.empty()) {
      it.verdict = Verdict::fail;
      it.classification = "empty range";
    } else if (r.flagged) {
      it.verdict = Verdict::flagged;
      it.classification = "tail or grid end not certified";
    } else if (r.cancellation < vanishing_cancellation) {
      it.verdict = Verdict::pass;
      it.classification = "vanishes identically";
    } else if (spread <= cfg.uniformity_ratio) {
      it.verdict = Verdict::pass;
      it.classification = "bounded uniformly";
      worst = std::max(worst, spread);
    } else {
      it.verdict = Verdict::fail;
      const bool falling = r.samples.front().ratio >= r.max_ratio && r.fit.slope < r.claimed_exponent;
      it.classification = falling ? "decays faster than the bound; maximum at the smallest z" : "max above ratio times median";
      worst = std::max(worst, spread);
    }
    if (it.verdict == Verdict::pass) ++passed;
    res.items.push_back(it);
  }
  res.measured = {{"items", static_cast<double>(reports.size())},
                  {"passed", static_cast<double>(passed)},
                  {"max_over_median", worst}};
  return res;
}

// ----------------------------------------------------------- 5 and 6: sweeps

SweepReport sweep(const RunConfig& cfg, SweepOperator op, std::size_t p_index) {
  SweepConfig sc;
  sc.op = op;
  sc.p = cfg.sweep_p[p_index];
  sc.count = cfg.atoms;
  sc.radii = cfg.radii;
  // The same atoms for every operator at one p.
  sc.seed = derive_seed(cfg.seed, p_index);
  sc.profile = cfg.profile;
  return atom_operator_sweep(sc);
}

std::string p_label(double p) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "p=%g", p);
  return buf;
}

ItemResult sweep_item(const SweepReport& r, const RunConfig& cfg) {
  ItemResult it;
  it.label = sweep_operator_name(r.config.op) + " " + p_label(r.config.p);
  const double spread = r.median_total > 0.0 ? r.max_total / r.median_total : INFINITY;
  std::size_t flagged = 0;
  for (const auto& a : r.atoms) flagged += a.flagged;
  it.measured = {{"max_total", r.max_total},         {"median_total", r.median_total},
                 {"max_over_median", spread},        {"trend_slope", r.trend.slope},
                 {"trend_ci", r.trend.slope_ci},     {"flagged_atoms", static_cast<double>(flagged)},
                 {"near_bound_holds", r.near_bound_holds ? 1.0 : 0.0}};
  const bool bounded = spread <= cfg.sweep_ratio;
  const bool flat = std::abs(r.trend.slope) <= cfg.trend_tol;
  if (r.atoms.empty()) {
    it.verdict = Verdict::fail;
    it.classification = "no atoms";
  } else if (r.flagged) {
    it.verdict = Verdict::flagged;
    it.classification = "operator tail not certified";
  } else if (bounded && flat && r.near_bound_holds) {
    it.verdict = Verdict::pass;
    it.classification = "bounded, no radius trend";
  } else {
    it.verdict = Verdict::fail;
    it.classification = !bounded ? "max above ratio times median" : !flat ? "radius trend" : "near part above its bound";
  }
  return it;
}

void write_sweep_rows(std::ostream& csv, const SweepReport& r) {
  for (const auto& a : r.atoms)
    csv << sweep_operator_name(r.config.op) << ',' << num(r.config.p) << ',' << a.id << ',' << num(a.radius) << ','
        << num(a.near) << ',' << num(a.far) << ',' << num(a.total) << '\n';
}

CriterionResult atom_sweeps(const RunConfig& cfg, std::ostream& csv) {
  CriterionResult res;
  res.title = "maximal operator and g-function on atoms";
  csv << "op,p,atom_id,r0,near,far,total\n";
  double worst_spread = 0.0, worst_trend = 0.0;
  for (std::size_t pi = 0; pi < cfg.sweep_p.size(); ++pi)
    for (auto op : {SweepOperator::maximal, SweepOperator::gfun}) {
      const auto r = sweep(cfg, op, pi);
      write_sweep_rows(csv, r);
      res.items.push_back(sweep_item(r, cfg));
      worst_spread = std::max(worst_spread, res.items.back().measured["max_over_median"]);
      worst_trend = std::max(worst_trend, std::abs(r.trend.slope));
    }

  OperatorConfig probe;
  probe.t_grid = parse_log_grid(cfg.t_grid);
  const auto m = maximal(Sequence::delta(0), probe);
  const double at_origin = std::abs(m.value[0]);
  res.measured = {{"max_over_median", worst_spread},
                  {"max_abs_trend", worst_trend},
                  {"point_mass_maximal_at_0", at_origin},
                  {"refinement_delta", m.refinement_delta}};
  if (m.refinement_delta > cfg.refinement_tol) {
    char buf[200];
    std::snprintf(buf, sizeof buf, "t grid %s needs refinement: W_*(delta_0)(0) = %.6g, refinement delta %.3g",
                  cfg.t_grid.c_str(), at_origin, m.refinement_delta);
    res.warnings.push_back(buf);
  }
  return res;
}

std::vector<Sequence> random_sequences(const RunConfig& cfg) {
  std::mt19937_64 rng(derive_seed(cfg.seed, 1u << 20));
  std::uniform_int_distribution<std::int64_t> length(1, std::max<std::int64_t>(cfg.path_support, 1));
  std::uniform_int_distribution<std::int64_t> offset(-100, 100);
  std::normal_distribution<double> normal;
  std::vector<Sequence> out;
  for (int s = 0; s < cfg.path_sequences; ++s) {
    const auto len = length(rng);
    std::vector<double> v(static_cast<std::size_t>(len));
    for (auto& x : v) x = normal(rng);
    const auto off = offset(rng);
    out.push_back(Sequence::from_real(off, v));
  }
  return out;
}

CriterionResult multipliers(const RunConfig& cfg, std::ostream& csv) {
  CriterionResult res;
  res.title = "Laplace transform type multipliers";
  csv << "part,item,index,r0,value,bound\n";

  const auto seqs = random_sequences(cfg);
  double worst_path = 0.0;
  for (auto profile : cfg.path_profiles) {
    const LaplaceMultiplier mult(profile);
    const auto fourier_out = multiplier_apply_batch(seqs, mult, MultiplierPath::fourier);
    const auto kernel_out = multiplier_apply_batch(seqs, mult, MultiplierPath::kernel);
    double worst = 0.0;
    bool flagged = false;
    for (std::size_t s = 0; s < seqs.size(); ++s) {
      const double scale = lp_quasinorm(kernel_out[s].value, 2.0);
      const double diff = lp_quasinorm(fourier_out[s].value - kernel_out[s].value, 2.0);
      const double rel = scale > 0.0 ? diff / scale : diff;
      worst = std::max(worst, rel);
      flagged = flagged || fourier_out[s].flagged || kernel_out[s].flagged;
      csv << "path," << profile_name(profile) << ',' << s << ',' << seqs[s].size() << ',' << num(rel) << ','
          << num(cfg.path_tol) << '\n';
    }
    auto it = tolerance_item("paths psi=" + profile_name(profile), worst, cfg.path_tol);
    if (flagged) {
      it.verdict = Verdict::flagged;
      it.classification = "quadrature not certified";
    }
    res.items.push_back(it);
    worst_path = std::max(worst_path, worst);
  }

  double worst_spread = 0.0, worst_molecule = 0.0;
  for (std::size_t pi = 0; pi < cfg.sweep_p.size(); ++pi) {
    const auto r = sweep(cfg, SweepOperator::mult, pi);
    const std::string pl = p_label(r.config.p);
    auto sw = sweep_item(r, cfg);
    worst_spread = std::max(worst_spread, sw.measured["max_over_median"]);
    res.items.push_back(sw);

    const int order = moment_order(r.config.p);
    bool vanish = true, moments_flagged = false;
    double worst_moment = 0.0;
    for (const auto& a : r.atoms) {
      csv << "sweep," << pl << ',' << a.id << ',' << num(a.radius) << ',' << num(a.total) << ",\n";
      for (int j = 0; j < order && j < static_cast<int>(a.moments.moments.size()); ++j) {
        const double v = std::abs(a.moments.moments[static_cast<std::size_t>(j)]);
        const double tol = a.moments.tolerance[static_cast<std::size_t>(j)];
        worst_moment = std::max(worst_moment, tol > 0.0 ? v / tol : (v > 0.0 ? INFINITY : 0.0));
        csv << "moment," << pl << " j=" << j << ',' << a.id << ',' << num(a.radius) << ',' << num(v) << ','
            << num(tol) << '\n';
      }
      vanish = vanish && a.moments.vanish;
      moments_flagged = moments_flagged || a.moments.flagged;
    }
    ItemResult mo = item("moments " + pl, vanish, vanish ? "below certified tolerance" : "moment above tolerance");
    if (moments_flagged) {
      mo.verdict = Verdict::flagged;
      mo.classification = "moment window tail not certified";
    }
    mo.measured = {{"max_moment_over_tolerance", worst_moment}, {"vanishing_moments", static_cast<double>(order)}};
    res.items.push_back(mo);

    std::vector<double> norms;
    bool molecule_flagged = false, strict = true;
    for (const auto& a : r.atoms) {
      norms.push_back(a.molecule.value);
      molecule_flagged = molecule_flagged || a.molecule.flagged;
      strict = strict && a.molecule.strict;
      csv << "molecule," << pl << ',' << a.id << ',' << num(a.radius) << ',' << num(a.molecule.value) << ','
          << num(a.molecule.theta) << '\n';
    }
    const double spread = r.median_molecule > 0.0 ? r.max_molecule / r.median_molecule : INFINITY;
    const bool bounded = spread <= cfg.sweep_ratio, flat = std::abs(r.molecule_trend.slope) <= cfg.trend_tol;
    ItemResult ml = item("molecule " + pl, bounded && flat && !norms.empty(),
                         !bounded ? "max above ratio times median"
                         : !flat  ? "radius trend"
                         : strict ? "bounded, no radius trend"
                                  : "bounded, no radius trend; boundary theta = 1");
    if (molecule_flagged) {
      ml.verdict = Verdict::flagged;
      ml.classification = "molecule tail not certified";
    }
    ml.measured = {{"max_norm", r.max_molecule},
                   {"median_norm", r.median_molecule},
                   {"max_over_median", spread},
                   {"trend_slope", r.molecule_trend.slope},
                   {"strict", strict ? 1.0 : 0.0}};
    worst_molecule = std::max(worst_molecule, spread);
    res.items.push_back(ml);
  }
  res.measured = {{"max_path_error", worst_path},
                  {"max_sweep_over_median", worst_spread},
                  {"max_molecule_over_median", worst_molecule}};
  return res;
}

// ------------------------------------------------------- 7: oracle equivalence

__float128 profile_quad(__float128 t, __float128 theta) { return expq(-2 * t * (1 - cosq(theta))); }

// Central k-th difference in quadruple precision with one Richardson step.
double difference_oracle(int k, double t, double theta) {
  auto central = [&](__float128 h) {
    __float128 binom = 1, sum = 0;
    for (int i = 0; i <= k; ++i) {
      const __float128 shift = (static_cast<__float128>(k) / 2 - i) * h;
      sum += (i % 2 == 0 ? binom : -binom) * profile_quad(t, static_cast<__float128>(theta) + shift);
      binom = binom * (k - i) / (i + 1);
    }
    return sum / powq(h, k);
  };
  const __float128 h = 1e-3Q;
  return static_cast<double>((4 * central(h / 2) - central(h)) / 3);
}

CriterionResult oracles(const RunConfig& cfg, std::ostream& csv) {
  CriterionResult res;
  res.title = "oracle equivalence";
  csv << "check,order,t,x,value,reference,error\n";
  auto rel = [](double a, double b) { return b == 0.0 ? std::abs(a) : std::abs(a - b) / std::abs(b); };

  double miller = 0.0, integral = 0.0;
  for (double x : cfg.bessel_x)
    for (std::int64_t n = 0; n <= cfg.bessel_n_max; ++n) {
      const double s = scaled_bessel_i_series(n, x);
      const double m = scaled_bessel_i_miller(n, x);
      const double q = scaled_bessel_i_integral(n, x);
      miller = std::max(miller, rel(m, s));
      integral = std::max(integral, rel(q, s));
      csv << "miller," << n << ",," << num(x) << ',' << num(m) << ',' << num(s) << ',' << num(rel(m, s)) << '\n';
      csv << "integral," << n << ",," << num(x) << ',' << num(q) << ',' << num(s) << ',' << num(rel(q, s)) << '\n';
    }
  res.items.push_back(tolerance_item("bessel recurrence vs series", miller, cfg.bessel_tol));
  res.items.push_back(tolerance_item("bessel integral vs series", integral, cfg.bessel_tol));

  double worst = 0.0;
  for (int k = 1; k <= cfg.derivative_k_max; ++k) {
    double worst_k = 0.0;
    for (double t : cfg.derivative_t)
      for (double theta : cfg.derivative_theta) {
        const double v = phi_theta_derivative(k, t, theta);
        const double ref = difference_oracle(k, t, theta);
        const double err = rel(v, ref);
        worst_k = std::max(worst_k, err);
        csv << "faa_di_bruno," << k << ',' << num(t) << ',' << num(theta) << ',' << num(v) << ',' << num(ref) << ','
            << num(err) << '\n';
      }
    res.items.push_back(tolerance_item("theta derivative k=" + std::to_string(k), worst_k, cfg.derivative_tol));
    worst = std::max(worst, worst_k);
  }
  res.measured = {{"bessel_recurrence", miller}, {"bessel_integral", integral}, {"theta_derivative", worst}};
  return res;
}

const char* criterion_title(int id) {
  static const char* titles[] = {"heat kernel identities",
                                 "integration by parts representation",
                                 "decay exponents",
                                 "uniform bounds",
                                 "maximal operator and g-function on atoms",
                                 "Laplace transform type multipliers",
                                 "oracle equivalence",
                                 "runtime and determinism"};
  return titles[id - 1];
}

json measured_json(const std::map<std::string, double>& m) {
  json j = json::object();
  for (const auto& [k, v] : m) j[k] = v;
  return j;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  out << bytes;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

std::string hex(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

std::string RunConfig::resolved_output_dir() const {
  if (!output_dir.empty()) return output_dir;
  if (const char* env = std::getenv("DHS_OUTPUT_DIR"); env && *env) return env;
  return "dhs_output";
}

std::string run_config_to_json(const RunConfig& cfg) { return config_to_json(cfg).dump(2); }

RunConfig run_config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return config_from_json(j);
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return run_config_from_json(s.str());
}

std::string verdict_name(Verdict v) {
  switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    case Verdict::flagged: return "flagged";
  }
  return "fail";
}

Verdict combine_verdicts(const std::vector<ItemResult>& items) {
  bool flagged = false;
  for (const auto& it : items) {
    if (it.verdict == Verdict::fail) return Verdict::fail;
    flagged = flagged || it.verdict == Verdict::flagged;
  }
  return flagged ? Verdict::flagged : Verdict::pass;
}

CriterionResult run_criterion(int id, const RunConfig& cfg, std::ostream& csv) {
  using Runner = CriterionResult (*)(const RunConfig&, std::ostream&);
  static const Runner runners[] = {heat_identities, representation, decay_exponents, uniformity,
                                   atom_sweeps,     multipliers,    oracles};
  if (id < 1 || id > 7) throw std::invalid_argument("criterion " + std::to_string(id) + " is not in 1..7");
  const auto start = std::chrono::steady_clock::now();
  CriterionResult res = runners[id - 1](cfg, csv);
  res.id = id;
  res.title = criterion_title(id);
  res.seconds = seconds_since(start);
  res.budget = cfg.budgets.at(static_cast<std::size_t>(id - 1));
  res.csv = "criterion" + std::to_string(id) + ".csv";
  res.verdict = combine_verdicts(res.items);
  if (res.seconds > res.budget) {
    res.verdict = Verdict::fail;
    res.warnings.push_back("runtime " + num(res.seconds) + " s exceeds the budget of " + num(res.budget) + " s");
  }
  return res;
}

int RunReport::exit_code() const {
  for (const auto& c : criteria)
    if (c.verdict != Verdict::pass) return 1;
  return 0;
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

RunReport verify_all(const RunConfig& cfg, std::ostream* log) {
  const auto start = std::chrono::steady_clock::now();
  set_thread_count(cfg.threads);
  RunReport report;
  report.config = cfg;
  const fs::path dir = cfg.resolved_output_dir();
  fs::create_directories(dir);

  std::set<int> selected(cfg.criteria.begin(), cfg.criteria.end());
  if (selected.empty())
    for (int id = 1; id <= 8; ++id) selected.insert(id);

  std::vector<std::pair<std::string, std::string>> written;
  for (int id : selected) {
    if (id == 8) continue;
    if (log) *log << "criterion " << id << ": " << criterion_title(id) << " ..." << std::endl;
    std::ostringstream csv;
    auto res = run_criterion(id, cfg, csv);
    write_file(dir / res.csv, csv.str());
    written.emplace_back(res.csv, csv.str());
    if (log) {
      char secs[32];
      std::snprintf(secs, sizeof secs, "%.1f", res.seconds);
      *log << "criterion " << id << ": " << verdict_name(res.verdict) << " (" << secs << " s)" << std::endl;
      for (const auto& w : res.warnings) *log << "  warning: " << w << std::endl;
    }
    report.criteria.push_back(std::move(res));
  }

  if (selected.count(8)) {
    CriterionResult res;
    res.id = 8;
    res.title = criterion_title(8);
    res.csv = "criterion8.csv";
    res.budget = cfg.budgets.at(7);
    std::ostringstream csv;
    csv << "file,bytes,fnv1a,reference_fnv1a\n";
    const bool compare = !cfg.reference_dir.empty();
    std::size_t mismatched = 0;
    for (const auto& [name, bytes] : written) {
      std::string ref_hash;
      if (compare) {
        const fs::path ref = fs::path(cfg.reference_dir) / name;
        if (fs::exists(ref)) {
          const auto ref_bytes = read_file(ref);
          ref_hash = hex(fnv1a(ref_bytes));
          mismatched += ref_bytes != bytes;
        } else {
          ref_hash = "missing";
          ++mismatched;
        }
      }
      csv << name << ',' << bytes.size() << ',' << hex(fnv1a(bytes)) << ',' << ref_hash << '\n';
    }
    if (compare) {
      ItemResult det = item("byte determinism", mismatched == 0,
                            mismatched == 0 ? "identical to the reference run" : "differs from the reference run");
      det.measured = {{"files", static_cast<double>(written.size())}, {"mismatched", static_cast<double>(mismatched)}};
      res.items.push_back(det);
    } else {
      res.warnings.push_back("byte determinism not checked: no reference run directory");
    }
    write_file(dir / res.csv, csv.str());
    res.seconds = seconds_since(start);
    ItemResult rt = item("total runtime", res.seconds <= res.budget,
                         res.seconds <= res.budget ? "within budget" : "exceeds budget");
    rt.measured = {{"seconds", res.seconds}, {"budget", res.budget}};
    res.items.push_back(rt);
    res.verdict = combine_verdicts(res.items);
    res.measured = {{"total_seconds", res.seconds}};
    if (log) {
      *log << "criterion 8: " << verdict_name(res.verdict) << std::endl;
      for (const auto& w : res.warnings) *log << "  warning: " << w << std::endl;
    }
    report.criteria.push_back(std::move(res));
  }

  report.seconds = seconds_since(start);
  std::ostringstream verdict;
  write_verdict_json(verdict, report);
  write_file(dir / "verdict.json", verdict.str());
  return report;
}

void write_verdict_json(std::ostream& out, const RunReport& report) {
  json j;
  j["config"] = config_to_json(report.config);
  j["seconds"] = report.seconds;
  j["exit_code"] = report.exit_code();
  json criteria = json::array();
  for (const auto& c : report.criteria) {
    json cj;
    cj["id"] = c.id;
    cj["title"] = c.title;
    cj["verdict"] = verdict_name(c.verdict);
    cj["seconds"] = c.seconds;
    cj["budget"] = c.budget;
    cj["csv"] = c.csv;
    cj["measured"] = measured_json(c.measured);
    cj["warnings"] = c.warnings;
    json items = json::array();
    for (const auto& it : c.items)
      items.push_back(json{{"label", it.label},
                           {"verdict", verdict_name(it.verdict)},
                           {"classification", it.classification},
                           {"measured", measured_json(it.measured)}});
    cj["items"] = items;
    criteria.push_back(cj);
  }
  j["criteria"] = criteria;
  out << j.dump(2) << '\n';
}

std::vector<std::string> export_plots(const std::string& run_dir, const std::string& out_dir) {
  const fs::path dir(run_dir);
  if (!fs::is_directory(dir)) throw std::runtime_error("run directory " + run_dir + " does not exist");
  const fs::path csv_path = dir / "criterion3.csv", verdict_path = dir / "verdict.json";
  if (!fs::exists(csv_path)) throw std::runtime_error(csv_path.string() + " is missing; run criterion 3 first");
  if (!fs::exists(verdict_path)) throw std::runtime_error(verdict_path.string() + " is missing");

  json verdict;
  try {
    verdict = json::parse(read_file(verdict_path));
  } catch (const json::exception& e) {
    throw std::runtime_error("cannot parse " + verdict_path.string() + ": " + e.what());
  }
  struct Fit {
    double slope, intercept;
    std::string rows;
  };
  std::vector<std::string> order;
  std::map<std::string, Fit> fits;
  for (const auto& c : verdict.at("criteria")) {
    if (c.at("id").get<int>() != 3) continue;
    for (const auto& it : c.at("items")) {
      const auto label = it.at("label").get<std::string>();
      const auto& m = it.at("measured");
      auto value = [&](const char* key) { return m.contains(key) && m.at(key).is_number() ? m.at(key).get<double>() : 0.0; };
      order.push_back(label);
      fits[label] = {value("slope"), value("intercept"), {}};
    }
  }
  if (order.empty()) throw std::runtime_error(verdict_path.string() + " has no decay datasets");

  std::istringstream in(read_file(csv_path));
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    const auto c1 = line.find(','), c2 = line.find(',', c1 + 1), c3 = line.find(',', c2 + 1);
    if (c1 == std::string::npos || c3 == std::string::npos) continue;
    auto it = fits.find(line.substr(0, c1));
    if (it == fits.end()) continue;
    const double x = std::strtod(line.c_str() + c1 + 1, nullptr);
    const std::string value = line.substr(c2 + 1, c3 - c2 - 1);
    const double fit = std::exp(it->second.intercept + it->second.slope * std::log(x));
    it->second.rows += line.substr(c1 + 1, c2 - c1 - 1) + "," + value + "," + num(fit) + "\n";
  }

  fs::create_directories(out_dir);
  std::vector<std::string> paths;
  for (const auto& label : order) {
    std::string name = label;
    std::replace(name.begin(), name.end(), ' ', '_');
    const fs::path path = fs::path(out_dir) / (name + ".csv");
    write_file(path, "x,value,fit\n" + fits[label].rows);
    paths.push_back(path.string());
  }
  return paths;
}

}  // namespace dhs
