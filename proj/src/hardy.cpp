#include "dhs/hardy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>
#include <stdexcept>

#include "dhs/parallel.hpp"

namespace dhs {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

double inverse_q(double q) { return std::isinf(q) ? 0.0 : 1.0 / q; }

double norm_q(std::span<const double> v, double q) {
  if (std::isinf(q)) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
  }
  double s = 0.0;
  for (double x : v) s += std::pow(std::abs(x), q);
  return std::pow(s, 1.0 / q);
}

// p-sum of |f| split at distance `split` from the center, restricted to [center - reach, center + reach].
struct Split {
  double near = 0.0, far = 0.0, l2 = 0.0, near_l2 = 0.0;
};

Split split_sum(const Sequence& f, std::int64_t center, double split, std::int64_t reach, double p) {
  Split s;
  const std::int64_t lo = std::max(f.first(), center - reach), hi = std::min(f.last(), center + reach);
  for (std::int64_t n = lo; n <= hi; ++n) {
    const double a = std::abs(f[n]);
    const double v = std::pow(a, p);
    if (std::abs(static_cast<double>(n - center)) <= split) {
      s.near += v;
      s.near_l2 += a * a;
    } else {
      s.far += v;
    }
    s.l2 += a * a;
  }
  s.l2 = std::sqrt(s.l2);
  s.near_l2 = std::sqrt(s.near_l2);
  return s;
}

Sequence restrict_to(const Sequence& f, std::int64_t center, std::int64_t reach) {
  const std::int64_t lo = std::max(f.first(), center - reach), hi = std::min(f.last(), center + reach);
  if (lo > hi) return {};
  return f.window(lo, hi);
}

double tail_both_sides(const Sequence& f, std::int64_t center, double r, double alpha) {
  return power_tail_sum(fit_power_tail(f, center, +1), r, alpha) +
         power_tail_sum(fit_power_tail(f, center, -1), r, alpha);
}

}  // namespace

AtomFlavor parse_atom_flavor(const std::string& name) {
  if (name == "plain") return AtomFlavor::plain;
  if (name == "hardy" || name == "H") return AtomFlavor::hardy;
  throw std::invalid_argument("unknown atom flavor: " + name);
}

std::string atom_flavor_name(AtomFlavor flavor) { return flavor == AtomFlavor::plain ? "plain" : "hardy"; }

std::int64_t ball_measure(double radius) { return 2 * static_cast<std::int64_t>(std::floor(radius)) + 1; }

int moment_order(double p) {
  if (!(p > 0.0 && p <= 1.0)) throw std::domain_error("p must lie in (0, 1]");
  return static_cast<int>(std::floor(1.0 / p + 1e-12));
}

int atom_moment_count(double p, AtomFlavor flavor) { return flavor == AtomFlavor::plain ? 1 : moment_order(p); }

AtomValidation validate_atom(const Atom& atom, double tol) {
  AtomValidation res;
  const auto& b = atom.values;
  double reach = 0.0, l1 = 0.0;
  std::vector<double> mags;
  for (std::int64_t n = b.first(); n <= b.last(); ++n) {
    const double a = std::abs(b[n]);
    if (a > 0.0) reach = std::max(reach, std::abs(static_cast<double>(n - atom.center)));
    l1 += a;
    mags.push_back(a);
  }
  res.conditions.push_back({"support", reach <= atom.radius, reach, atom.radius});

  const double mu = static_cast<double>(ball_measure(atom.radius));
  const double size_bound = std::pow(mu, inverse_q(atom.q) - 1.0 / atom.p);
  const double size = norm_q(mags, atom.q);
  res.conditions.push_back({"size", size <= size_bound * (1.0 + tol), size, size_bound});

  for (int j = 0; j < atom_moment_count(atom.p, atom.flavor); ++j) {
    cplx m = 0.0;
    for (std::int64_t n = b.first(); n <= b.last(); ++n)
      m += std::pow(static_cast<double>(n - atom.center), j) * b[n];
    const double bound = tol * std::pow(atom.radius, j) * l1;
    res.conditions.push_back({"moment " + std::to_string(j), std::abs(m) <= bound, std::abs(m), bound});
  }
  res.valid = std::all_of(res.conditions.begin(), res.conditions.end(), [](const auto& c) { return c.ok; });
  return res;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Atom random_atom(double p, double q, std::int64_t center, double radius, std::uint64_t seed, AtomFlavor flavor) {
  if (!(radius >= 1.0)) throw std::invalid_argument("atom radius must be at least 1");
  if (!(p > 0.0 && p <= 1.0) || !(q > p)) throw std::invalid_argument("atoms need 0 < p <= 1 and q > p");
  const int constraints = atom_moment_count(p, flavor);
  const auto mu = static_cast<std::size_t>(ball_measure(radius));
  if (mu <= static_cast<std::size_t>(constraints))
    throw std::invalid_argument("a ball of " + std::to_string(mu) + " points cannot carry " +
                                std::to_string(constraints) + " moment conditions; use radius >= " +
                                std::to_string((constraints + 1) / 2));
  const auto r = static_cast<std::int64_t>(std::floor(radius));

  // Orthonormal basis of the scaled monomials ((n - center) / r)^j on the ball.
  std::vector<std::vector<double>> basis;
  for (int j = 0; j < constraints; ++j) {
    std::vector<double> v(mu);
    for (std::size_t i = 0; i < mu; ++i) v[i] = std::pow(static_cast<double>(static_cast<std::int64_t>(i) - r) / r, j);
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& e : basis) {
        double d = 0.0;
        for (std::size_t i = 0; i < mu; ++i) d += e[i] * v[i];
        for (std::size_t i = 0; i < mu; ++i) v[i] -= d * e[i];
      }
    const double nv = norm_q(v, 2.0);
    for (auto& x : v) x /= nv;
    basis.push_back(std::move(v));
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<double> x(mu);
  for (auto& v : x) v = normal(rng);
  for (int pass = 0; pass < 2; ++pass)
    for (const auto& e : basis) {
      double d = 0.0;
      for (std::size_t i = 0; i < mu; ++i) d += e[i] * x[i];
      for (std::size_t i = 0; i < mu; ++i) x[i] -= d * e[i];
    }
  const double scale = std::pow(static_cast<double>(mu), inverse_q(q) - 1.0 / p) / norm_q(x, q);
  for (auto& v : x) v *= scale;

  Atom atom;
  atom.center = center;
  atom.radius = radius;
  atom.p = p;
  atom.q = q;
  atom.flavor = flavor;
  atom.values = Sequence::from_real(center - r, x);
  return atom;
}

PowerTail fit_power_tail(const Sequence& f, std::int64_t center, int sign) {
  PowerTail tail;
  if (f.empty()) return tail;
  const std::int64_t edge = sign > 0 ? f.last() - center : center - f.first();
  tail.edge = std::max<std::int64_t>(edge, 0);
  if (edge < 8) return tail;
  double top = 0.0;
  for (auto v : f.values()) top = std::max(top, std::abs(v));
  std::vector<double> x, y;
  for (std::int64_t d = (edge + 1) / 2; d <= edge; ++d) {
    const double a = std::abs(f[center + sign * d]);
    if (a > 1e-12 * top) {
      x.push_back(static_cast<double>(d));
      y.push_back(a);
    }
  }
  if (x.size() < 4) return tail;
  const auto fit = fit_log_log(x, y);
  tail.negligible = false;
  tail.exponent = -fit.slope;
  tail.amplitude = std::exp(fit.intercept);
  return tail;
}

double power_tail_sum(const PowerTail& tail, double r, double alpha) {
  if (tail.negligible) return 0.0;
  const double s = (tail.exponent - alpha) * r;
  if (!(s > 1.0)) return kInf;
  // Midpoint rule: sum_{d > edge} d^{-s} ~ int_{edge + 1/2}^inf x^{-s} dx.
  return std::pow(tail.amplitude, r) * std::pow(tail.edge + 0.5, 1.0 - s) / (s - 1.0);
}

MoleculeNorm molecule_norm(const Molecule& m, double tail_tol) {
  if (!(m.p > 0.0 && m.p <= 1.0)) throw std::invalid_argument("molecules need 0 < p <= 1");
  if (!(m.q > 1.0)) throw std::invalid_argument("molecules need q > 1");
  const double gap = 1.0 / m.p - inverse_q(m.q);
  if (!(m.alpha > 0.0) || !(m.alpha >= gap * (1.0 - 1e-12)))
    throw std::invalid_argument("molecules need alpha >= 1/p - 1/q");
  MoleculeNorm res;
  res.theta = std::min(1.0, gap / m.alpha);
  res.strict = m.alpha > gap * (1.0 + 1e-12);

  std::vector<double> plain, weighted;
  for (std::int64_t n = m.values.first(); n <= m.values.last(); ++n) {
    const double a = std::abs(m.values[n]);
    plain.push_back(a);
    weighted.push_back(std::pow(std::abs(static_cast<double>(n - m.center)), m.alpha) * a);
  }
  const double a0 = norm_q(plain, m.q), a1 = norm_q(weighted, m.q);
  res.value = std::pow(a0, 1.0 - res.theta) * std::pow(a1, res.theta);

  if (m.windowed && !m.values.empty()) {
    const auto right = fit_power_tail(m.values, m.center, +1), left = fit_power_tail(m.values, m.center, -1);
    double slowest = kInf;
    for (const auto& t : {right, left})
      if (!t.negligible) slowest = std::min(slowest, t.exponent);
    res.decay_exponent = std::isinf(slowest) ? 0.0 : slowest;
    auto relative = [&](double alpha, double norm) {
      if (norm == 0.0) return 0.0;
      if (std::isinf(m.q)) {
        double beyond = 0.0;
        for (const auto& t : {right, left}) {
          if (t.negligible) continue;
          if (!(t.exponent > alpha)) return kInf;
          beyond = std::max(beyond, t.amplitude * std::pow(t.edge + 1.0, alpha - t.exponent));
        }
        return std::max(0.0, beyond / norm - 1.0);
      }
      const double extra = power_tail_sum(right, m.q, alpha) + power_tail_sum(left, m.q, alpha);
      return std::pow(1.0 + extra / std::pow(norm, m.q), 1.0 / m.q) - 1.0;
    };
    res.tail = (1.0 - res.theta) * relative(0.0, a0) + res.theta * relative(m.alpha, a1);
    res.flagged = !(res.tail <= tail_tol);
  }
  return res;
}

MomentReport multiplier_moments(const LaplaceMultiplier& mult, const Atom& atom, std::int64_t margin) {
  if (margin <= 0) margin = std::max<std::int64_t>(256, static_cast<std::int64_t>(16.0 * atom.radius));
  MultiplierOptions opts;
  opts.margin = margin;
  const auto t = multiplier_apply(atom.values, mult, MultiplierPath::kernel, opts);
  const auto& v = t.value;
  const int order = moment_order(atom.p);
  MomentReport res;
  res.vanish = true;
  const auto right = fit_power_tail(v, atom.center, +1), left = fit_power_tail(v, atom.center, -1);
  std::int64_t required = 0;
  for (int j = 0; j <= order; ++j) {
    cplx m = 0.0;
    double absolute = 0.0, weights = 0.0;
    for (std::int64_t n = v.first(); n <= v.last(); ++n) {
      const double w = std::pow(std::abs(static_cast<double>(n - atom.center)), j);
      m += std::pow(static_cast<double>(n - atom.center), j) * v[n];
      absolute += w * std::abs(v[n]);
      weights += w;
    }
    const double tail = power_tail_sum(right, 1.0, j) + power_tail_sum(left, 1.0, j);
    const double rounding = 64.0 * std::numeric_limits<double>::epsilon() * absolute;
    res.moments.push_back(m);
    res.absolute.push_back(absolute);
    res.tolerance.push_back(tail + t.error * weights + rounding);
    if (j == order) continue;
    // The window is adequate when its tail is small against the moment scale.
    if (!(tail <= 1e-6 * absolute)) {
      res.flagged = true;
      for (const auto& side : {right, left}) {
        if (side.negligible) continue;
        const double s = side.exponent - j;
        if (!(s > 1.0)) {
          required = std::numeric_limits<std::int64_t>::max();
          continue;
        }
        // A (R + 1/2)^{1 - s} / (s - 1) <= 1e-6 absolute / 2.
        const double r = std::pow(5e-7 * absolute * (s - 1.0) / side.amplitude, 1.0 / (1.0 - s));
        required = std::max(required, static_cast<std::int64_t>(std::ceil(r)) + margin - side.edge);
      }
    }
    if (!(std::abs(m) <= res.tolerance.back())) res.vanish = false;
  }
  res.required_window = required;
  return res;
}

QuasinormEstimate hardy_quasinorm_estimate(const Sequence& f, double p, std::int64_t margin, double tail_tol) {
  if (!(p > 0.0 && p <= 1.0)) throw std::domain_error("p must lie in (0, 1]");
  QuasinormEstimate res;
  if (f.empty()) return res;
  const auto h = hilbert(f, p, margin);
  const double inside = lp_sum(h.value, p);
  res.lp = lp_quasinorm(f, p);
  res.hilbert_lp = std::pow(inside, 1.0 / p);
  res.value = res.lp + res.hilbert_lp;
  res.tail = inside > 0.0 ? h.tail / inside : kInf;
  res.flagged = !std::isfinite(res.tail) || !(res.tail <= tail_tol);
  return res;
}

SweepOperator parse_sweep_operator(const std::string& name) {
  if (name == "maximal") return SweepOperator::maximal;
  if (name == "gfun") return SweepOperator::gfun;
  if (name == "mult") return SweepOperator::mult;
  throw std::invalid_argument("unknown sweep operator: " + name);
}

std::string sweep_operator_name(SweepOperator op) {
  switch (op) {
    case SweepOperator::maximal: return "maximal";
    case SweepOperator::gfun: return "gfun";
    case SweepOperator::mult: return "mult";
  }
  return "?";
}

SweepReport atom_operator_sweep(const SweepConfig& cfg) {
  if (cfg.count < 1 || cfg.radii.empty()) throw std::invalid_argument("empty sweep");
  SweepReport report;
  report.config = cfg;
  const std::size_t per = static_cast<std::size_t>(cfg.count);
  const std::size_t total = per * cfg.radii.size();
  report.atoms.resize(total);
  const LaplaceMultiplier mult(cfg.profile);
  const int order = moment_order(cfg.p);

  parallel_for(total, [&](std::size_t idx) {
    const std::size_t ri = idx / per;
    const double radius = cfg.radii[ri];
    const std::int64_t reach =
        std::max(cfg.min_window, static_cast<std::int64_t>(std::ceil(cfg.window_factor * radius)));
    SweepAtom& out = report.atoms[idx];
    out.id = idx;
    out.radius = radius;
    out.seed = derive_seed(cfg.seed, idx);
    const Atom atom = random_atom(cfg.p, 2.0, 0, radius, out.seed);

    Sequence value;
    bool flagged = false;
    switch (cfg.op) {
      case SweepOperator::maximal: {
        OperatorConfig oc;
        oc.t_grid = log_grid_per_decade(1e-4, static_cast<double>(reach) * reach, cfg.per_decade);
        value = maximal(atom.values, oc).value;
        break;
      }
      case SweepOperator::gfun: {
        // The grid is extended while the large-time tail is not yet a clean power law.
        OperatorConfig oc;
        const double u_lo = -6.0;
        double u_hi = 2.0 * std::log(static_cast<double>(reach)) + 3.0;
        for (int attempt = 0; attempt < 3; ++attempt, u_hi += 3.0) {
          oc.g_grid = LogGrid{u_lo, u_hi, static_cast<std::size_t>(std::ceil((u_hi - u_lo) / cfg.g_step)) + 1};
          const auto g = g_function(atom.values, oc);
          value = g.value;
          flagged = g.flagged;
          if (!flagged) break;
        }
        break;
      }
      case SweepOperator::mult: {
        MultiplierOptions mo;
        mo.margin = reach;
        const auto t = multiplier_apply(atom.values, mult, MultiplierPath::kernel, mo);
        value = t.value;
        flagged = t.flagged;
        out.moments = multiplier_moments(mult, atom, reach);
        Molecule mol;
        mol.center = atom.center;
        mol.p = cfg.p;
        mol.q = 2.0;
        mol.alpha = order;
        mol.values = t.value;
        mol.windowed = true;
        out.molecule = molecule_norm(mol);
        break;
      }
    }
    value = restrict_to(value, atom.center, reach);
    const auto s = split_sum(value, atom.center, 2.0 * radius, reach, cfg.p);
    out.tail = tail_both_sides(value, atom.center, cfg.p, 0.0);
    out.near = s.near;
    out.far = s.far + out.tail;
    out.total = out.near + out.far;
    out.l2_ratio = s.l2 / lp_quasinorm(atom.values, 2.0);
    out.near_bound = std::pow(s.l2, cfg.p) * std::pow(static_cast<double>(ball_measure(2.0 * radius)), 1.0 - cfg.p / 2.0);
    out.flagged = flagged || !(out.tail <= cfg.tail_tol * out.total);
  });

  std::vector<double> totals, molecules;
  for (const auto& a : report.atoms) {
    totals.push_back(a.total);
    report.max_total = std::max(report.max_total, a.total);
    report.near_bound_holds = report.near_bound_holds && a.near <= a.near_bound * (1.0 + 1e-12);
    report.flagged = report.flagged || a.flagged;
    if (cfg.op == SweepOperator::mult) {
      molecules.push_back(a.molecule.value);
      report.max_molecule = std::max(report.max_molecule, a.molecule.value);
      report.moments_vanish = report.moments_vanish && a.moments.vanish;
      report.flagged = report.flagged || a.molecule.flagged || a.moments.flagged;
    }
  }
  report.median_total = median(totals);
  std::vector<double> radii, medians, molecule_medians;
  for (std::size_t ri = 0; ri < cfg.radii.size(); ++ri) {
    std::vector<double> t, m;
    for (std::size_t i = 0; i < per; ++i) {
      t.push_back(report.atoms[ri * per + i].total);
      m.push_back(report.atoms[ri * per + i].molecule.value);
    }
    radii.push_back(cfg.radii[ri]);
    medians.push_back(median(t));
    molecule_medians.push_back(median(m));
  }
  if (radii.size() >= 2) report.trend = fit_log_log(radii, medians);
  if (cfg.op == SweepOperator::mult) {
    report.median_molecule = median(molecules);
    if (radii.size() >= 2) report.molecule_trend = fit_log_log(radii, molecule_medians);
  }
  return report;
}

void write_sweep_csv(std::ostream& out, const SweepReport& report, bool header) {
  if (header) out << "atom_id,r0,near,far,total\n";
  char buf[160];
  for (const auto& a : report.atoms) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g\n", a.id, a.radius, a.near, a.far, a.total);
    out << buf;
  }
}

}  // namespace dhs
