#include "dhs/decay.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "dhs/bessel.hpp"
#include "dhs/grid.hpp"
#include "dhs/parallel.hpp"
#include "dhs/quadrature.hpp"

namespace dhs {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kEps = std::numeric_limits<double>::epsilon();

const std::pair<DecayKind, const char*> kKindNames[] = {
    {DecayKind::eq31, "eq31"}, {DecayKind::eq32, "eq32"}, {DecayKind::eq41, "eq41"}, {DecayKind::eq42, "eq42"},
    {DecayKind::eq33, "eq33"}, {DecayKind::eq43, "eq43"}, {DecayKind::eq44, "eq44"}, {DecayKind::eq52, "eq52"},
    {DecayKind::eq53, "eq53"}, {DecayKind::hna, "hna"},   {DecayKind::hnb, "hnb"},   {DecayKind::hnc, "hnc"},
};

enum class Reduction { sup, l2, laplace };

Reduction reduction_of(DecayKind kind) {
  switch (kind) {
    case DecayKind::eq31:
    case DecayKind::eq32:
    case DecayKind::eq33:
    case DecayKind::hna: return Reduction::sup;
    case DecayKind::eq41:
    case DecayKind::eq42:
    case DecayKind::eq43:
    case DecayKind::hnb: return Reduction::l2;
    default: return Reduction::laplace;
  }
}

double claimed_exponent(DecayKind kind, const DecayParams& p) {
  switch (kind) {
    case DecayKind::eq31:
    case DecayKind::eq41:
    case DecayKind::eq52: return -1.0;
    case DecayKind::eq32:
    case DecayKind::eq42:
    case DecayKind::eq53: return -2.0;
    case DecayKind::eq33:
    case DecayKind::eq43:
    case DecayKind::eq44: return -(p.k + 1.0);
    default: return p.n - 1.0;
  }
}

std::string label_of(DecayKind kind, const DecayParams& p) {
  std::string label = decay_kind_name(kind);
  switch (kind) {
    case DecayKind::eq33:
    case DecayKind::eq43: return label + " k=" + std::to_string(p.k);
    case DecayKind::eq44: return label + " k=" + std::to_string(p.k) + " psi=" + profile_name(p.profile);
    case DecayKind::eq52:
    case DecayKind::eq53: return label + " psi=" + profile_name(p.profile);
    case DecayKind::hna:
    case DecayKind::hnb: return label + " n=" + std::to_string(p.n) + " k=" + std::to_string(p.k);
    case DecayKind::hnc:
      return label + " n=" + std::to_string(p.n) + " k=" + std::to_string(p.k) + " psi=" + profile_name(p.profile);
    default: return label;
  }
}

double dz_upper_u(double x, int k, const TimeSampling& time) {
  return 2.0 * std::log(std::max(x, 1.0)) + time.dz_span / (k + 1.0);
}

double moment_upper_u(double x, const TimeSampling& time) {
  return 2.0 * std::log(std::max(x, 1.0)) + time.moment_span;
}

std::vector<double> sup_times(double x, const TimeSampling& time) {
  const double hi = time.t_max_factor * std::max(x, 1.0) * std::max(x, 1.0);
  return log_grid_per_decade(time.t_min, hi, time.per_decade);
}

// Gauss-Legendre panels in u: pi wide below -pi, then time.panel wide. Both
// contain the jumps of the built-in profiles (u = 0 and u = k pi).
NodeSet time_nodes(double u_hi, const TimeSampling& time) {
  Breakpoints cuts;
  const double coarse_end = -kPi;
  double u = std::floor(time.u_min / kPi) * kPi;
  for (; u < coarse_end - 1e-12; u += kPi) cuts.push_back(u);
  const double step = time.panel;
  const auto steps = static_cast<long>(std::ceil((u_hi - coarse_end) / step));
  for (long i = 0; i <= steps; ++i) cuts.push_back(coarse_end + static_cast<double>(i) * step);
  return composite_nodes(cuts, time.order);
}

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) {
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid - 1), v.end());
    m = 0.5 * (m + v[mid - 1]);
  }
  return m;
}

struct Evaluated {
  double value = 0.0, tail = 0.0, noise = 0.0, magnitude = -1.0;
  bool flagged = false;
};

// Supremum of |values| with an end-of-grid check.
Evaluated reduce_sup(const std::vector<double>& values) {
  Evaluated e;
  std::size_t arg = 0;
  for (std::size_t i = 0; i < values.size(); ++i)
    if (std::abs(values[i]) > e.value) {
      e.value = std::abs(values[i]);
      arg = i;
    }
  e.flagged = e.value > 0.0 && (arg == 0 || arg + 1 == values.size());
  return e;
}

// L2(dt/t) norm of samples f(t_i) given du-weights; f ~ t near 0 and decays at infinity.
Evaluated reduce_l2(const std::vector<double>& f, const std::vector<double>& w, double tol = 1e-6) {
  Evaluated e;
  double sum = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) sum += w[i] * f[i] * f[i];
  e.tail = 0.5 * f.front() * f.front() + f.back() * f.back();
  e.value = std::sqrt(sum + e.tail);
  e.flagged = e.tail > tol * sum;
  return e;
}

}  // namespace

DecayKind parse_decay_kind(const std::string& name) {
  for (const auto& [kind, text] : kKindNames)
    if (name == text) return kind;
  throw std::invalid_argument("unknown decay kind '" + name + "'");
}

std::string decay_kind_name(DecayKind kind) {
  for (const auto& [k, text] : kKindNames)
    if (k == kind) return text;
  return "?";
}

bool integer_indexed(DecayKind kind) {
  switch (kind) {
    case DecayKind::eq31:
    case DecayKind::eq32:
    case DecayKind::eq41:
    case DecayKind::eq42:
    case DecayKind::eq52:
    case DecayKind::eq53: return true;
    default: return false;
  }
}

ZSampling parse_z_sampling(const std::string& name) {
  if (name == "geometric") return ZSampling::geometric;
  if (name == "integer") return ZSampling::integer;
  if (name == "half_integer") return ZSampling::half_integer;
  throw std::invalid_argument("unknown sampling '" + name + "' (expected geometric|integer|half_integer)");
}

std::string z_sampling_name(ZSampling s) {
  switch (s) {
    case ZSampling::geometric: return "geometric";
    case ZSampling::integer: return "integer";
    case ZSampling::half_integer: return "half_integer";
  }
  return "?";
}

LogLogFit fit_log_log(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size() && i < y.size(); ++i)
    if (x[i] > 0.0 && y[i] > 0.0) {
      lx.push_back(std::log(x[i]));
      ly.push_back(std::log(y[i]));
    }
  LogLogFit fit;
  fit.points = lx.size();
  if (lx.size() < 2) {
    fit.slope = fit.intercept = std::numeric_limits<double>::quiet_NaN();
    fit.slope_ci = std::numeric_limits<double>::infinity();
    return fit;
  }
  const double n = static_cast<double>(lx.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  if (lx.size() > 2) {
    double sse = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      const double r = ly[i] - fit.intercept - fit.slope * lx[i];
      sse += r * r;
    }
    const double se = std::sqrt(sse / (n - 2.0) / sxx);
    const boost::math::students_t dist(n - 2.0);
    fit.slope_ci = boost::math::quantile(boost::math::complement(dist, 0.025)) * se;
  } else {
    fit.slope_ci = std::numeric_limits<double>::infinity();
  }
  return fit;
}

std::shared_ptr<const OscillatorySamples> DecayCache::get(int k, double z, const TimeSampling& time,
                                                          const ThetaQuadrature& theta) {
  {
    std::lock_guard lock(mutex_);
    if (!configured_) {
      configured_ = true;
      time_ = time;
      theta_ = theta;
    } else if (!(time == time_) || !(theta == theta_)) {
      throw std::invalid_argument("decay cache shared between different discretizations");
    }
    auto it = tables_.find({k, z});
    if (it != tables_.end()) return it->second;
  }
  auto samples = std::make_shared<OscillatorySamples>();
  samples->sup_times = sup_times(z, time);
  samples->sup_moments = profile_moments(k, z, samples->sup_times, theta);
  auto nodes = time_nodes(std::max(dz_upper_u(z, k, time), moment_upper_u(z, time)), time);
  samples->node_u = nodes.x;
  for (double u : nodes.x) samples->node_times.push_back(std::exp(u));
  samples->node_weights = std::move(nodes.w);
  samples->node_moments = profile_moments(k, z, samples->node_times, theta);
  const double smooth_time = std::max(parts_min_time, z * z);
  auto smooth = [&](const std::vector<double>& times, std::size_t& from) {
    from = static_cast<std::size_t>(std::lower_bound(times.begin(), times.end(), smooth_time) - times.begin());
    return profile_moments(0, z, std::span(times).subspan(from), theta, k);
  };
  samples->sup_smooth = smooth(samples->sup_times, samples->sup_smooth_from);
  samples->node_smooth = smooth(samples->node_times, samples->node_smooth_from);
  std::lock_guard lock(mutex_);
  auto [it, inserted] = tables_.emplace(std::make_pair(k, z), std::move(samples));
  return it->second;
}

std::vector<double> decay_points(DecayKind kind, const DecayParams& params) {
  if (!(params.x_min > 0.0) || params.x_max < params.x_min) throw std::invalid_argument("empty or invalid range");
  if (params.points_per_octave < 1) throw std::invalid_argument("points per octave must be positive");
  const ZSampling sampling = integer_indexed(kind) ? ZSampling::integer : params.sampling;
  std::vector<double> out;
  for (int i = 0;; ++i) {
    double x = params.x_min * std::exp2(static_cast<double>(i) / params.points_per_octave);
    if (x > params.x_max * (1.0 + 1e-12)) break;
    if (sampling == ZSampling::integer) x = std::round(x);
    if (sampling == ZSampling::half_integer) x = std::floor(x) + 0.5;
    if (out.empty() || x > out.back()) out.push_back(x);
  }
  return out;
}

namespace {

void integer_suite(DecayKind kind, const DecayParams& params, const std::vector<double>& xs,
                   std::vector<Evaluated>& out) {
  const auto n_max = static_cast<std::int64_t>(xs.back());
  const LaplaceMultiplier mult(params.profile);
  switch (reduction_of(kind)) {
    case Reduction::sup: {
      const auto times = sup_times(static_cast<double>(n_max), params.time);
      std::vector<std::vector<double>> rows(times.size());
      parallel_for(times.size(), [&](std::size_t i) { rows[i] = heat_kernel_row(n_max + 1, times[i]); });
      for (std::size_t j = 0; j < xs.size(); ++j) {
        const auto n = static_cast<std::size_t>(xs[j]);
        std::vector<double> values(times.size());
        for (std::size_t i = 0; i < times.size(); ++i)
          values[i] = kind == DecayKind::eq31 ? rows[i][n] : rows[i][n + 1] - rows[i][n];
        out[j] = reduce_sup(values);
      }
      return;
    }
    case Reduction::l2: {
      const auto nodes = time_nodes(dz_upper_u(static_cast<double>(n_max), 0, params.time), params.time);
      std::vector<std::vector<double>> rows(nodes.x.size());
      parallel_for(nodes.x.size(), [&](std::size_t i) {
        const double t = std::exp(nodes.x[i]);
        rows[i] = heat_kernel_dt_row(n_max + 1, t);
        for (auto& v : rows[i]) v *= t;
      });
      for (std::size_t j = 0; j < xs.size(); ++j) {
        const auto n = static_cast<std::size_t>(xs[j]);
        std::vector<double> f(nodes.x.size());
        for (std::size_t i = 0; i < f.size(); ++i)
          f[i] = kind == DecayKind::eq41 ? rows[i][n] : rows[i][n + 1] - rows[i][n];
        out[j] = reduce_l2(f, nodes.w);
      }
      return;
    }
    case Reduction::laplace: {
      const auto row = multiplier_kernel_row(mult, n_max + 1);
      // t -> G(n, t) rises and then falls, so int |dG/dt| dt = 2 sup_t G(n, t);
      // this scales the cancellation in the kernel integral.
      const auto times = sup_times(static_cast<double>(n_max), params.time);
      std::vector<double> peak(static_cast<std::size_t>(n_max) + 2, 0.0);
      for (double t : times) {
        const auto g = heat_kernel_row(n_max + 1, t);
        for (std::size_t i = 0; i < peak.size(); ++i) peak[i] = std::max(peak[i], g[i]);
      }
      for (std::size_t j = 0; j < xs.size(); ++j) {
        const auto n = static_cast<std::int64_t>(xs[j]);
        const auto i = static_cast<std::size_t>(n);
        Evaluated e;
        e.value = std::abs(kind == DecayKind::eq52 ? row(n) : row(n + 1) - row(n));
        e.magnitude = 2.0 * mult.sup_norm() * (kind == DecayKind::eq52 ? peak[i] : peak[i] + peak[i + 1]);
        e.tail = row.tail;
        e.flagged = row.flagged;
        out[j] = e;
      }
      return;
    }
  }
}

Evaluated oscillatory_sample(DecayKind kind, const DecayParams& params, double z, const OscillatorySamples& s,
                             const LaplaceMultiplier& mult) {
  std::vector<OscillatoryTerm> terms;
  const bool dz = kind == DecayKind::eq33 || kind == DecayKind::eq43 || kind == DecayKind::eq44;
  if (dz)
    terms = dz_expansion(params.k, params.k);
  else
    terms = {OscillatoryTerm{1.0, 0, params.k - params.n, params.n % 2 == 1}};
  // Beyond its own cutoff the z-derivative expansion only adds cancellation noise.
  const double u_cap = dz ? dz_upper_u(z, params.k, params.time) : moment_upper_u(z, params.time);
  std::size_t count = 0;
  while (count < s.node_u.size() && s.node_u[count] < u_cap) ++count;
  // Single moments switch to the integrated-by-parts route at large t.
  const auto parts = dz ? std::vector<OscillatoryTerm>{} : moment_by_parts(params.k, params.k - params.n, params.n);
  auto at = [&](const std::vector<ProfileMoments>& direct, const std::vector<ProfileMoments>& smooth,
                std::size_t from, std::size_t i) -> std::pair<const ProfileMoments&, std::span<const OscillatoryTerm>> {
    if (!dz && i >= from) return {smooth[i - from], parts};
    return {direct[i], terms};
  };
  // Rounding level of a combination: eps times its largest term.
  auto scale_of = [&](const ProfileMoments& m, std::span<const OscillatoryTerm> used, bool t_dt) {
    double scale = 0.0;
    for (const auto& term : used) {
      const double c = std::abs(term.coef * std::pow(z, term.z_power));
      const double v = t_dt ? m.t_dt_moment(term.theta_power, term.is_sin) : m.moment(term.theta_power, term.is_sin);
      scale = std::max(scale, c * std::abs(v));
    }
    return scale;
  };
  auto sup_at = [&](std::size_t i) { return at(s.sup_moments, s.sup_smooth, s.sup_smooth_from, i); };
  auto node_at = [&](std::size_t i) { return at(s.node_moments, s.node_smooth, s.node_smooth_from, i); };
  switch (reduction_of(kind)) {
    case Reduction::sup: {
      std::vector<double> values(s.sup_moments.size());
      double noise = 0.0;
      for (std::size_t i = 0; i < values.size(); ++i) {
        const auto [m, used] = sup_at(i);
        values[i] = m.combine(used, z).value;
        noise = std::max(noise, 16.0 * kEps * scale_of(m, used, false));
      }
      auto e = reduce_sup(values);
      e.noise = noise;
      return e;
    }
    case Reduction::l2: {
      std::vector<double> f(count);
      double noise = 0.0;
      for (std::size_t i = 0; i < f.size(); ++i) {
        const auto [m, used] = node_at(i);
        f[i] = m.combine(used, z).t_dt;
        const double r = 16.0 * kEps * scale_of(m, used, true);
        noise += s.node_weights[i] * r * r;
      }
      auto e = reduce_l2(f, {s.node_weights.begin(), s.node_weights.begin() + static_cast<std::ptrdiff_t>(count)});
      e.noise = std::sqrt(noise);
      return e;
    }
    case Reduction::laplace: {
      Evaluated e;
      double sum = 0.0, noise = 0.0, magnitude = 0.0;
      for (std::size_t i = 0; i < count; ++i) {
        const double psi = mult.psi(s.node_times[i]);
        if (psi == 0.0) continue;
        const auto [m, used] = node_at(i);
        const double f = s.node_weights[i] * psi * m.combine(used, z).t_dt;
        sum += f;
        magnitude += std::abs(f);
        noise += s.node_weights[i] * std::abs(psi) * 16.0 * kEps * scale_of(m, used, true);
      }
      // psi d/dt V over (0, t_lo) and (t_hi, inf): V is linear near 0 and
      // decays monotonically to 0 for large t. Where psi has a known limit the
      // upper piece is limit * (0 - V(t_hi)) up to the deviation from it.
      const auto first = s.node_moments.front().combine(terms, z);
      const auto [last_m, last_used] = node_at(count - 1);
      const auto last = last_m.combine(last_used, z);
      double upper = mult.sup_norm() * std::abs(last.value);
      if (const auto tail = mult.tail_beyond(s.node_times[count - 1])) {
        sum -= tail->limit * last.value;
        upper = tail->deviation * std::abs(last.value);
      }
      e.value = std::abs(sum);
      e.magnitude = magnitude;
      e.tail = mult.sup_norm() * std::abs(first.t_dt) + upper;
      e.noise = noise;
      e.flagged = e.tail > 1e-3 * std::max(e.value, e.noise);
      return e;
    }
  }
  return {};
}

}  // namespace

DecayReport verify_decay_suite(DecayKind kind, const DecayParams& params, DecayCache* cache) {
  if (!integer_indexed(kind)) {
    if (params.k < 0 || params.k > kDefaultMaxDerivativeOrder) throw std::invalid_argument("derivative order out of range");
    const bool hn = kind == DecayKind::hna || kind == DecayKind::hnb || kind == DecayKind::hnc;
    if (hn && (params.n < 0 || params.k < std::max(params.n, 1)))
      throw std::invalid_argument("need k >= max(n, 1) for the hn families");
  }
  DecayReport report;
  report.kind = kind;
  report.label = label_of(kind, params);
  report.claimed_exponent = claimed_exponent(kind, params);
  const auto xs = decay_points(kind, params);
  std::vector<Evaluated> values(xs.size());
  if (!xs.empty()) {
    if (integer_indexed(kind)) {
      integer_suite(kind, params, xs, values);
    } else {
      const LaplaceMultiplier mult(params.profile);
      DecayCache local;
      DecayCache& store = cache ? *cache : local;
      // Largest z first so that the expensive samples start early.
      parallel_for(xs.size(), [&](std::size_t r) {
        const std::size_t i = xs.size() - 1 - r;
        auto tables = store.get(params.k, xs[i], params.time, params.theta);
        values[i] = oscillatory_sample(kind, params, xs[i], *tables, mult);
      });
    }
  }
  std::vector<double> ys, ratios;
  report.signal_to_noise = 0.0;
  report.cancellation = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    DecaySample s;
    s.x = xs[i];
    s.value = values[i].value;
    s.claimed_rate = std::pow(xs[i], report.claimed_exponent);
    s.ratio = s.value / s.claimed_rate;
    s.tail = values[i].tail;
    s.magnitude = values[i].magnitude < 0.0 ? s.value : values[i].magnitude;
    s.flagged = values[i].flagged;
    report.flagged = report.flagged || s.flagged;
    const double snr = values[i].noise > 0.0 ? s.value / values[i].noise : std::numeric_limits<double>::infinity();
    report.signal_to_noise = i == 0 ? snr : std::min(report.signal_to_noise, snr);
    if (s.magnitude > 0.0) report.cancellation = std::max(report.cancellation, s.value / s.magnitude);
    ys.push_back(s.value);
    ratios.push_back(s.ratio);
    report.samples.push_back(s);
  }
  report.fit = fit_log_log(xs, ys);
  report.max_ratio = ratios.empty() ? 0.0 : *std::max_element(ratios.begin(), ratios.end());
  report.median_ratio = median_of(ratios);
  return report;
}

void write_decay_csv(std::ostream& out, const DecayReport& report, bool header) {
  if (header) out << "kind,x,value,claimed_rate,ratio\n";
  char buf[160];
  for (const auto& s : report.samples) {
    std::snprintf(buf, sizeof buf, ",%.17g,%.17g,%.17g,%.17g\n", s.x, s.value, s.claimed_rate, s.ratio);
    out << report.label << buf;
  }
}

}  // namespace dhs
