#include "dhs/kernel_analysis.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>
#include <tuple>

#include "dhs/quadrature.hpp"

namespace dhs {

int parts_sign(int k) { return ((k + 1) / 2) % 2 == 0 ? 1 : -1; }

double half_angle(int j, double x) { return (j % 2 != 0) ? std::sin(x) : std::cos(x); }

ThetaNodes theta_nodes(double z, double t, const ThetaQuadrature& q) {
  const double pi = std::numbers::pi;
  const double root = std::sqrt(t);
  const double cut = std::min(pi, q.cut_scale / root);
  const double width = std::min(pi / (q.panels_per_period * std::max(z, 1.0)), q.width_scale / root);
  auto panels = refine_toward_left(uniform_panels(0.0, cut, width), width / 32.0);
  auto set = composite_nodes(panels, q.order);
  return {std::move(set.x), std::move(set.w)};
}

namespace {

// z^a theta^b cos(z theta + shift pi / 2)
struct RawTerm {
  double coef;
  int z_power;
  int theta_power;
  int shift;
};

std::vector<OscillatoryTerm> normalize(const std::map<std::tuple<int, int, int>, double>& raw) {
  std::map<std::tuple<int, int, bool>, double> collected;
  for (const auto& [key, coef] : raw) {
    const auto [a, b, s] = key;
    // cos(x), -sin(x), -cos(x), sin(x) for shift 0..3.
    const bool is_sin = (s % 2) == 1;
    const double sign = (s == 1 || s == 2) ? -1.0 : 1.0;
    collected[{a, b, is_sin}] += sign * coef;
  }
  std::vector<OscillatoryTerm> out;
  for (const auto& [key, coef] : collected) {
    if (coef == 0.0) continue;
    const auto [a, b, is_sin] = key;
    out.push_back({coef, a, b, is_sin});
  }
  return out;
}

}  // namespace

std::vector<OscillatoryTerm> dz_expansion(int k, int r) {
  if (k < 0 || r < 0) throw std::invalid_argument("orders must be nonnegative");
  std::vector<RawTerm> terms{{1.0, -k, 0, (k % 2 == 1) ? 3 : 0}};
  for (int step = 0; step < r; ++step) {
    std::map<std::tuple<int, int, int>, double> next;
    for (const auto& term : terms) {
      if (term.z_power != 0) next[{term.z_power - 1, term.theta_power, term.shift}] += term.coef * term.z_power;
      next[{term.z_power, term.theta_power + 1, (term.shift + 1) % 4}] += term.coef;
    }
    terms.clear();
    for (const auto& [key, coef] : next)
      if (coef != 0.0) terms.push_back({coef, std::get<0>(key), std::get<1>(key), std::get<2>(key)});
  }
  std::map<std::tuple<int, int, int>, double> raw;
  for (const auto& term : terms) raw[{term.z_power, term.theta_power, term.shift}] += term.coef;
  return normalize(raw);
}

std::vector<OscillatoryTerm> dz_expansion_leibniz(int k, int r) {
  if (k < 0 || r < 0) throw std::invalid_argument("orders must be nonnegative");
  std::map<std::tuple<int, int, int>, double> raw;
  const int base_shift = (k % 2 == 1) ? 3 : 0;
  double binom = 1.0;
  for (int i = 0; i <= r; ++i) {
    // d^i/dz^i z^{-k} = (-1)^i k (k+1) ... (k+i-1) z^{-k-i}
    double falling = 1.0;
    for (int l = 0; l < i; ++l) falling *= -static_cast<double>(k + l);
    raw[{-k - i, r - i, (base_shift + r - i) % 4}] += binom * falling;
    binom = binom * static_cast<double>(r - i) / static_cast<double>(i + 1);
  }
  return normalize(raw);
}

OscillatoryIntegral oscillatory_integral(const ProfileDerivative& profile, std::span<const OscillatoryTerm> terms,
                                         double z, double t, const ThetaQuadrature& q) {
  if (!(t > 0.0)) throw std::domain_error("time must be positive");
  const auto nodes = theta_nodes(z, t, q);
  int max_theta_power = 0;
  for (const auto& term : terms) max_theta_power = std::max(max_theta_power, term.theta_power);
  std::vector<double> coef(terms.size());
  for (std::size_t i = 0; i < terms.size(); ++i) coef[i] = terms[i].coef * std::pow(z, terms[i].z_power);

  std::array<double, 64> powers{};
  double value = 0.0, t_dt = 0.0;
  for (std::size_t i = 0; i < nodes.theta.size(); ++i) {
    const double th = nodes.theta[i];
    double d, td;
    profile.values(t, th, d, td);
    if (d == 0.0 && td == 0.0) continue;
    const double c = std::cos(z * th), s = std::sin(z * th);
    powers[0] = 1.0;
    for (int p = 1; p <= max_theta_power; ++p) powers[static_cast<std::size_t>(p)] = powers[static_cast<std::size_t>(p - 1)] * th;
    double weight = 0.0;
    for (std::size_t j = 0; j < terms.size(); ++j)
      weight += coef[j] * powers[static_cast<std::size_t>(terms[j].theta_power)] * (terms[j].is_sin ? s : c);
    value += nodes.weight[i] * d * weight;
    t_dt += nodes.weight[i] * td * weight;
  }
  return {value, t_dt};
}

QuadResult kernel_via_parts(int k, std::int64_t m, double t, const ThetaQuadrature& q) {
  if (m == 0) throw std::domain_error("integration by parts needs m != 0");
  if (k < 1) throw std::invalid_argument("derivative order must be at least 1");
  const ProfileDerivative profile(k);
  const double mm = static_cast<double>(m);
  const OscillatoryTerm term{1.0, 0, 0, k % 2 == 1};
  const double scale = parts_sign(k) / (std::numbers::pi * std::pow(mm, k));
  // h_k(m theta) for negative m: cos is even, sin is odd, absorbed into m^k.
  const double z = std::abs(mm);
  const double parity = (k % 2 == 1 && m < 0) ? -1.0 : 1.0;
  const double coarse = oscillatory_integral(profile, {&term, 1}, z, t, q).value;
  ThetaQuadrature fine_q = q;
  fine_q.panels_per_period *= 2.0;
  fine_q.width_scale *= 0.5;
  const double fine = oscillatory_integral(profile, {&term, 1}, z, t, fine_q).value;
  QuadResult res;
  res.value = parity * scale * fine;
  res.error = std::abs(scale * (fine - coarse));
  res.converged = res.error <= 1e-12 + 1e-10 * std::abs(res.value);
  return res;
}

double oscillatory_kernel(double z, double t, int k, const ThetaQuadrature& q) {
  if (!(z > 0.0)) throw std::domain_error("H_k needs z > 0");
  const ProfileDerivative profile(k);
  const OscillatoryTerm term{std::pow(z, -k), 0, 0, k % 2 == 1};
  return oscillatory_integral(profile, {&term, 1}, z, t, q).value;
}

OscillatoryIntegral oscillatory_kernel_dz_both(double z, double t, int k, const ThetaQuadrature& q) {
  if (!(z > 0.0)) throw std::domain_error("H_k needs z > 0");
  const ProfileDerivative profile(k);
  const auto terms = dz_expansion(k, k);
  return oscillatory_integral(profile, terms, z, t, q);
}

double oscillatory_kernel_dz(double z, double t, int k, const ThetaQuadrature& q) {
  return oscillatory_kernel_dz_both(z, t, k, q).value;
}

OscillatoryIntegral profile_moment_integral(int k, int theta_power, int j, double z, double t,
                                            const ThetaQuadrature& q) {
  const ProfileDerivative profile(k);
  const OscillatoryTerm term{1.0, 0, theta_power, j % 2 == 1};
  return oscillatory_integral(profile, {&term, 1}, z, t, q);
}

OscillatoryIntegral ProfileMoments::combine(std::span<const OscillatoryTerm> terms, double z) const {
  OscillatoryIntegral out;
  for (const auto& term : terms) {
    const double c = term.coef * std::pow(z, term.z_power);
    out.value += c * moment(term.theta_power, term.is_sin);
    out.t_dt += c * t_dt_moment(term.theta_power, term.is_sin);
  }
  return out;
}

namespace {

// Node data that depends on z and the rule but not on t.
struct MomentNodes {
  double cut = 0.0, width = 0.0;
  std::vector<double> weight, one_minus_cos, cos_theta, sin_theta;
  std::vector<double> factors;  // per node: theta^p cos(z theta), theta^p sin(z theta) for p = 0..k
};

MomentNodes moment_nodes(int powers, double z, double cut, double width, std::size_t order) {
  MomentNodes m;
  m.cut = cut;
  m.width = width;
  auto set = composite_nodes(refine_toward_left(uniform_panels(0.0, cut, width), width / 32.0), order);
  const std::size_t n = set.x.size(), stride = 2 * static_cast<std::size_t>(powers + 1);
  m.weight = std::move(set.w);
  m.one_minus_cos.resize(n);
  m.cos_theta.resize(n);
  m.sin_theta.resize(n);
  m.factors.resize(n * stride);
  for (std::size_t i = 0; i < n; ++i) {
    const double th = set.x[i], half = std::sin(0.5 * th);
    m.one_minus_cos[i] = 2.0 * half * half;
    m.cos_theta[i] = std::cos(th);
    m.sin_theta[i] = std::sin(th);
    const double c = std::cos(z * th), s = std::sin(z * th);
    double power = 1.0;
    for (int p = 0; p <= powers; ++p) {
      m.factors[i * stride + 2 * static_cast<std::size_t>(p)] = power * c;
      m.factors[i * stride + 2 * static_cast<std::size_t>(p) + 1] = power * s;
      power *= th;
    }
  }
  return m;
}

void accumulate_moments(const ProfileDerivative& profile, const MomentNodes& nodes, double t, ProfileMoments& out) {
  const int k = profile.order();
  const std::size_t stride = out.value.size();
  std::array<double, 64> cp{}, sp{}, tp{};
  tp[0] = 1.0;
  for (int i = 1; i <= k; ++i) tp[static_cast<std::size_t>(i)] = tp[static_cast<std::size_t>(i - 1)] * t;
  const auto& terms = profile.terms();
  for (std::size_t i = 0; i < nodes.weight.size(); ++i) {
    const double gap = 2.0 * t * nodes.one_minus_cos[i];
    if (gap > 745.0) continue;
    const double phi = std::exp(-gap);
    double v, d;
    if (k == 0) {
      v = phi;
      d = -gap * phi;
    } else {
      cp[0] = sp[0] = 1.0;
      for (int j = 1; j <= k; ++j) {
        cp[static_cast<std::size_t>(j)] = cp[static_cast<std::size_t>(j - 1)] * nodes.cos_theta[i];
        sp[static_cast<std::size_t>(j)] = sp[static_cast<std::size_t>(j - 1)] * nodes.sin_theta[i];
      }
      double a_sum = 0.0, d_sum = 0.0;
      for (const auto& term : terms) {
        const double a = term.coefficient * tp[static_cast<std::size_t>(term.t_power)] *
                         cp[static_cast<std::size_t>(term.cos_power)] * sp[static_cast<std::size_t>(term.sin_power)];
        a_sum += a;
        d_sum += a * (static_cast<double>(term.t_power) - gap);
      }
      v = a_sum * phi;
      d = d_sum * phi;
    }
    const double wv = nodes.weight[i] * v, wd = nodes.weight[i] * d;
    const double* f = &nodes.factors[i * stride];
    for (std::size_t j = 0; j < stride; ++j) {
      out.value[j] += wv * f[j];
      out.t_dt[j] += wd * f[j];
    }
  }
}

}  // namespace

std::vector<ProfileMoments> profile_moments(int k, double z, std::span<const double> times, const ThetaQuadrature& q,
                                            int max_power) {
  if (!(z > 0.0)) throw std::domain_error("moments need z > 0");
  const int powers = max_power < 0 ? k : max_power;
  const ProfileDerivative profile(k);
  const double pi = std::numbers::pi;
  std::vector<ProfileMoments> out(times.size());
  MomentNodes nodes;
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double t = times[i];
    if (!(t > 0.0)) throw std::domain_error("time must be positive");
    const double root = std::sqrt(t);
    const double cut = std::min(pi, q.cut_scale / root);
    const double width = std::min(pi / (q.panels_per_period * std::max(z, 1.0)), q.width_scale / root);
    if (cut != nodes.cut || width != nodes.width) nodes = moment_nodes(powers, z, cut, width, q.order);
    auto& m = out[i];
    m.k = k;
    m.value.assign(2 * static_cast<std::size_t>(powers + 1), 0.0);
    m.t_dt.assign(m.value.size(), 0.0);
    accumulate_moments(profile, nodes, t, m);
  }
  return out;
}

std::vector<OscillatoryTerm> moment_by_parts(int k, int theta_power, int j) {
  if (k < 0 || theta_power < 0 || j < 0) throw std::invalid_argument("orders must be nonnegative");
  // (-1)^k int phi_t w^{(k)} with w = theta^m h_j(z theta):
  // w^{(k)} = sum_l C(k, l) (theta^m)^{(l)} z^{k-l} h_j^{(k-l)}(z theta).
  const bool base_sin = j % 2 == 1;
  std::vector<OscillatoryTerm> out;
  double binom = 1.0;
  for (int l = 0; l <= std::min(k, theta_power); ++l) {
    double falling = 1.0;
    for (int i = 0; i < l; ++i) falling *= theta_power - i;
    // r-th derivative of cos or sin: a quarter turn per step.
    const int r = (k - l) % 4;
    const bool is_sin = base_sin != (r % 2 == 1);
    const double sign = base_sin ? (r == 2 || r == 3 ? -1.0 : 1.0) : (r == 1 || r == 2 ? -1.0 : 1.0);
    out.push_back({(k % 2 == 0 ? 1.0 : -1.0) * binom * falling * sign, k - l, theta_power - l, is_sin});
    binom = binom * (k - l) / (l + 1);
  }
  return out;
}

double LogGrid::u(std::size_t i) const {
  if (count < 2) return u_min;
  return u_min + (u_max - u_min) * static_cast<double>(i) / static_cast<double>(count - 1);
}

NormResult l2dtt_norm_samples(std::span<const double> samples, const LogGrid& grid, double tol) {
  if (samples.size() != grid.count || grid.count < 2) throw std::invalid_argument("sample count does not match grid");
  const double h = (grid.u_max - grid.u_min) / static_cast<double>(grid.count - 1);
  double sum = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double w = (i == 0 || i + 1 == samples.size()) ? 0.5 * h : h;
    sum += w * samples[i] * samples[i];
  }
  NormResult res;
  const double lo = samples.front(), hi = samples.back();
  res.tail = 0.5 * lo * lo + hi * hi;
  res.value = std::sqrt(sum);
  res.flagged = res.tail > tol * sum;
  return res;
}

NormResult l2dtt_norm(const std::function<double(double)>& fn, const LogGrid& grid, double tol) {
  std::vector<double> samples(grid.count);
  for (std::size_t i = 0; i < grid.count; ++i) samples[i] = fn(std::exp(grid.u(i)));
  return l2dtt_norm_samples(samples, grid, tol);
}

}  // namespace dhs
