#include "dhs/multiplier.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "dhs/bessel.hpp"
#include "dhs/parallel.hpp"

namespace dhs {

namespace {

constexpr double kPi = std::numbers::pi;

double logsign_profile(double t) {
  const double s = std::sin(std::log(t));
  return s > 0.0 ? 1.0 : (s < 0.0 ? -1.0 : 0.0);
}

// sum_k s_k (e^{-lambda e^{k pi}} - e^{-lambda e^{(k+1) pi}}), s_k = (-1)^k.
double logsign_symbol(double lambda) {
  const double shift = std::log(lambda);
  const auto k_lo = static_cast<long>(std::floor((-shift - 50.0) / kPi)) - 1;
  const auto k_hi = static_cast<long>(std::ceil((-shift + std::log(800.0)) / kPi)) + 1;
  double sum = 0.0;
  for (long k = k_lo; k <= k_hi; ++k) {
    const double a = lambda * std::exp(k * kPi);
    const double b = lambda * std::exp((k + 1) * kPi);
    const double diff = -std::exp(-a) * std::expm1(a - b);
    sum += (k % 2 == 0) ? diff : -diff;
  }
  return sum;
}

}  // namespace

Profile parse_profile(const std::string& name) {
  if (name == "one") return Profile::one;
  if (name == "exp") return Profile::exp;
  if (name == "indicator") return Profile::indicator;
  if (name == "logsign") return Profile::logsign;
  throw std::invalid_argument("unknown profile '" + name + "' (expected one|exp|indicator|logsign)");
}

std::string profile_name(Profile profile) {
  switch (profile) {
    case Profile::one: return "one";
    case Profile::exp: return "exp";
    case Profile::indicator: return "indicator";
    case Profile::logsign: return "logsign";
  }
  return "?";
}

LaplaceMultiplier::LaplaceMultiplier(Profile profile) : name_(profile_name(profile)), profile_(profile) {
  switch (profile) {
    case Profile::one: psi_ = [](double) { return 1.0; }; break;
    case Profile::exp: psi_ = [](double t) { return std::exp(-t); }; break;
    case Profile::indicator:
      psi_ = [](double t) { return t <= 1.0 ? 1.0 : 0.0; };
      jumps_ = {0.0};
      break;
    case Profile::logsign: psi_ = logsign_profile; break;
  }
}

LaplaceMultiplier::LaplaceMultiplier(std::string name, std::function<double(double)> psi, double sup_norm,
                                     std::vector<double> jumps_in_log_time)
    : name_(std::move(name)), psi_(std::move(psi)), sup_norm_(sup_norm), jumps_(std::move(jumps_in_log_time)) {
  if (!(sup_norm_ >= 0.0)) throw std::invalid_argument("profile bound must be nonnegative");
  std::sort(jumps_.begin(), jumps_.end());
}

double LaplaceMultiplier::psi(double t) const { return psi_(t); }

std::optional<LaplaceMultiplier::Tail> LaplaceMultiplier::tail_beyond(double t) const {
  if (!profile_) return std::nullopt;
  switch (*profile_) {
    case Profile::one: return Tail{1.0, 0.0};
    case Profile::exp: return Tail{0.0, std::exp(-t)};
    case Profile::indicator: return Tail{0.0, t >= 1.0 ? 0.0 : 1.0};
    case Profile::logsign: return std::nullopt;
  }
  return std::nullopt;
}

std::vector<double> LaplaceMultiplier::jumps(double u_lo, double u_hi) const {
  std::vector<double> out;
  if (profile_ == Profile::logsign) {
    for (auto k = static_cast<long>(std::ceil(u_lo / kPi)); k * kPi <= u_hi; ++k) out.push_back(k * kPi);
    return out;
  }
  for (double u : jumps_)
    if (u >= u_lo && u <= u_hi) out.push_back(u);
  return out;
}

double LaplaceMultiplier::symbol(double lambda) const {
  if (lambda < 0.0) throw std::domain_error("symbol needs lambda >= 0");
  if (!profile_) {
    if (lambda == 0.0) return 0.0;
    auto r = symbol_numeric(lambda);
    if (!r.converged)
      throw std::runtime_error("Laplace quadrature for profile '" + name_ + "' did not converge at lambda=" +
                               std::to_string(lambda) + " (error " + std::to_string(r.error) + ")");
    return r.value;
  }
  switch (*profile_) {
    case Profile::one: return lambda > 0.0 ? 1.0 : 0.0;
    case Profile::exp: return lambda / (1.0 + lambda);
    case Profile::indicator: return -std::expm1(-lambda);
    case Profile::logsign: return lambda > 0.0 ? logsign_symbol(lambda) : 0.0;
  }
  return 0.0;
}

QuadResult LaplaceMultiplier::symbol_numeric(double lambda, double tolerance) const {
  if (!(lambda > 0.0)) throw std::domain_error("numeric symbol needs lambda > 0");
  // s = e^v, t = s / lambda, so a jump at u sits at v = u + log(lambda).
  const double v_lo = -45.0, v_hi = 4.5, shift = std::log(lambda);
  Breakpoints cuts;
  for (double u : jumps(v_lo - shift, v_hi - shift)) cuts.push_back(u + shift);
  auto coarse = merge_breakpoints(uniform_panels(v_lo, v_hi, 0.5), cuts);
  auto integrand = [&](double v) {
    const double s = std::exp(v);
    return std::exp(-s) * s * psi_(s / lambda);
  };
  Breakpoints fine;
  for (std::size_t i = 0; i + 1 < coarse.size(); ++i) {
    fine.push_back(coarse[i]);
    fine.push_back(0.5 * (coarse[i] + coarse[i + 1]));
  }
  fine.push_back(coarse.back());
  const double a = integrate(integrand, coarse, 16);
  const double b = integrate(integrand, fine, 16);
  // Neglected ends: int_0^{e^v_lo} e^{-s} ds and int_{e^v_hi}^inf e^{-s} ds.
  const double ends = sup_norm_ * (std::exp(v_lo) + std::exp(-std::exp(v_hi)));
  QuadResult r;
  r.value = b;
  r.error = std::abs(a - b) + ends;
  r.converged = r.error <= tolerance * std::max(1.0, sup_norm_);
  return r;
}

double LaplaceMultiplier::torus_symbol(double theta) const {
  // 2 (1 - cos theta) = 4 sin^2(theta / 2) without cancellation near 0.
  const double s = std::sin(0.5 * theta);
  return symbol(4.0 * s * s);
}

Breakpoints KernelQuadrature::panels(const LaplaceMultiplier& mult) const {
  return merge_breakpoints(uniform_panels(u_min, u_max, max_panel), mult.jumps(u_min, u_max));
}

double MultiplierKernel::operator()(std::int64_t n) const {
  const std::int64_t m = n < 0 ? -n : n;
  if (m > radius()) throw std::out_of_range("kernel requested beyond its computed radius");
  return values[static_cast<std::size_t>(m)];
}

MultiplierKernel multiplier_kernel_row(const LaplaceMultiplier& mult, std::int64_t radius, const KernelQuadrature& q) {
  if (radius < 0) throw std::invalid_argument("kernel radius must be nonnegative");
  const auto panels = q.panels(mult);
  const auto& rule = gauss_legendre(q.order);
  const std::size_t count = panels.size() - 1, width = static_cast<std::size_t>(radius) + 1;
  // One partial sum per panel, combined in panel order for determinism.
  std::vector<std::vector<double>> partial(count);
  parallel_for(count, [&](std::size_t p) {
    std::vector<double> acc(width, 0.0);
    const double half = 0.5 * (panels[p + 1] - panels[p]), mid = 0.5 * (panels[p + 1] + panels[p]);
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      const double u = mid + half * rule.nodes[i], t = std::exp(u);
      const double weight = mult.psi(t) * half * rule.weights[i] * t;
      if (weight == 0.0) continue;
      const auto d = heat_kernel_dt_row(radius, t);
      for (std::size_t n = 0; n < width; ++n) acc[n] -= weight * d[n];
    }
    partial[p] = std::move(acc);
  });
  MultiplierKernel out;
  out.values.assign(width, 0.0);
  for (const auto& acc : partial)
    for (std::size_t n = 0; n < width; ++n) out.values[n] += acc[n];
  // |dG/dt| has one sign near 0 and beyond its last turning point, so the
  // neglected pieces are bounded by the change of G across them.
  const double t_lo = std::exp(q.u_min), t_hi = std::exp(q.u_max);
  out.tail = mult.sup_norm() * ((1.0 - heat_kernel(0, t_lo)) + heat_kernel(0, t_hi));
  const double turning = static_cast<double>(radius) * static_cast<double>(radius);
  out.flagged = out.tail > q.tolerance || t_hi < turning;
  return out;
}

QuadResult multiplier_kernel(const LaplaceMultiplier& mult, std::int64_t n, const KernelQuadrature& q) {
  const std::int64_t m = n < 0 ? -n : n;
  auto row = multiplier_kernel_row(mult, m, q);
  return {row.values.back(), row.tail, !row.flagged};
}

}  // namespace dhs
