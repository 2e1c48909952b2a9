#include "dhs/bessel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <stdexcept>

namespace dhs {

namespace {

constexpr double kRescale = 1e250;
// Miller start orders put the start value this many e-folds below the target order.
constexpr double kMillerMargin = 40.0;

bool use_asymptotic(double n, double x) { return x >= 40.0 && x >= 8.0 * n * n; }

void check_argument(double x) {
  if (!(x >= 0.0)) throw std::domain_error("Bessel argument must be nonnegative");
}

std::int64_t miller_start(std::int64_t max_order, double x) {
  const double target = scaled_bessel_i_exponent(static_cast<double>(max_order), x) - kMillerMargin;
  std::int64_t lo = max_order + 10;
  if (scaled_bessel_i_exponent(static_cast<double>(lo), x) <= target) return lo;
  std::int64_t hi = lo;
  while (scaled_bessel_i_exponent(static_cast<double>(hi), x) > target) {
    lo = hi;
    hi = 2 * hi;
  }
  while (hi - lo > 1) {
    const std::int64_t mid = lo + (hi - lo) / 2;
    (scaled_bessel_i_exponent(static_cast<double>(mid), x) > target ? lo : hi) = mid;
  }
  return hi;
}

std::vector<double> miller_orders(std::int64_t max_order, double x) {
  const std::int64_t start = miller_start(max_order, x);
  std::vector<double> out(static_cast<std::size_t>(max_order) + 1, 0.0);
  double above = 0.0, cur = 1.0, norm = 0.0;
  for (std::int64_t k = start; k >= 1; --k) {
    if (k <= max_order) out[static_cast<std::size_t>(k)] = cur;
    norm += 2.0 * cur;
    const double below = (2.0 * static_cast<double>(k) / x) * cur + above;
    above = cur;
    cur = below;
    if (std::abs(cur) > kRescale) {
      cur /= kRescale;
      above /= kRescale;
      norm /= kRescale;
      for (std::int64_t j = k; j <= max_order; ++j) out[static_cast<std::size_t>(j)] /= kRescale;
    }
  }
  out[0] = cur;
  norm += cur;
  for (auto& v : out) v /= norm;
  return out;
}

}  // namespace

double scaled_bessel_i_exponent(double n, double x) {
  n = std::abs(n);
  if (x == 0.0) return n == 0.0 ? 0.0 : -INFINITY;
  const double r = std::hypot(x, n);
  return n * n / (r + x) - n * std::asinh(n / x);
}

double scaled_bessel_i_series(std::int64_t n, double x) {
  check_argument(x);
  n = std::abs(n);
  if (x == 0.0) return n == 0 ? 1.0 : 0.0;
  const double half = 0.5 * x;
  double term;
  if (x < 600.0) {
    term = std::exp(-x);
    for (std::int64_t j = 1; j <= n; ++j) term *= half / static_cast<double>(j);
  } else {
    term = std::exp(-x + static_cast<double>(n) * std::log(half) - std::lgamma(static_cast<double>(n) + 1.0));
  }
  if (term == 0.0) return 0.0;
  double sum = term;
  const double q = half * half;
  for (std::int64_t k = 1;; ++k) {
    term *= q / (static_cast<double>(k) * static_cast<double>(k + n));
    sum += term;
    if (term <= 1e-17 * sum && static_cast<double>(k) > half) break;
  }
  return sum;
}

double scaled_bessel_i_miller(std::int64_t n, double x) {
  check_argument(x);
  n = std::abs(n);
  if (x == 0.0) return n == 0 ? 1.0 : 0.0;
  return miller_orders(n, x)[static_cast<std::size_t>(n)];
}

double scaled_bessel_i_asymptotic(std::int64_t n, double x) {
  check_argument(x);
  if (x == 0.0) throw std::domain_error("asymptotic expansion needs x > 0");
  const double mu = 4.0 * static_cast<double>(n) * static_cast<double>(n);
  double term = 1.0, sum = 1.0;
  for (int k = 1; k < 200; ++k) {
    const double odd = 2.0 * k - 1.0;
    const double next = term * (-(mu - odd * odd)) / (8.0 * k * x);
    if (std::abs(next) >= std::abs(term) && k > 1) break;
    term = next;
    sum += term;
    if (std::abs(term) < 1e-17 * std::abs(sum)) break;
  }
  return sum / std::sqrt(2.0 * std::numbers::pi * x);
}

double scaled_bessel_i_asymptotic_derivative(std::int64_t n, double x) {
  check_argument(x);
  if (x == 0.0) throw std::domain_error("asymptotic expansion needs x > 0");
  const double mu = 4.0 * static_cast<double>(n) * static_cast<double>(n);
  // Term-by-term derivative of x^{-1/2} sum_k c_k x^{-k}.
  double term = 1.0, sum = -0.5;
  for (int k = 1; k < 200; ++k) {
    const double odd = 2.0 * k - 1.0;
    const double next = term * (-(mu - odd * odd)) / (8.0 * k * x);
    if (std::abs(next) >= std::abs(term) && k > 1) break;
    term = next;
    sum -= (k + 0.5) * term;
    if (std::abs(term) < 1e-17 * std::abs(sum)) break;
  }
  return sum / (x * std::sqrt(2.0 * std::numbers::pi * x));
}

double scaled_bessel_i_integral(std::int64_t n, double x) {
  check_argument(x);
  n = std::abs(n);
  if (x == 0.0) return n == 0 ? 1.0 : 0.0;
  const double nn = static_cast<double>(n);
  const double r = std::hypot(x, nn);
  const double eta = scaled_bessel_i_exponent(nn, x);
  auto integrand = [&](double phi) {
    return std::exp(r * (std::cos(phi) - 1.0) + eta) * std::cos(nn * (std::sin(phi) - phi));
  };
  auto trapezoid = [&](std::size_t m) {
    const double h = std::numbers::pi / static_cast<double>(m);
    double s = 0.5 * (integrand(0.0) + integrand(std::numbers::pi));
    for (std::size_t j = 1; j < m; ++j) s += integrand(h * static_cast<double>(j));
    return s / static_cast<double>(m);
  };
  double prev = trapezoid(32);
  for (std::size_t m = 64; m <= (std::size_t{1} << 16); m *= 2) {
    const double cur = trapezoid(m);
    if (std::abs(cur - prev) <= 1e-15 * std::abs(cur)) return cur;
    prev = cur;
  }
  return prev;
}

double scaled_bessel_i(std::int64_t n, double x) {
  check_argument(x);
  n = std::abs(n);
  if (x == 0.0) return n == 0 ? 1.0 : 0.0;
  if (x <= 1.0) return scaled_bessel_i_series(n, x);
  if (use_asymptotic(static_cast<double>(n), x)) return scaled_bessel_i_asymptotic(n, x);
  return scaled_bessel_i_miller(n, x);
}

std::vector<double> scaled_bessel_i_orders(std::int64_t max_order, double x) {
  check_argument(x);
  if (max_order < 0) return {};
  std::vector<double> out(static_cast<std::size_t>(max_order) + 1, 0.0);
  if (x == 0.0) {
    out[0] = 1.0;
    return out;
  }
  if (x <= 1.0) {
    for (std::int64_t k = 0; k <= max_order; ++k) {
      out[static_cast<std::size_t>(k)] = scaled_bessel_i_series(k, x);
      if (out[static_cast<std::size_t>(k)] == 0.0) break;
    }
    return out;
  }
  if (use_asymptotic(static_cast<double>(max_order), x)) {
    for (std::int64_t k = 0; k <= max_order; ++k) out[static_cast<std::size_t>(k)] = scaled_bessel_i_asymptotic(k, x);
    return out;
  }
  return miller_orders(max_order, x);
}

double bessel_i(std::int64_t n, double x) {
  check_argument(x);
  if (x > 700.0) throw std::overflow_error("bessel_i overflows for x > 700; use scaled_bessel_i");
  return std::exp(x) * scaled_bessel_i(n, x);
}

namespace {

void check_time(double t) {
  if (!(t > 0.0)) throw std::domain_error("heat kernel time must be positive");
}

}  // namespace

double heat_kernel(std::int64_t n, double t) {
  check_time(t);
  return scaled_bessel_i(n, 2.0 * t);
}

double heat_kernel_dt(std::int64_t n, double t) {
  check_time(t);
  const std::int64_t m = std::abs(n);
  if (use_asymptotic(static_cast<double>(m + 1), 2.0 * t)) return 2.0 * scaled_bessel_i_asymptotic_derivative(m, 2.0 * t);
  auto row = scaled_bessel_i_orders(m + 1, 2.0 * t);
  const double g = row[static_cast<std::size_t>(m)];
  return 2.0 * row[static_cast<std::size_t>(m + 1)] + (static_cast<double>(m) / t) * g - 2.0 * g;
}

std::vector<double> heat_kernel_row(std::int64_t max_n, double t) {
  check_time(t);
  return scaled_bessel_i_orders(max_n, 2.0 * t);
}

std::vector<double> heat_kernel_dt_row(std::int64_t max_n, double t) {
  check_time(t);
  std::vector<double> out(static_cast<std::size_t>(max_n) + 1);
  if (use_asymptotic(static_cast<double>(max_n + 1), 2.0 * t)) {
    // The recurrence form cancels catastrophically here; differentiate the expansion instead.
    for (std::int64_t n = 0; n <= max_n; ++n)
      out[static_cast<std::size_t>(n)] = 2.0 * scaled_bessel_i_asymptotic_derivative(n, 2.0 * t);
    return out;
  }
  auto g = scaled_bessel_i_orders(max_n + 1, 2.0 * t);
  for (std::int64_t n = 0; n <= max_n; ++n) {
    const auto i = static_cast<std::size_t>(n);
    out[i] = 2.0 * g[i + 1] + (static_cast<double>(n) / t) * g[i] - 2.0 * g[i];
  }
  return out;
}

double heat_kernel_tail_bound(std::int64_t radius, double t) {
  check_time(t);
  if (radius < 0) return 1.0;
  // Two-sided Chernoff bound for the difference of two Poisson(t) variables,
  // optimized at sinh(s) = (radius + 1) / (2t); the exponent equals the
  // scaled Bessel size estimate at order radius + 1 and argument 2t.
  const double e = scaled_bessel_i_exponent(static_cast<double>(radius + 1), 2.0 * t);
  return std::min(1.0, 2.0 * std::exp(e));
}

std::int64_t heat_kernel_radius(double t, double tol) {
  check_time(t);
  if (heat_kernel_tail_bound(0, t) <= tol) return 0;
  std::int64_t lo = 0, hi = 1;
  while (heat_kernel_tail_bound(hi, t) > tol) {
    lo = hi;
    hi *= 2;
  }
  while (hi - lo > 1) {
    const std::int64_t mid = lo + (hi - lo) / 2;
    (heat_kernel_tail_bound(mid, t) > tol ? lo : hi) = mid;
  }
  return hi;
}

HeatKernelTable::HeatKernelTable(std::int64_t n_max, std::vector<double> t_grid)
    : n_max_(n_max), t_grid_(std::move(t_grid)) {
  if (n_max_ < 0) throw std::invalid_argument("table radius must be nonnegative");
  g_.reserve(t_grid_.size());
  dg_.reserve(t_grid_.size());
  tail_.reserve(t_grid_.size());
  for (double t : t_grid_) {
    check_time(t);
    auto row = heat_kernel_row(n_max_, t);
    auto d = heat_kernel_dt_row(n_max_, t);
    g_.push_back(std::move(row));
    dg_.push_back(std::move(d));
    tail_.push_back(heat_kernel_tail_bound(n_max_, t));
  }
}

double HeatKernelTable::g(std::int64_t n, std::size_t ti) const {
  n = std::abs(n);
  return n > n_max_ ? 0.0 : g_[ti][static_cast<std::size_t>(n)];
}

double HeatKernelTable::dg(std::int64_t n, std::size_t ti) const {
  n = std::abs(n);
  return n > n_max_ ? 0.0 : dg_[ti][static_cast<std::size_t>(n)];
}

void HeatKernelTable::write_csv(std::ostream& out) const {
  char buf[128];
  out << "n,t,G,dG\n";
  for (std::size_t ti = 0; ti < t_grid_.size(); ++ti)
    for (std::int64_t n = 0; n <= n_max_; ++n) {
      std::snprintf(buf, sizeof buf, "%lld,%.17g,%.17g,%.17g\n", static_cast<long long>(n), t_grid_[ti],
                    g(n, ti), dg(n, ti));
      out << buf;
    }
}

}  // namespace dhs
