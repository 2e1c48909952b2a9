#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "dhs/bessel.hpp"
#include "dhs/grid.hpp"
#include "dhs/sequence.hpp"

using namespace dhs;

namespace {

// Extended-precision Gauss-Legendre rule, kept separate from the library's rule.
struct LongRule {
  std::vector<long double> x, w;
};

LongRule long_gauss_legendre(int n) {
  LongRule r;
  r.x.resize(static_cast<std::size_t>(n));
  r.w.resize(static_cast<std::size_t>(n));
  const long double pi = 3.141592653589793238462643383279502884L;
  for (int i = 0; i < n; ++i) {
    long double z = std::cos(pi * (i + 0.75L) / (n + 0.5L));
    long double dp = 0;
    for (int it = 0; it < 100; ++it) {
      long double p0 = 1, p1 = z;
      for (int j = 2; j <= n; ++j) {
        const long double p2 = ((2 * j - 1) * z * p1 - (j - 1) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (z * p1 - p0) / (z * z - 1);
      const long double dz = p1 / dp;
      z -= dz;
      if (std::fabs(dz) < 1e-19L) break;
    }
    long double p0 = 1, p1 = z;
    for (int j = 2; j <= n; ++j) {
      const long double p2 = ((2 * j - 1) * z * p1 - (j - 1) * p0) / j;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (z * p1 - p0) / (z * z - 1);
    r.x[static_cast<std::size_t>(i)] = z;
    r.w[static_cast<std::size_t>(i)] = 2 / ((1 - z * z) * dp * dp);
  }
  return r;
}

// I_n(x) = (1/pi) int_0^pi exp(x cos theta) cos(n theta) dtheta in long double.
long double integral_oracle(int n, long double x) {
  static const LongRule rule = long_gauss_legendre(80);
  const long double pi = 3.141592653589793238462643383279502884L;
  long double s = 0;
  for (std::size_t i = 0; i < rule.x.size(); ++i) {
    const long double th = 0.5L * pi * (rule.x[i] + 1);
    s += rule.w[i] * std::exp(x * std::cos(th)) * std::cos(n * th);
  }
  return 0.5L * s;
}

long double series_oracle(int n, long double x) {
  long double term = 1;
  for (int j = 1; j <= n; ++j) term *= (x / 2) / j;
  long double sum = term;
  for (int k = 1; k < 400; ++k) {
    term *= (x / 2) * (x / 2) / (static_cast<long double>(k) * (k + n));
    sum += term;
    if (term < 1e-22L * sum) break;
  }
  return sum;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace

TEST_CASE("values at the origin and the series oracle") {
  CHECK(bessel_i(0, 0.0) == 1.0);
  CHECK(bessel_i(5, 0.0) == 0.0);
  const double i02 = static_cast<double>(series_oracle(0, 2.0L));
  CHECK(i02 == doctest::Approx(2.2795853).epsilon(1e-7));
  CHECK(rel(bessel_i(0, 2.0), i02) < 1e-14);
  CHECK(heat_kernel(0, 1.0) == doctest::Approx(0.3085083).epsilon(1e-7));
  CHECK(rel(heat_kernel(0, 1.0), std::exp(-2.0) * i02) < 1e-14);
}

TEST_CASE("integer orders at x = 2 match the extended-precision integral oracle") {
  for (int n = 0; n <= 8; ++n) {
    const double oracle = static_cast<double>(integral_oracle(n, 2.0L));
    CHECK(rel(bessel_i(n, 2.0), oracle) < 1e-12);
    CHECK(rel(bessel_i(-n, 2.0), oracle) < 1e-12);
  }
}

TEST_CASE("series, recurrence and shifted integral routes agree") {
  for (double x : {0.1, 1.0, 10.0, 100.0}) {
    for (int n = 0; n <= 64; ++n) {
      const double series = scaled_bessel_i_series(n, x);
      const double miller = scaled_bessel_i_miller(n, x);
      const double integral = scaled_bessel_i_integral(n, x);
      CHECK_MESSAGE(rel(miller, series) < 1e-11, "n=", n, " x=", x);
      CHECK_MESSAGE(rel(integral, series) < 1e-11, "n=", n, " x=", x);
    }
    const double oracle = static_cast<double>(std::exp(-static_cast<long double>(x)) * series_oracle(3, x));
    CHECK(rel(scaled_bessel_i(3, x), oracle) < 1e-13);
  }
}

TEST_CASE("large-argument expansion matches the recurrence where both apply") {
  for (double x : {40.0, 200.0, 5000.0}) {
    for (int n : {0, 1, 2}) CHECK(rel(scaled_bessel_i_asymptotic(n, x), scaled_bessel_i_miller(n, x)) < 1e-13);
  }
}

TEST_CASE("three-term recurrence holds at random points") {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> order(1, 400);
  std::uniform_real_distribution<double> logx(std::log(1e-2), std::log(2000.0));
  for (int trial = 0; trial < 300; ++trial) {
    const int n = order(rng);
    const double x = std::exp(logx(rng));
    const double lhs = scaled_bessel_i(n - 1, x) - scaled_bessel_i(n + 1, x);
    const double rhs = 2.0 * n / x * scaled_bessel_i(n, x);
    if (rhs < 1e-290) continue;
    CHECK_MESSAGE(rel(lhs, rhs) < 1e-11, "n=", n, " x=", x);
  }
}

TEST_CASE("generating identity with certified tail") {
  for (double x : log_grid(1e-3, 1e3, 25)) {
    const double t = 0.5 * x;
    const std::int64_t radius = heat_kernel_radius(t, 1e-15);
    auto row = scaled_bessel_i_orders(radius, x);
    double s = row[0];
    for (std::size_t k = 1; k < row.size(); ++k) s += 2.0 * row[k];
    CHECK_MESSAGE(std::abs(s - 1.0) < 1e-13 + heat_kernel_tail_bound(radius, t), "x=", x);
  }
}

TEST_CASE("raw evaluation refuses to overflow") {
  CHECK_THROWS_AS(bessel_i(0, 1000.0), std::overflow_error);
  CHECK(std::isfinite(scaled_bessel_i(0, 1e6)));
  CHECK_THROWS_AS(bessel_i(0, -1.0), std::domain_error);
}

TEST_CASE("heat kernel basics") {
  CHECK(std::abs(heat_kernel(0, 1e-8) - 1.0) < 1e-7);
  CHECK(heat_kernel(7, 3.0) == heat_kernel(-7, 3.0));
  double mass = 0.0;
  for (int n = -60; n <= 60; ++n) mass += heat_kernel(n, 1.0);
  CHECK(std::abs(mass - 1.0) < 1e-12);
  CHECK_THROWS_AS(heat_kernel(0, 0.0), std::domain_error);
  CHECK_THROWS_AS(heat_kernel_dt(0, -1.0), std::domain_error);
}

TEST_CASE("time derivative") {
  for (double t : log_grid(1e-3, 1e3, 60)) CHECK(heat_kernel_dt(0, t) < 0.0);
  const double t = 2.0, h = 1e-6 * t;
  const double fd = (heat_kernel(3, t + h) - heat_kernel(3, t - h)) / (2 * h);
  CHECK(rel(heat_kernel_dt(3, t), fd) < 1e-6);
  for (double tt : {0.01, 1.0, 50.0}) {
    const auto radius = heat_kernel_radius(tt, 1e-16);
    auto d = heat_kernel_dt_row(radius, tt);
    double s = d[0];
    for (std::size_t k = 1; k < d.size(); ++k) s += 2.0 * d[k];
    CHECK(std::abs(s) < 1e-10);
  }
}

TEST_CASE("large-time derivative avoids cancellation") {
  // Where both forms apply they agree; far out only the differentiated expansion keeps digits.
  for (std::int64_t n : {0, 1, 3})
    CHECK(rel(2.0 * scaled_bessel_i_asymptotic_derivative(n, 200.0),
              2.0 * scaled_bessel_i(n + 1, 200.0) + (n / 100.0) * scaled_bessel_i(n, 200.0) - 2.0 * scaled_bessel_i(n, 200.0)) < 1e-9);
  // Leading behaviour -G / (2t) as t grows.
  for (double t : {1e8, 1e12, 1e20}) {
    const double g = heat_kernel(2, t);
    CHECK(rel(heat_kernel_dt(2, t), -g / (2.0 * t)) < 1e-6);
    CHECK(rel(heat_kernel_dt_row(2, t)[2], heat_kernel_dt(2, t)) < 1e-15);
  }
  const double t = 5e4, h = 1e-3 * t;
  const double fd = (heat_kernel(1, t + h) - heat_kernel(1, t - h)) / (2 * h);
  CHECK(rel(heat_kernel_dt(1, t), fd) < 1e-5);
}

TEST_CASE("heat equation against the second difference") {
  for (double t : log_grid(1e-3, 1e3, 20)) {
    auto g = heat_kernel_row(51, t);
    auto d = heat_kernel_dt_row(50, t);
    for (int n = 0; n <= 50; ++n) {
      const double lap = g[static_cast<std::size_t>(std::abs(n - 1))] + g[static_cast<std::size_t>(n + 1)] -
                         2.0 * g[static_cast<std::size_t>(n)];
      CHECK(std::abs(d[static_cast<std::size_t>(n)] - lap) < 1e-12);
    }
  }
}

TEST_CASE("semigroup law") {
  for (double s : {0.1, 1.0, 10.0})
    for (double t : {0.1, 1.0, 10.0}) {
      const auto rs = heat_kernel_radius(s, 1e-14), rt = heat_kernel_radius(t, 1e-14);
      auto row = [](std::int64_t r, double time) {
        auto half = heat_kernel_row(r, time);
        std::vector<cplx> full(static_cast<std::size_t>(2 * r + 1));
        for (std::int64_t n = -r; n <= r; ++n) full[static_cast<std::size_t>(n + r)] = half[static_cast<std::size_t>(std::abs(n))];
        return Sequence(-r, full);
      };
      auto conv = convolve(row(rs, s), row(rt, t));
      for (std::int64_t n = -5; n <= 5; ++n) CHECK(std::abs(conv[n].real() - heat_kernel(n, s + t)) < 1e-9);
    }
}

TEST_CASE("torus symbol of the heat kernel") {
  for (double t : {0.01, 1.0, 30.0}) {
    const auto r = heat_kernel_radius(t, 1e-10);
    CHECK(heat_kernel_tail_bound(r, t) <= 1e-10);
    auto half = heat_kernel_row(r, t);
    std::vector<cplx> full(static_cast<std::size_t>(2 * r + 1));
    for (std::int64_t n = -r; n <= r; ++n) full[static_cast<std::size_t>(n + r)] = half[static_cast<std::size_t>(std::abs(n))];
    Sequence g(-r, full);
    const auto grid = TorusGrid::for_support(g.size());
    auto values = fourier(g, grid);
    for (std::size_t j = 0; j < grid.size; ++j) {
      const double expected = std::exp(-2.0 * t * (1.0 - std::cos(grid.theta(j))));
      CHECK(std::abs(values[j] - expected) < 1e-8);
    }
  }
}

TEST_CASE("chernoff tail dominates the true tail") {
  for (double t : {0.05, 1.0, 20.0, 500.0}) {
    for (std::int64_t r : {0, 3, 10, 40, 100}) {
      auto row = heat_kernel_row(r, t);
      double inside = row[0];
      for (std::size_t k = 1; k < row.size(); ++k) inside += 2.0 * row[k];
      CHECK(1.0 - inside <= heat_kernel_tail_bound(r, t) + 1e-14);
    }
  }
  CHECK(heat_kernel_radius(1.0, 1e-12) < 30);
}

TEST_CASE("heat kernel table invariants and CSV") {
  HeatKernelTable table(40, parse_log_grid("0.01:100:9"));
  for (std::size_t ti = 0; ti < table.t_grid().size(); ++ti) {
    double inside = table.g(0, ti);
    for (int n = 1; n <= 40; ++n) {
      CHECK(table.g(n, ti) >= 0.0);
      CHECK(table.g(n, ti) == table.g(-n, ti));
      inside += 2.0 * table.g(n, ti);
    }
    CHECK(inside <= 1.0 + 1e-14);
    CHECK(inside + table.tail_bound(ti) >= 1.0 - 1e-14);
  }
  std::ostringstream out;
  table.write_csv(out);
  CHECK(out.str().rfind("n,t,G,dG\n", 0) == 0);
  CHECK_THROWS_AS(parse_log_grid("1:2"), std::invalid_argument);
}
