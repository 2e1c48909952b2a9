#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "dhs/bessel.hpp"
#include "dhs/decay.hpp"
#include "dhs/operators.hpp"
#include "dhs/quadrature.hpp"

using namespace dhs;

namespace {

Sequence random_real(std::mt19937_64& rng, std::int64_t offset, std::size_t len, bool nonnegative = false) {
  std::normal_distribution<double> normal;
  std::vector<cplx> v(len);
  for (auto& x : v) x = nonnegative ? std::abs(normal(rng)) : normal(rng);
  return Sequence(offset, std::move(v));
}

double l2(const Sequence& f) { return lp_quasinorm(f, 2.0); }
double l1(const Sequence& f) { return lp_quasinorm(f, 1.0); }
double sup(const Sequence& f) { return lp_quasinorm(f, std::numeric_limits<double>::infinity()); }

cplx total(const Sequence& f) {
  cplx s = 0.0;
  for (auto v : f.values()) s += v;
  return s;
}

OperatorConfig light_config() {
  OperatorConfig cfg;
  cfg.t_grid = log_grid_per_decade(1e-6, 1e3, 30);
  cfg.g_grid = LogGrid{-10.0, 10.0, 201};
  return cfg;
}

}  // namespace

TEST_CASE("discrete Laplacian") {
  CHECK(discrete_laplacian(Sequence::delta(0)) == Sequence(-1, {-1.0, 2.0, -1.0}));
  auto flat = discrete_laplacian(Sequence(0, std::vector<cplx>(10, 3.0)));
  for (std::int64_t n = 1; n <= 8; ++n) CHECK(flat[n] == cplx(0.0));
  CHECK(discrete_laplacian(Sequence()).empty());

  std::mt19937_64 rng(1);
  auto f = random_real(rng, -4, 20);
  auto lf = discrete_laplacian(f);
  for (double th : {-3.0, -0.7, 0.0, 0.2, 1.9, 3.1})
    CHECK(std::abs(fourier_at(lf, th) - 2.0 * (1.0 - std::cos(th)) * fourier_at(f, th)) < 1e-12);
}

TEST_CASE("heat semigroup") {
  for (double t : {0.01, 1.0, 30.0}) {
    auto w = heat_apply(Sequence::delta(0), t);
    for (std::int64_t n : {0, 1, -3, 7}) CHECK(std::abs(w[n] - heat_kernel(n, t)) < 1e-15);
  }
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 5; ++trial) {
    auto f = random_real(rng, -10, 30);
    auto w = heat_apply(f, 1.0);
    CHECK(std::abs(total(w) - total(f)) < 1e-10);
    CHECK(sup(w) <= sup(f));
    CHECK(l1(w) <= l1(f) * (1 + 1e-14));
    // Commutes with the Laplacian and with shifts.
    CHECK(max_abs_difference(heat_apply(discrete_laplacian(f), 1.0), discrete_laplacian(w)) < 1e-10);
    CHECK(heat_apply(f.shifted(17), 1.0) == w.shifted(17));
    auto pos = random_real(rng, 0, 12, true);
    for (auto v : heat_apply(pos, 2.5).values()) CHECK(v.real() >= 0.0);
  }
  auto twice = heat_apply(heat_apply(Sequence::delta(0), 0.5), 0.5);
  CHECK(max_abs_difference(twice, heat_apply(Sequence::delta(0), 1.0)) < 1e-9);
  CHECK_THROWS_AS(heat_apply(Sequence::delta(0), 0.0), std::domain_error);
}

TEST_CASE("maximal operator") {
  const auto cfg = light_config();
  auto r = maximal(Sequence::delta(0), cfg);
  CHECK(std::abs(r.value[0] - 1.0) < 1e-5);
  CHECK(r.refinement_delta < 1e-3);

  std::mt19937_64 rng(3);
  auto f = random_real(rng, -5, 11);
  auto m = maximal(f, cfg);
  auto w1 = heat_apply(f, 1.0);
  for (std::int64_t n = f.first() - 20; n <= f.last() + 20; ++n) {
    CHECK(m.value[n].real() >= std::abs(w1[n]) - 1e-13);
    CHECK(m.value[n].imag() == 0.0);
  }
  // Adding the midpoints never lowers the supremum.
  OperatorConfig fine = cfg;
  fine.t_grid = log_grid_per_decade(1e-6, 1e3, 60);
  auto mf = maximal(f, fine);
  for (std::int64_t n = f.first() - 20; n <= f.last() + 20; ++n) CHECK(mf.value[n].real() >= m.value[n].real());
  CHECK(maximal(f.shifted(-40), cfg).value == m.value.shifted(-40));

  OperatorConfig bad = cfg;
  bad.t_grid = {1.0, 0.5};
  CHECK_THROWS_AS(maximal(f, bad), std::invalid_argument);
}

TEST_CASE("maximal operator of a point mass decays like 1/n") {
  OperatorConfig cfg;
  cfg.t_grid = log_grid_per_decade(1e-6, 1e6, 30);
  auto r = maximal(Sequence::delta(0), cfg);
  CHECK(std::abs(r.value[0] - 1.0) < 1e-5);
  for (std::int64_t n = 1; n <= 512; ++n) {
    const double scaled = r.value[n].real() * (n + 1.0);
    CHECK(scaled > 0.2);
    CHECK(scaled < 0.5);
  }
}

TEST_CASE("g-function") {
  const auto cfg = light_config();
  CHECK(g_function(Sequence(), cfg).value.empty());
  CHECK(g_function(Sequence(0, {0.0, 0.0}), cfg).value.empty());

  auto g = g_function(Sequence::delta(0), cfg);
  CHECK_FALSE(g.flagged);
  OperatorConfig doubled = cfg;
  doubled.g_grid = cfg.g_grid.refined();
  CHECK(std::abs(g_function(Sequence::delta(0), doubled).value[0].real() / g.value[0].real() - 1.0) < 1e-6);

  // The heat-equation route against a central difference in t of W_t f.
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> pick(-8, 8);
  const LogGrid probe{-10.0, 14.0, 241};
  OperatorConfig probe_cfg = cfg;
  probe_cfg.g_grid = probe;
  for (int trial = 0; trial < 10; ++trial) {
    auto f = random_real(rng, -2, 5);
    const std::int64_t n = pick(rng);
    std::vector<double> samples(probe.count);
    for (std::size_t i = 0; i < probe.count; ++i) {
      const double t = std::exp(probe.u(i)), h = 1e-4;
      samples[i] = std::abs(t * (heat_apply(f, t * (1 + h))[n] - heat_apply(f, t * (1 - h))[n]) / (2 * h * t));
    }
    // Beyond the grid t d/dt W_t f(n) ~ -sum(f) / (2 sqrt(4 pi t)).
    const double mass = total(f).real(), t_hi = std::exp(probe.u_max);
    const double beyond = mass * mass / (16.0 * std::numbers::pi * t_hi);
    const double inside = l2dtt_norm_samples(samples, probe, 1.0).value;
    const double fd = std::sqrt(inside * inside + 0.5 * samples.front() * samples.front() + beyond);
    CHECK(std::abs(g_function(f, probe_cfg).value[n].real() - fd) <= 1e-5 * fd);
  }

  // Too short a time range leaves a visible tail.
  OperatorConfig short_grid = cfg;
  short_grid.g_grid = LogGrid{-2.0, 2.0, 41};
  CHECK(g_function(Sequence::delta(0), short_grid).flagged);

  auto f = random_real(rng, 3, 9);
  CHECK(g_function(f.shifted(25), cfg).value == g_function(f, cfg).value.shifted(25));
}

TEST_CASE("g-function of a point mass decays like 1/n") {
  OperatorConfig cfg;
  cfg.g_grid = LogGrid{-10.0, 19.5, 296};
  auto g = g_function(Sequence::delta(0), cfg);
  CHECK_FALSE(g.flagged);
  double lo = 1e300, hi = 0.0;
  for (std::int64_t n = 1; n <= 512; ++n) {
    const double scaled = g.value[n].real() * (n + 1.0);
    lo = std::min(lo, scaled);
    hi = std::max(hi, scaled);
  }
  CHECK(hi / lo < 2.5);
}

TEST_CASE("discrete Hilbert transform") {
  auto h = hilbert(Sequence::delta(0));
  CHECK(h.value[0] == cplx(2.0));
  CHECK(std::abs(h.value[1] - 2.0 / 3.0) < 1e-15);
  CHECK(h.value[-1] == cplx(-2.0));
  CHECK(h.margin == 1024);
  CHECK(h.vanishing_moments == 0);
  CHECK(std::isfinite(h.tail));
  CHECK(std::isinf(hilbert(Sequence::delta(0), 1.0).tail));

  std::mt19937_64 rng(5);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    auto f = random_real(rng, -3, 1 + trial % 16);
    worst = std::max(worst, l2(hilbert(f, 2.0, 256).value) / l2(f));
  }
  CHECK(worst <= std::numbers::pi + 0.1);

  auto f = random_real(rng, 0, 6);
  CHECK(hilbert(f.shifted(9), 2.0, 100).value == hilbert(f, 2.0, 100).value.shifted(9));
}

TEST_CASE("Hilbert transform of a moment-killed sequence") {
  // The k-fold difference of a point mass has k vanishing moments.
  for (int k = 1; k <= 3; ++k) {
    Sequence b = Sequence::delta(0);
    for (int i = 0; i < k; ++i) b = b - b.shifted(1);
    auto h = hilbert(b, 1.0, 2048);
    CHECK(h.vanishing_moments == k);
    CHECK(std::isfinite(h.tail));
    std::vector<double> x, y;
    for (std::int64_t n = 64; n <= 2048; n *= 2) {
      x.push_back(static_cast<double>(n));
      y.push_back(std::abs(h.value[n]));
    }
    CHECK(std::abs(fit_log_log(x, y).slope + (k + 1.0)) < 0.2);
  }
}

TEST_CASE("multipliers") {
  std::mt19937_64 rng(6);
  auto f = random_real(rng, -6, 13);
  const LaplaceMultiplier one(Profile::one);
  for (auto path : {MultiplierPath::fourier, MultiplierPath::kernel})
    CHECK(max_abs_difference(multiplier_apply(f, one, path).value, f) < 1e-10);

  const LaplaceMultiplier exp_mult(Profile::exp);
  auto t = multiplier_apply(Sequence::delta(0), exp_mult, MultiplierPath::fourier);
  auto symbol = [&](double th) { return cplx(exp_mult.torus_symbol(th)); };
  for (std::int64_t n : {0, 1, -1, 3, -3}) CHECK(std::abs(t.value[n] - inverse_fourier_coeff(symbol, n).value) < 1e-10);

  for (auto p : {Profile::one, Profile::exp, Profile::indicator, Profile::logsign}) {
    const LaplaceMultiplier mult(p);
    auto a = multiplier_apply(f, mult, MultiplierPath::fourier);
    auto b = multiplier_apply(f, mult, MultiplierPath::kernel);
    CHECK_FALSE(b.flagged);
    CHECK_MESSAGE(l2(a.value - b.value) <= 1e-7 * l2(b.value), profile_name(p));
    CHECK(l2(a.value) <= mult.sup_norm() * l2(f) * (1 + 1e-6));
    CHECK(multiplier_apply(f.shifted(5), mult, MultiplierPath::fourier).value == a.value.shifted(5));
  }

  std::vector<Sequence> batch = {f, Sequence::delta(2), random_real(rng, 10, 4)};
  const LaplaceMultiplier rough(Profile::logsign);
  auto out = multiplier_apply_batch(batch, rough, MultiplierPath::kernel);
  for (std::size_t i = 0; i < batch.size(); ++i)
    CHECK(max_abs_difference(out[i].value, multiplier_apply(batch[i], rough, MultiplierPath::kernel).value) < 1e-12);
  CHECK(parse_multiplier_path("kernel") == MultiplierPath::kernel);
  CHECK_THROWS_AS(parse_multiplier_path("dft"), std::invalid_argument);
}
