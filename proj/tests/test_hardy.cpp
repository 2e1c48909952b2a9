#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "dhs/hardy.hpp"
#include "dhs/parallel.hpp"

using namespace dhs;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Atom make_atom(double p, double q, double radius, Sequence values) {
  Atom a;
  a.p = p;
  a.q = q;
  a.radius = radius;
  a.values = std::move(values);
  return a;
}

const AtomCondition& condition(const AtomValidation& v, const std::string& name) {
  for (const auto& c : v.conditions)
    if (c.name == name) return c;
  throw std::logic_error("no condition " + name);
}

}  // namespace

TEST_CASE("balls and moment counts") {
  CHECK(ball_measure(1.0) == 3);
  CHECK(ball_measure(1.7) == 3);
  CHECK(ball_measure(4.0) == 9);
  CHECK(moment_order(1.0) == 1);
  CHECK(moment_order(0.75) == 1);
  CHECK(moment_order(0.5) == 2);
  CHECK(moment_order(0.4) == 2);
  CHECK(moment_order(1.0 / 3.0) == 3);
  CHECK(atom_moment_count(0.4, AtomFlavor::plain) == 1);
  CHECK_THROWS_AS(moment_order(1.5), std::domain_error);
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
  CHECK(derive_seed(1, 0) != derive_seed(2, 0));
}

TEST_CASE("atom validation") {
  // ||b||_inf = 1/2 exceeds 3^{-1}.
  auto v = validate_atom(make_atom(1.0, kInf, 1.0, Sequence(0, {0.5, -0.5})));
  CHECK_FALSE(v.valid);
  CHECK_FALSE(condition(v, "size").ok);
  CHECK(condition(v, "size").slack() == doctest::Approx(1.0 / 3.0 - 0.5));
  CHECK(condition(v, "moment 0").ok);
  CHECK(validate_atom(make_atom(1.0, kInf, 1.0, Sequence(0, {1.0 / 3.0, -1.0 / 3.0}))).valid);

  auto unbalanced = validate_atom(make_atom(1.0, 2.0, 1.0, Sequence(0, {0.1, 0.05})));
  CHECK_FALSE(unbalanced.valid);
  CHECK_FALSE(condition(unbalanced, "moment 0").ok);

  auto outside = validate_atom(make_atom(1.0, 2.0, 1.0, Sequence(1, {0.1, 0.0, -0.1})));
  CHECK_FALSE(condition(outside, "support").ok);

  // Second difference: both moments of a p = 0.4 atom vanish.
  const double c = 1.0 / (9.0 * std::sqrt(6.0));
  auto second = validate_atom(make_atom(0.4, 2.0, 1.0, Sequence(-1, {c, -2.0 * c, c})));
  CHECK(second.valid);
  CHECK(second.conditions.size() == 4);
  CHECK(condition(second, "moment 1").measured == 0.0);

  // The first difference fails the degree-one moment of the same flavor.
  auto first = validate_atom(make_atom(0.4, 2.0, 1.0, Sequence(0, {0.05, -0.05})));
  CHECK(condition(first, "moment 0").ok);
  CHECK_FALSE(condition(first, "moment 1").ok);
}

TEST_CASE("random atoms") {
  for (double p : {0.4, 0.5, 0.75, 1.0})
    for (double q : {1.5, 2.0, kInf})
      for (double r : {1.0, 2.5, 16.0, 64.0})
        for (std::uint64_t seed : {1u, 2u}) {
          if (moment_order(p) >= ball_measure(r)) continue;
          auto a = random_atom(p, q, 5, r, seed);
          auto v = validate_atom(a, 1e-12);
          CHECK_MESSAGE(v.valid, "p=" << p << " q=" << q << " r=" << r);
          const double bound = std::pow(static_cast<double>(ball_measure(r)), (std::isinf(q) ? 0.0 : 1.0 / q) - 1.0 / p);
          CHECK(condition(v, "size").measured == doctest::Approx(bound).epsilon(1e-12));
        }

  // Three points and two constraints leave the second difference, up to sign.
  const double scale = std::pow(3.0, 0.5 - 2.5) / std::sqrt(6.0);
  for (std::uint64_t seed : {3u, 4u, 5u}) {
    auto a = random_atom(0.4, 2.0, 0, 1.0, seed);
    const double sign = a.values[0].real() < 0 ? 1.0 : -1.0;
    CHECK(std::abs(a.values[-1].real() - sign * scale) < 1e-15);
    CHECK(std::abs(a.values[0].real() + 2.0 * sign * scale) < 1e-15);
    CHECK(std::abs(a.values[1].real() - sign * scale) < 1e-15);
  }

  CHECK(random_atom(1.0, 2.0, 0, 8.0, 7).values == random_atom(1.0, 2.0, 0, 8.0, 7).values);
  CHECK_FALSE(random_atom(1.0, 2.0, 0, 8.0, 7).values == random_atom(1.0, 2.0, 0, 8.0, 8).values);
  CHECK_THROWS_AS(random_atom(0.2, 2.0, 0, 1.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(random_atom(1.0, 2.0, 0, 0.5, 1), std::invalid_argument);
}

TEST_CASE("molecule norm") {
  Molecule point;
  point.p = 0.5;
  point.alpha = 2.0;
  point.values = Sequence::delta(0, 3.0);
  CHECK(molecule_norm(point).value == 0.0);

  // A direct bound for (H, 1/2, 2) atoms: N <= (r0^2 / mu)^{3/4} mu^0 <= 4^{-3/4}.
  for (double r : {1.0, 4.0, 16.0, 64.0}) {
    Molecule m;
    m.p = 0.5;
    m.alpha = 2.0;
    m.values = random_atom(0.5, 2.0, 0, r, 11).values;
    const auto n = molecule_norm(m);
    CHECK(n.strict);
    CHECK(n.theta == doctest::Approx(0.75));
    CHECK(n.value <= std::pow(4.0, -0.75));
    CHECK(n.value > 0.05);
  }

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> pick(-3.0, 3.0);
  Molecule m;
  m.p = 0.75;
  m.alpha = 1.0;
  m.values = random_atom(0.75, 2.0, 0, 6.0, 4).values;
  for (int i = 0; i < 5; ++i) {
    const double c = pick(rng);
    Molecule scaled = m;
    scaled.values = m.values.scaled(c);
    CHECK(molecule_norm(scaled).value == doctest::Approx(std::abs(c) * molecule_norm(m).value).epsilon(1e-13));
  }

  Molecule boundary = m;
  boundary.p = 0.4;
  boundary.alpha = 2.0;
  CHECK_FALSE(molecule_norm(boundary).strict);
  CHECK(molecule_norm(boundary).theta == 1.0);
  boundary.alpha = 1.5;
  CHECK_THROWS_AS(molecule_norm(boundary), std::invalid_argument);
}

TEST_CASE("windowed molecules") {
  auto power = [](double s) {
    std::vector<double> v;
    for (int n = -512; n <= 512; ++n) v.push_back(std::pow(1.0 + std::abs(n), -s));
    return Sequence::from_real(-512, v);
  };
  Molecule fast;
  fast.p = 1.0;
  fast.alpha = 1.0;
  fast.windowed = true;
  fast.values = power(3.0);
  auto n = molecule_norm(fast);
  CHECK_FALSE(n.flagged);
  CHECK(n.tail < 1e-3);
  CHECK(std::abs(n.decay_exponent - 3.0) < 0.05);

  Molecule slow = fast;
  slow.values = power(1.2);
  auto s = molecule_norm(slow);
  CHECK(s.flagged);
  CHECK(std::isinf(s.tail));

  PowerTail tail = fit_power_tail(fast.values, 0, +1);
  CHECK_FALSE(tail.negligible);
  CHECK(tail.edge == 512);
  CHECK(std::isinf(power_tail_sum(tail, 1.0, 2.0)));
  CHECK(fit_power_tail(Sequence::delta(0), 0, +1).negligible);
}

TEST_CASE("moments of multiplier outputs") {
  auto atom = random_atom(0.5, 2.0, 0, 4.0, 21);
  auto same = multiplier_moments(LaplaceMultiplier(Profile::one), atom);
  REQUIRE(same.moments.size() == 3);
  CHECK(same.vanish);
  CHECK_FALSE(same.flagged);
  for (int j = 0; j < 2; ++j) CHECK(std::abs(same.moments[j]) < 1e-13);

  for (double r : {1.0, 4.0, 16.0}) {
    auto a = random_atom(0.5, 2.0, 0, r, 22);
    auto rep = multiplier_moments(LaplaceMultiplier(Profile::exp), a);
    CHECK(rep.vanish);
    CHECK_FALSE(rep.flagged);
    for (int j = 0; j < 2; ++j) CHECK(std::abs(rep.moments[j]) < 1e-6 * rep.absolute[0] * r);
  }
  // The degree-k moment is a control value with no vanishing claim; for the
  // identity it is the atom's own second moment.
  double second = 0.0;
  for (std::int64_t n = -4; n <= 4; ++n) second += double(n * n) * atom.values[n].real();
  CHECK(std::abs(same.moments[2] - second) < 1e-10);
  CHECK(std::abs(second) > 1e-3);

  // The rough profile has a kernel decaying like 1/n; its output decays like
  // n^-3 and the degree-one moment converges too slowly for a small window.
  auto rough = multiplier_moments(LaplaceMultiplier(Profile::logsign), atom, 64);
  CHECK(rough.flagged);
  CHECK(rough.required_window > 64);
}

TEST_CASE("Hardy quasinorm estimate") {
  const Sequence diff(0, {1.0, -1.0});
  auto a = hardy_quasinorm_estimate(diff, 1.0, 2048);
  auto b = hardy_quasinorm_estimate(diff, 1.0, 4096);
  CHECK_FALSE(a.flagged);
  CHECK(std::isfinite(a.value));
  CHECK(std::abs(a.value / b.value - 1.0) < 1e-3);
  CHECK(a.lp == doctest::Approx(2.0));

  CHECK(hardy_quasinorm_estimate(Sequence::delta(0), 0.5).flagged);
  CHECK(hardy_quasinorm_estimate(Sequence::delta(0), 1.0).flagged);
  for (double p : {0.4, 0.75, 1.0}) {
    auto est = hardy_quasinorm_estimate(random_atom(p, 2.0, 0, 8.0, 5).values, p);
    CHECK_FALSE(est.flagged);
    CHECK(std::isfinite(est.value));
  }
  CHECK(hardy_quasinorm_estimate(diff, 1.0, 2048, 1e-12).flagged);
}

TEST_CASE("atom sweeps") {
  SweepConfig cfg;
  cfg.count = 4;
  cfg.radii = {1.0, 4.0, 16.0};
  cfg.min_window = 64;
  for (auto op : {SweepOperator::maximal, SweepOperator::gfun, SweepOperator::mult}) {
    cfg.op = op;
    cfg.p = op == SweepOperator::gfun ? 0.4 : 0.75;
    auto rep = atom_operator_sweep(cfg);
    CHECK(rep.atoms.size() == 12);
    CHECK_FALSE(rep.flagged);
    CHECK(rep.near_bound_holds);
    CHECK(rep.max_total <= 5.0 * rep.median_total);
    CHECK(std::abs(rep.trend.slope) <= 0.25);
    for (const auto& a : rep.atoms) {
      CHECK(a.total == doctest::Approx(a.near + a.far));
      CHECK(a.l2_ratio > 0.0);
      if (op == SweepOperator::mult) CHECK(a.l2_ratio <= 1.0 + 1e-9);
    }
    if (op == SweepOperator::mult) {
      CHECK(rep.moments_vanish);
      CHECK(rep.max_molecule <= 5.0 * rep.median_molecule);
    }
  }

  cfg.op = SweepOperator::maximal;
  set_thread_count(1);
  std::ostringstream one, two;
  write_sweep_csv(one, atom_operator_sweep(cfg));
  set_thread_count(2);
  write_sweep_csv(two, atom_operator_sweep(cfg));
  set_thread_count(0);
  const std::string csv = one.str();
  CHECK(csv == two.str());
  CHECK(csv.rfind("atom_id,r0,near,far,total\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 13);

  CHECK(parse_sweep_operator("gfun") == SweepOperator::gfun);
  CHECK_THROWS_AS(parse_sweep_operator("hilbert"), std::invalid_argument);
}
