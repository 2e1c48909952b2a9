#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "dhs/decay.hpp"

using namespace dhs;

TEST_CASE("log-log fit of an exact power law") {
  std::vector<double> x, y;
  for (int i = 0; i < 12; ++i) {
    x.push_back(std::exp2(i));
    y.push_back(3.0 * std::pow(x.back(), -1.5));
  }
  auto fit = fit_log_log(x, y);
  CHECK(fit.points == 12);
  CHECK(fit.slope == doctest::Approx(-1.5).epsilon(1e-12));
  CHECK(std::exp(fit.intercept) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(fit.slope_ci < 1e-10);

  // Non-positive entries are dropped.
  y[3] = 0.0;
  CHECK(fit_log_log(x, y).points == 11);
}

TEST_CASE("sample points") {
  DecayParams p;
  auto n = decay_points(DecayKind::eq31, p);
  CHECK(n.front() == 8.0);
  CHECK(n.back() == 512.0);
  for (double v : n) CHECK(v == std::round(v));
  for (std::size_t i = 1; i < n.size(); ++i) CHECK(n[i] > n[i - 1]);

  auto z = decay_points(DecayKind::eq33, p);
  for (double v : z) CHECK(v - std::floor(v) == 0.5);
  p.sampling = ZSampling::geometric;
  CHECK(decay_points(DecayKind::eq33, p).size() == 25);

  p.x_max = 1.0;
  CHECK_THROWS_AS(decay_points(DecayKind::eq31, p), std::invalid_argument);
  CHECK(parse_decay_kind("hnc") == DecayKind::hnc);
  CHECK(decay_kind_name(DecayKind::eq44) == "eq44");
  CHECK_THROWS_AS(parse_decay_kind("eq99"), std::invalid_argument);
  CHECK(parse_z_sampling(z_sampling_name(ZSampling::integer)) == ZSampling::integer);
}

TEST_CASE("heat kernel decays like 1/n and its difference like 1/n^2") {
  DecayParams p;
  p.x_max = 128.0;
  auto sup = verify_decay_suite(DecayKind::eq31, p);
  CHECK(std::abs(sup.fit.slope + 1.0) < 0.05);
  CHECK_FALSE(sup.flagged);
  CHECK(sup.max_ratio <= 1.1 * sup.median_ratio);
  auto diff = verify_decay_suite(DecayKind::eq42, p);
  CHECK(std::abs(diff.fit.slope + 2.0) < 0.1);
}

TEST_CASE("oscillatory integrals on a short range") {
  DecayParams p;
  p.x_max = 32.0;
  p.points_per_octave = 2;
  p.k = 1;
  DecayCache cache;
  auto sup = verify_decay_suite(DecayKind::eq33, p, &cache);
  CHECK(std::abs(sup.fit.slope + 2.0) < 0.1);
  CHECK_FALSE(sup.flagged);
  CHECK(sup.label == "eq33 k=1");

  // psi = 1 integrates a total derivative that vanishes at both ends.
  auto zero = verify_decay_suite(DecayKind::eq44, p, &cache);
  CHECK(zero.cancellation < vanishing_cancellation);

  p.profile = Profile::logsign;
  auto rough = verify_decay_suite(DecayKind::eq44, p, &cache);
  CHECK(rough.cancellation > 1e-3);
  CHECK_FALSE(rough.flagged);
  CHECK(rough.label == "eq44 k=1 psi=logsign");

  DecayParams other = p;
  other.time.panel /= 2.0;
  CHECK_THROWS_AS(verify_decay_suite(DecayKind::eq44, other, &cache), std::invalid_argument);
}

TEST_CASE("time quadrature is stable under panel refinement") {
  DecayParams coarse;
  coarse.x_min = 10.5;
  coarse.x_max = 10.5;
  coarse.k = 2;
  coarse.n = 1;
  coarse.profile = Profile::logsign;
  DecayParams fine = coarse;
  fine.time.panel /= 2.0;
  for (DecayKind kind : {DecayKind::eq43, DecayKind::eq44, DecayKind::hnb, DecayKind::hnc}) {
    const double a = verify_decay_suite(kind, coarse).samples.at(0).value;
    const double b = verify_decay_suite(kind, fine).samples.at(0).value;
    CHECK_MESSAGE(std::abs(a - b) <= 1e-9 * std::abs(b), decay_kind_name(kind));
  }
}

TEST_CASE("hn families need k >= max(n, 1)") {
  DecayParams p;
  p.k = 1;
  p.n = 2;
  CHECK_THROWS_AS(verify_decay_suite(DecayKind::hna, p), std::invalid_argument);
  p.n = 0;
  p.k = 0;
  CHECK_THROWS_AS(verify_decay_suite(DecayKind::hnb, p), std::invalid_argument);
}

TEST_CASE("report CSV layout") {
  DecayParams p;
  p.x_max = 16.0;
  auto r = verify_decay_suite(DecayKind::eq31, p);
  std::ostringstream out;
  write_decay_csv(out, r);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "kind,x,value,claimed_rate,ratio");
  std::getline(in, line);
  CHECK(line.rfind("eq31,8,", 0) == 0);
  std::size_t rows = 1;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == r.samples.size());
}
