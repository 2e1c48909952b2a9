#include "dhs/faa_di_bruno.hpp"

#include <array>
#include <cmath>
#include <string>

namespace dhs {

double torus_profile(double t, double theta) { return std::exp(-2.0 * t * (1.0 - std::cos(theta))); }

namespace {

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

FaaDiBrunoTerm make_term(int k, const std::vector<int>& m) {
  FaaDiBrunoTerm term;
  term.multi_index = m;
  int sign_exponent = 0;
  double denom = 1.0;
  for (int j = 1; j <= k; ++j) {
    const int mj = m[static_cast<std::size_t>(j - 1)];
    if (mj == 0) continue;
    term.t_power += mj;
    // The j-th derivative of -2t(1 - cos theta) is 2t cos(theta + j pi / 2):
    // (-1)^i 2t cos for j = 2i and (-1)^i 2t sin for j = 2i - 1.
    if (j % 2 == 0) {
      term.cos_power += mj;
      sign_exponent += (j / 2) * mj;
    } else {
      term.sin_power += mj;
      sign_exponent += ((j + 1) / 2) * mj;
    }
    denom *= factorial(mj) * std::pow(factorial(j), mj);
  }
  const double sign = sign_exponent % 2 == 0 ? 1.0 : -1.0;
  term.coefficient = sign * std::ldexp(factorial(k) / denom, term.t_power);
  term.sigma = k + term.sin_power - 2 * term.t_power;
  return term;
}

void enumerate(int k, int j, int remaining, std::vector<int>& m, std::vector<FaaDiBrunoTerm>& out) {
  if (j == 0) {
    if (remaining == 0) out.push_back(make_term(k, m));
    return;
  }
  for (int c = remaining / j; c >= 0; --c) {
    m[static_cast<std::size_t>(j - 1)] = c;
    enumerate(k, j - 1, remaining - c * j, m, out);
  }
  m[static_cast<std::size_t>(j - 1)] = 0;
}

}  // namespace

std::vector<FaaDiBrunoTerm> faa_di_bruno_terms(int k, int k_max) {
  if (k < 1) throw std::invalid_argument("derivative order must be at least 1");
  if (k > k_max) throw CapacityError("derivative order " + std::to_string(k) + " exceeds cap " + std::to_string(k_max));
  std::vector<FaaDiBrunoTerm> out;
  std::vector<int> m(static_cast<std::size_t>(k), 0);
  enumerate(k, k, k, m, out);
  return out;
}

ProfileDerivative::ProfileDerivative(int k) : k_(k) {
  if (k < 0) throw std::invalid_argument("derivative order must be nonnegative");
  if (k > 0) terms_ = faa_di_bruno_terms(k, std::max(k, kDefaultMaxDerivativeOrder));
}

void ProfileDerivative::values(double t, double theta, double& value, double& t_dt) const {
  const double c = std::cos(theta), s = std::sin(theta), half = std::sin(0.5 * theta);
  const double gap = 4.0 * t * half * half;
  const double phi = std::exp(-gap);
  if (k_ == 0) {
    value = phi;
    t_dt = -gap * phi;
    return;
  }
  std::array<double, 64> cp{}, sp{}, tp{};
  cp[0] = sp[0] = tp[0] = 1.0;
  for (int i = 1; i <= k_; ++i) {
    cp[static_cast<std::size_t>(i)] = cp[static_cast<std::size_t>(i - 1)] * c;
    sp[static_cast<std::size_t>(i)] = sp[static_cast<std::size_t>(i - 1)] * s;
    tp[static_cast<std::size_t>(i)] = tp[static_cast<std::size_t>(i - 1)] * t;
  }
  double v = 0.0, d = 0.0;
  for (const auto& term : terms_) {
    const double a = term.coefficient * tp[static_cast<std::size_t>(term.t_power)] *
                     cp[static_cast<std::size_t>(term.cos_power)] * sp[static_cast<std::size_t>(term.sin_power)];
    v += a;
    d += a * (static_cast<double>(term.t_power) - gap);
  }
  value = v * phi;
  t_dt = d * phi;
}

double ProfileDerivative::value(double t, double theta) const {
  double v, d;
  values(t, theta, v, d);
  return v;
}

double ProfileDerivative::t_dt_value(double t, double theta) const {
  double v, d;
  values(t, theta, v, d);
  return d;
}

double phi_theta_derivative(int k, double t, double theta) { return ProfileDerivative(k).value(t, theta); }

double phi_t_derivative_of_theta_deriv(int k, double t, double theta) {
  return ProfileDerivative(k).t_dt_value(t, theta);
}

}  // namespace dhs
