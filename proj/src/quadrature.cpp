#include "dhs/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace dhs {

namespace {

GaussLegendre compute_rule(std::size_t n) {
  GaussLegendre rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const std::size_t half = (n + 1) / 2;
  for (std::size_t i = 0; i < half; ++i) {
    double z = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p1 = 1.0, p2 = 0.0;
      for (std::size_t j = 1; j <= n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * static_cast<double>(j) - 1.0) * z * p2 - (static_cast<double>(j) - 1.0) * p3) /
             static_cast<double>(j);
      }
      dp = static_cast<double>(n) * (z * p1 - p2) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    // One more derivative evaluation at the converged node for the weight.
    double p1 = 1.0, p2 = 0.0;
    for (std::size_t j = 1; j <= n; ++j) {
      const double p3 = p2;
      p2 = p1;
      p1 = ((2.0 * static_cast<double>(j) - 1.0) * z * p2 - (static_cast<double>(j) - 1.0) * p3) /
           static_cast<double>(j);
    }
    dp = static_cast<double>(n) * (z * p1 - p2) / (z * z - 1.0);
    const double w = 2.0 / ((1.0 - z * z) * dp * dp);
    rule.nodes[i] = -z;
    rule.nodes[n - 1 - i] = z;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

}  // namespace

const GaussLegendre& gauss_legendre(std::size_t order) {
  if (order == 0) throw std::invalid_argument("Gauss-Legendre order must be positive");
  static std::mutex mutex;
  static std::map<std::size_t, GaussLegendre> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(order);
  if (it == cache.end()) it = cache.emplace(order, compute_rule(order)).first;
  return it->second;
}

Breakpoints uniform_panels(double a, double b, double max_width) {
  if (!(b > a)) return {a, b};
  const auto count = static_cast<std::size_t>(std::max(1.0, std::ceil((b - a) / max_width)));
  Breakpoints out(count + 1);
  for (std::size_t i = 0; i <= count; ++i) out[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(count);
  out.back() = b;
  return out;
}

Breakpoints refine_toward_left(const Breakpoints& panels, double min_width) {
  if (panels.size() < 2) return panels;
  const double a = panels[0];
  double w = panels[1] - a;
  Breakpoints inner;
  while (w > min_width) {
    w *= 0.5;
    inner.push_back(a + w);
  }
  Breakpoints out{a};
  out.insert(out.end(), inner.rbegin(), inner.rend());
  out.insert(out.end(), panels.begin() + 1, panels.end());
  return out;
}

Breakpoints merge_breakpoints(const Breakpoints& a, const Breakpoints& b) {
  Breakpoints out;
  out.reserve(a.size() + b.size());
  std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

NodeSet composite_nodes(const Breakpoints& panels, std::size_t order) {
  const auto& rule = gauss_legendre(order);
  NodeSet set;
  if (panels.size() < 2) return set;
  set.x.reserve((panels.size() - 1) * order);
  set.w.reserve((panels.size() - 1) * order);
  for (std::size_t p = 0; p + 1 < panels.size(); ++p) {
    const double mid = 0.5 * (panels[p] + panels[p + 1]);
    const double half = 0.5 * (panels[p + 1] - panels[p]);
    for (std::size_t i = 0; i < order; ++i) {
      set.x.push_back(mid + half * rule.nodes[i]);
      set.w.push_back(half * rule.weights[i]);
    }
  }
  return set;
}

double integrate(const std::function<double(double)>& f, const Breakpoints& panels, std::size_t order) {
  const auto& rule = gauss_legendre(order);
  double total = 0.0;
  for (std::size_t p = 0; p + 1 < panels.size(); ++p) {
    const double mid = 0.5 * (panels[p] + panels[p + 1]);
    const double half = 0.5 * (panels[p + 1] - panels[p]);
    double s = 0.0;
    for (std::size_t i = 0; i < order; ++i) s += rule.weights[i] * f(mid + half * rule.nodes[i]);
    total += half * s;
  }
  return total;
}

namespace {

Breakpoints halved(const Breakpoints& panels) {
  Breakpoints out;
  out.reserve(2 * panels.size());
  for (std::size_t i = 0; i + 1 < panels.size(); ++i) {
    out.push_back(panels[i]);
    out.push_back(0.5 * (panels[i] + panels[i + 1]));
  }
  out.push_back(panels.back());
  return out;
}

std::complex<double> integrate_fourier(const std::function<std::complex<double>(double)>& symbol, long long n,
                                       const Breakpoints& panels, std::size_t order) {
  const auto& rule = gauss_legendre(order);
  std::complex<double> total = 0.0;
  for (std::size_t p = 0; p + 1 < panels.size(); ++p) {
    const double mid = 0.5 * (panels[p] + panels[p + 1]);
    const double half = 0.5 * (panels[p + 1] - panels[p]);
    std::complex<double> s = 0.0;
    for (std::size_t i = 0; i < order; ++i) {
      const double th = mid + half * rule.nodes[i];
      s += rule.weights[i] * symbol(th) * std::polar(1.0, -static_cast<double>(n) * th);
    }
    total += half * s;
  }
  return total / (2.0 * std::numbers::pi);
}

}  // namespace

ComplexQuadratureResult inverse_fourier_coeff(const std::function<std::complex<double>(double)>& symbol,
                                              long long n, const QuadratureSpec& spec) {
  const double pi = std::numbers::pi;
  const double width = std::min(spec.max_panel, pi / (4.0 * std::max(1.0, std::abs(static_cast<double>(n)))));
  // Panels on [0, pi] refined toward 0, mirrored onto [-pi, 0].
  Breakpoints right = refine_toward_left(uniform_panels(0.0, pi, width), spec.min_panel_near_zero);
  Breakpoints panels;
  panels.reserve(2 * right.size());
  for (auto it = right.rbegin(); it != right.rend(); ++it) panels.push_back(-*it);
  panels.insert(panels.end(), right.begin() + 1, right.end());

  ComplexQuadratureResult res;
  res.value = integrate_fourier(symbol, n, panels, spec.order);
  const auto fine = integrate_fourier(symbol, n, halved(panels), spec.order);
  res.error = std::abs(fine - res.value);
  res.value = fine;
  res.converged = res.error <= spec.tolerance * std::max(1.0, std::abs(fine));
  return res;
}

}  // namespace dhs
