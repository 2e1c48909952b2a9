#pragma once

// Gauss-Legendre rules, composite panel integration and the inverse Fourier
// coefficient on the torus.

#include <complex>
#include <cstddef>
#include <functional>
#include <vector>

namespace dhs {

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
struct GaussLegendre {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Rule of the given order, computed once per order and cached.
const GaussLegendre& gauss_legendre(std::size_t order);

/// A partition a = b_0 < b_1 < ... < b_m = b of an interval into panels.
using Breakpoints = std::vector<double>;

/// Uniform panels of width at most max_width on [a, b].
Breakpoints uniform_panels(double a, double b, double max_width);

/// Panels on [a, b] whose first panel is split geometrically toward a
/// (ratio 1/2) until its width falls below min_width.
Breakpoints refine_toward_left(const Breakpoints& panels, double min_width);

/// Merged, sorted union of several breakpoint lists.
Breakpoints merge_breakpoints(const Breakpoints& a, const Breakpoints& b);

/// Tensor list of (node, weight) pairs for a composite rule: one
/// Gauss-Legendre rule of the given order on every panel.
struct NodeSet {
  std::vector<double> x;
  std::vector<double> w;
};
NodeSet composite_nodes(const Breakpoints& panels, std::size_t order);

double integrate(const std::function<double(double)>& f, const Breakpoints& panels, std::size_t order);

struct QuadratureSpec {
  std::size_t order = 16;
  /// Panel width cap on [-pi, pi] before refinement.
  double max_panel = 0.25;
  /// Geometric refinement around theta = 0 down to this width.
  double min_panel_near_zero = 1e-12;
  double tolerance = 1e-11;
};

struct ComplexQuadratureResult {
  std::complex<double> value;
  double error = 0.0;
  bool converged = true;
};

/// (1 / 2 pi) int_{-pi}^{pi} symbol(theta) e^{-i n theta} dtheta.
/// The error estimate compares the composite rule against the same panels
/// each halved; results above spec.tolerance are reported as not converged.
ComplexQuadratureResult inverse_fourier_coeff(const std::function<std::complex<double>(double)>& symbol,
                                              long long n, const QuadratureSpec& spec = {});

}  // namespace dhs
