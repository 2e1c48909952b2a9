#pragma once

// Modified Bessel functions I_n of integer order, the lattice heat kernel
// G(n, t) = e^{-2t} I_n(2t), its time derivative and tail bounds.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

namespace dhs {

/// e^{-x} I_n(x) for integer n and x >= 0. Dispatches between the power
/// series, Miller backward recurrence and the large-argument expansion.
double scaled_bessel_i(std::int64_t n, double x);

/// e^{-x} I_k(x) for k = 0..max_order.
std::vector<double> scaled_bessel_i_orders(std::int64_t max_order, double x);

/// I_n(x). Throws std::overflow_error once e^x overflows; use the scaled form there.
double bessel_i(std::int64_t n, double x);

// Individual evaluation routes, exposed for cross-checking.
double scaled_bessel_i_series(std::int64_t n, double x);
double scaled_bessel_i_miller(std::int64_t n, double x);
double scaled_bessel_i_asymptotic(std::int64_t n, double x);
/// d/dx of the large-argument expansion of e^{-x} I_n(x).
double scaled_bessel_i_asymptotic_derivative(std::int64_t n, double x);
/// Trapezoid rule on the steepest-descent shifted integral representation
/// e^{-x} I_n(x) = (1/pi) int_0^pi exp(x cos(theta) - x) cos(n theta) dtheta.
double scaled_bessel_i_integral(std::int64_t n, double x);

/// Logarithmic size estimate sqrt(x^2 + n^2) - x - n asinh(n / x) of e^{-x} I_n(x).
double scaled_bessel_i_exponent(double n, double x);

/// G(n, t) = e^{-2t} I_n(2t). Throws std::domain_error for t <= 0.
double heat_kernel(std::int64_t n, double t);
/// d/dt G(n, t) = 2 G(n+1, t) + (n / t) G(n, t) - 2 G(n, t), from I_n' = I_{n+1} + (n/x) I_n;
/// for large t the large-argument expansion is differentiated directly.
double heat_kernel_dt(std::int64_t n, double t);

/// G(n, t) for n = 0..max_n.
std::vector<double> heat_kernel_row(std::int64_t max_n, double t);
/// d/dt G(n, t) for n = 0..max_n.
std::vector<double> heat_kernel_dt_row(std::int64_t max_n, double t);

/// Chernoff bound on sum_{|n| > radius} G(n, t).
double heat_kernel_tail_bound(std::int64_t radius, double t);
/// Smallest radius whose tail bound is at most tol.
std::int64_t heat_kernel_radius(double t, double tol);

/// G and d/dt G on an (n, t) window, n = 0..n_max, with per-time tail bounds.
class HeatKernelTable {
 public:
  HeatKernelTable(std::int64_t n_max, std::vector<double> t_grid);

  std::int64_t n_max() const { return n_max_; }
  const std::vector<double>& t_grid() const { return t_grid_; }
  /// Symmetric in n; zero is returned beyond n_max.
  double g(std::int64_t n, std::size_t ti) const;
  double dg(std::int64_t n, std::size_t ti) const;
  double tail_bound(std::size_t ti) const { return tail_[ti]; }

  /// CSV "n,t,G,dG" over the stored window.
  void write_csv(std::ostream& out) const;

 private:
  std::int64_t n_max_;
  std::vector<double> t_grid_;
  std::vector<std::vector<double>> g_, dg_;
  std::vector<double> tail_;
};

}  // namespace dhs
