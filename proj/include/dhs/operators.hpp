#pragma once

// Operators on finitely supported sequences: the discrete Laplacian, the heat
// semigroup W_t, its maximal operator, the Littlewood-Paley g-function, the
// discrete Hilbert transform and Laplace-type spectral multipliers.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dhs/grid.hpp"
#include "dhs/kernel_analysis.hpp"
#include "dhs/multiplier.hpp"
#include "dhs/sequence.hpp"

namespace dhs {

struct OperatorConfig {
  /// Times for the maximal operator.
  std::vector<double> t_grid = log_grid_per_decade(1e-6, 1e4, 60);
  /// u = log t nodes of the g-function integral.
  LogGrid g_grid{-12.0, 12.0, 481};
  /// Heat kernel truncation, relative to ||f||_1.
  double truncation_tol = 1e-12;
  /// Allowed uncertainty of the squared L^2(dt/t) tail beyond the grid, relative
  /// to the squared g-function.
  double g_tail_tol = 1e-6;

  /// Throws std::invalid_argument unless t_grid is positive and strictly increasing
  /// and the g grid is nondegenerate.
  void validate() const;
};

/// (Delta f)(n) = -f(n+1) + 2 f(n) - f(n-1).
Sequence discrete_laplacian(const Sequence& f);

/// W_t f = G(., t) * f with the kernel cut where its tail mass is below tol,
/// so the dropped part has l^1 norm at most tol ||f||_1. Throws std::domain_error for t <= 0.
Sequence heat_apply(const Sequence& f, double t, double tol = 1e-12);

struct MaximalResult {
  /// max over the grid of |W_t f(n)|, trimmed where it falls below 1e-14 ||f||_2.
  Sequence value;
  /// Largest increase from also sampling the geometric midpoints of the grid
  /// and the t -> 0 limit |f|, relative to max |value|.
  double refinement_delta = 0.0;
};
MaximalResult maximal(const Sequence& f, const OperatorConfig& cfg = {});

struct GFunctionResult {
  Sequence value;
  /// Largest uncertainty of the tail correction relative to the squared value,
  /// over the significant entries kept. Output covers the support and, outward
  /// from it, the entries whose tail uncertainty is within g_tail_tol, at most
  /// sqrt(t_max) / 2 away, t_max = exp(g_grid.u_max).
  double tail = 0.0;
  /// The tail is not resolved on the support itself.
  bool flagged = false;
};
/// g(f)(n) = ||t d/dt W_t f(n)||_{L^2(dt/t)}, with d/dt W_t = -Delta W_t. The
/// integral beyond the grid is added from the local power-law decay of the integrand.
GFunctionResult g_function(const Sequence& f, const OperatorConfig& cfg = {});

struct HilbertResult {
  Sequence value;
  /// Output extends this far beyond the support of f on each side.
  std::int64_t margin = 0;
  /// Bound on sum |H f(n)|^p outside the window (sup for p = infinity); infinite
  /// when the bound does not converge.
  double tail = 0.0;
  /// Moments of f that vanish; H f decays like |n|^{-(moments + 1)}.
  int vanishing_moments = 0;
};
/// H f(n) = sum_m f(m) / (n - m + 1/2) on [first - margin, last + margin].
/// margin = 0 selects max(1024, 8 * support).
HilbertResult hilbert(const Sequence& f, double p = 2.0, std::int64_t margin = 0);

enum class MultiplierPath { fourier, kernel };
MultiplierPath parse_multiplier_path(const std::string& name);
std::string multiplier_path_name(MultiplierPath path);

struct MultiplierOptions {
  /// Output extends this far beyond the support; 0 selects max(64, 4 * support).
  std::int64_t margin = 0;
  std::size_t order = 16;
  /// Panels of the theta rule are refined geometrically toward 0 down to this width.
  double min_panel = 1e-12;
  KernelQuadrature kernel;
};

struct MultiplierResult {
  Sequence value;
  /// Error bound from the neglected parts of the theta or time integrals,
  /// in the sup norm over the window.
  double error = 0.0;
  bool flagged = false;
};
/// T f = F^{-1}[m(2 (1 - cos theta)) F f].
/// fourier: the inverse transform is evaluated on the output window by composite
/// Gauss-Legendre quadrature, so the output is free of grid aliasing.
/// kernel: convolution with the multiplier kernel, computed out to the largest
/// distance between the window and the support.
MultiplierResult multiplier_apply(const Sequence& f, const LaplaceMultiplier& mult, MultiplierPath path,
                                  const MultiplierOptions& opts = {});

std::vector<MaximalResult> maximal_batch(std::span<const Sequence> fs, const OperatorConfig& cfg = {});
std::vector<GFunctionResult> g_function_batch(std::span<const Sequence> fs, const OperatorConfig& cfg = {});
std::vector<MultiplierResult> multiplier_apply_batch(std::span<const Sequence> fs, const LaplaceMultiplier& mult,
                                                     MultiplierPath path, const MultiplierOptions& opts = {});

}  // namespace dhs
