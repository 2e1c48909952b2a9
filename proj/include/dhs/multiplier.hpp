#pragma once

// Laplace-transform-type multipliers: a bounded profile psi on (0, inf), its
// symbol m(lambda) = lambda int_0^inf e^{-lambda t} psi(t) dt and the
// convolution kernel K(n) = -int_0^inf psi(t) dG(n, t)/dt dt.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dhs/kernel_analysis.hpp"
#include "dhs/quadrature.hpp"

namespace dhs {

enum class Profile { one, exp, indicator, logsign };

/// Accepts "one", "exp", "indicator" and "logsign".
Profile parse_profile(const std::string& name);
std::string profile_name(Profile profile);

class LaplaceMultiplier {
 public:
  /// psi = 1, e^{-t}, 1_{[0,1]}(t) or sign(sin(log t)); each has a closed-form symbol.
  explicit LaplaceMultiplier(Profile profile);
  /// Arbitrary bounded profile. Jumps are given as points u = log t; the
  /// symbol is computed by quadrature.
  LaplaceMultiplier(std::string name, std::function<double(double)> psi, double sup_norm,
                    std::vector<double> jumps_in_log_time = {});

  const std::string& name() const { return name_; }
  double psi(double t) const;
  /// Bound on |psi|, which also bounds |m|.
  double sup_norm() const { return sup_norm_; }
  /// Jump locations u = log t inside [u_lo, u_hi].
  std::vector<double> jumps(double u_lo, double u_hi) const;

  /// Limit of psi at infinity and sup_{s >= t} |psi(s) - limit|, when known.
  struct Tail {
    double limit;
    double deviation;
  };
  std::optional<Tail> tail_beyond(double t) const;

  bool has_closed_form() const { return profile_.has_value(); }
  /// Closed form when available, otherwise symbol_numeric; throws
  /// std::runtime_error if the quadrature fails to converge.
  double symbol(double lambda) const;
  /// int_0^inf e^{-s} psi(s / lambda) ds by composite quadrature in log s.
  QuadResult symbol_numeric(double lambda, double tolerance = 1e-12) const;
  /// m(2 (1 - cos theta)).
  double torus_symbol(double theta) const;

 private:
  std::string name_;
  std::optional<Profile> profile_;
  std::function<double(double)> psi_;
  double sup_norm_ = 1.0;
  std::vector<double> jumps_;
};

/// Composite Gauss-Legendre rule in u = log t for the kernel integral.
struct KernelQuadrature {
  double u_min = -40.0;
  double u_max = 60.0;
  double max_panel = 0.25;
  std::size_t order = 16;
  /// Absolute tail bound above which the result is flagged.
  double tolerance = 1e-10;

  /// Panels on [u_min, u_max] split at the profile's jumps.
  Breakpoints panels(const LaplaceMultiplier& mult) const;
};

/// K(n) for |n| <= radius.
struct MultiplierKernel {
  std::vector<double> values;  // n = 0..radius
  /// Bound on the neglected parts of the time integral, uniform in n.
  double tail = 0.0;
  bool flagged = false;

  std::int64_t radius() const { return static_cast<std::int64_t>(values.size()) - 1; }
  /// Even in n; throws std::out_of_range beyond the radius.
  double operator()(std::int64_t n) const;
};

MultiplierKernel multiplier_kernel_row(const LaplaceMultiplier& mult, std::int64_t radius,
                                       const KernelQuadrature& q = {});
QuadResult multiplier_kernel(const LaplaceMultiplier& mult, std::int64_t n, const KernelQuadrature& q = {});

}  // namespace dhs
