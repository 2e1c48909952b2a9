#pragma once

// Oscillatory theta-integrals of derivatives of the torus heat profile: the
// integration-by-parts representation of G, the functions H_k(z, t) and their
// z-derivatives, and L^2(dt/t) norms over (0, infinity).

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "dhs/faa_di_bruno.hpp"

namespace dhs {

/// (-1)^{floor((k + 1) / 2)}.
int parts_sign(int k);
/// sin(x) for odd j, cos(x) for even j.
double half_angle(int j, double x);

struct QuadResult {
  double value = 0.0;
  double error = 0.0;
  bool converged = true;
};

struct ThetaQuadrature {
  std::size_t order = 16;
  /// The profile is negligible beyond theta = cut_scale / sqrt(t).
  double cut_scale = 14.0;
  /// Panels are at most pi / (panels_per_period * z) wide.
  double panels_per_period = 4.0;
  /// and at most width_scale / sqrt(t).
  double width_scale = 0.5;

  bool operator==(const ThetaQuadrature&) const = default;
};

/// Composite rule on [0, min(pi, cut)] for the given frequency z and time t.
struct ThetaNodes {
  std::vector<double> theta;
  std::vector<double> weight;
};
ThetaNodes theta_nodes(double z, double t, const ThetaQuadrature& q = {});

/// coef * z^{z_power} * theta^{theta_power} * trig(z theta), trig = sin if is_sin else cos.
struct OscillatoryTerm {
  double coef = 0.0;
  int z_power = 0;
  int theta_power = 0;
  bool is_sin = false;
};

/// r-th z-derivative of z^{-k} h_k(z theta), generated by repeated product-rule
/// differentiation over a small term algebra and collected by
/// (z power, theta power, trig kind).
std::vector<OscillatoryTerm> dz_expansion(int k, int r);
/// Same expansion from the Leibniz rule written out in closed form.
std::vector<OscillatoryTerm> dz_expansion_leibniz(int k, int r);

/// Integral of d^k/dtheta^k phi_t(theta) against a sum of oscillatory terms,
/// together with the same integral for t d/dt of the profile derivative.
struct OscillatoryIntegral {
  double value = 0.0;
  double t_dt = 0.0;
};
OscillatoryIntegral oscillatory_integral(const ProfileDerivative& profile, std::span<const OscillatoryTerm> terms,
                                         double z, double t, const ThetaQuadrature& q = {});

/// ((-1)^{floor((k+1)/2)} / (pi m^k)) int_0^pi d^k phi_t(theta) h_k(m theta) dtheta, which equals G(m, t).
QuadResult kernel_via_parts(int k, std::int64_t m, double t, const ThetaQuadrature& q = {});

/// H_k(z, t) = z^{-k} int_0^pi d^k phi_t(theta) h_k(z theta) dtheta, with h_0 = cos.
double oscillatory_kernel(double z, double t, int k, const ThetaQuadrature& q = {});
/// d^k/dz^k H_k(z, t) through dz_expansion.
double oscillatory_kernel_dz(double z, double t, int k, const ThetaQuadrature& q = {});
/// d^k/dz^k H_k(z, t) together with t d/dt of it.
OscillatoryIntegral oscillatory_kernel_dz_both(double z, double t, int k, const ThetaQuadrature& q = {});

/// int_0^pi d^k phi_t(theta) theta^{theta_power} h_j(z theta) dtheta and its t d/dt.
OscillatoryIntegral profile_moment_integral(int k, int theta_power, int j, double z, double t,
                                            const ThetaQuadrature& q = {});

/// Moments int_0^pi d^k phi_t(theta) theta^p trig(z theta) dtheta for p = 0..max_power
/// (default k) and trig in {cos, sin}, with the same moments of t d/dt d^k phi_t.
struct ProfileMoments {
  int k = 0;
  std::vector<double> value, t_dt;  // index 2 p + (trig is sin)

  double moment(int p, bool is_sin) const { return value[static_cast<std::size_t>(2 * p + (is_sin ? 1 : 0))]; }
  double t_dt_moment(int p, bool is_sin) const { return t_dt[static_cast<std::size_t>(2 * p + (is_sin ? 1 : 0))]; }
  /// Combination sum coef z^{z_power} moment(theta_power, is_sin).
  OscillatoryIntegral combine(std::span<const OscillatoryTerm> terms, double z) const;
};

/// Moments at every time in times. Times sharing a theta rule reuse the
/// oscillatory factors, which makes long time sweeps cheap.
std::vector<ProfileMoments> profile_moments(int k, double z, std::span<const double> times,
                                            const ThetaQuadrature& q = {}, int max_power = -1);

/// int d^k phi_t theta^{theta_power} h_j(z theta) dtheta integrated by parts k
/// times, as terms on the moments of phi_t itself (k = 0, powers up to
/// theta_power). The boundary terms at 0 vanish by parity; those at pi carry
/// e^{-4t} and are dropped, so the result is exact in double precision for
/// t >= parts_min_time. At large t this avoids the cancellation among the
/// Faa di Bruno terms, which grow like t^{k/2}.
std::vector<OscillatoryTerm> moment_by_parts(int k, int theta_power, int j);
inline constexpr double parts_min_time = 200.0;

/// Uniform grid in u = log t.
struct LogGrid {
  double u_min = -9.0;
  double u_max = 9.0;
  std::size_t count = 2048;
  LogGrid refined() const { return {u_min, u_max, 2 * count - 1}; }
  double u(std::size_t i) const;
};

struct NormResult {
  double value = 0.0;
  /// Estimated contribution of (0, e^{u_min}) and (e^{u_max}, inf) to the squared norm.
  double tail = 0.0;
  bool flagged = false;
};

/// (int_0^inf fn(t)^2 dt / t)^{1/2} by the trapezoid rule in u = log t.
/// The tails assume fn ~ t near 0 and fn ~ t^{-1/2} near infinity; the result is
/// flagged when the squared tail exceeds tol times the squared norm.
NormResult l2dtt_norm(const std::function<double(double)>& fn, const LogGrid& grid = {}, double tol = 1e-6);
/// Same rule applied to samples fn(e^{u_i}) on the grid.
NormResult l2dtt_norm_samples(std::span<const double> samples, const LogGrid& grid, double tol = 1e-6);

}  // namespace dhs
