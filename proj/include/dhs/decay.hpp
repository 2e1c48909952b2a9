#pragma once

// Numerical decay checks for the heat kernel, its time derivative, the
// multiplier kernel and the oscillatory integrals H_k. Each check evaluates
// a quantity on a geometric range, fits a log-log slope and reports the ratio
// of the quantity to its claimed rate.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <tuple>
#include <string>
#include <vector>

#include "dhs/kernel_analysis.hpp"
#include "dhs/multiplier.hpp"

namespace dhs {

enum class DecayKind {
  eq31,  // sup_t G(n, t)                                   ~ n^-1
  eq32,  // sup_t |G(n+1, t) - G(n, t)|                     ~ n^-2
  eq41,  // ||t dG(n, .)/dt||_{L2(dt/t)}                    ~ n^-1
  eq42,  // ||t d/dt (G(n+1, .) - G(n, .))||_{L2(dt/t)}     ~ n^-2
  eq33,  // sup_t |d^k/dz^k H_k(z, t)|                      ~ z^-(k+1)
  eq43,  // ||t d/dt d^k/dz^k H_k(z, .)||_{L2(dt/t)}        ~ z^-(k+1)
  eq44,  // |int psi(t) d/dt d^k/dz^k H_k(z, t) dt|         ~ z^-(k+1)
  eq52,  // |K(n)|                                          ~ n^-1
  eq53,  // |K(n+1) - K(n)|                                 ~ n^-2
  hna,   // sup_t |int d^k phi_t theta^{k-n} h_n(z theta)|  <= C z^{n-1}
  hnb,   // L2(dt/t) norm of t d/dt of the same integral    <= C z^{n-1}
  hnc,   // psi-weighted time integral of its t-derivative  <= C z^{n-1}
};

DecayKind parse_decay_kind(const std::string& name);
std::string decay_kind_name(DecayKind kind);
/// Kinds indexed by integers n rather than real z.
bool integer_indexed(DecayKind kind);

/// Where real arguments z are placed on the geometric range.
enum class ZSampling { geometric, integer, half_integer };
ZSampling parse_z_sampling(const std::string& name);
std::string z_sampling_name(ZSampling s);

/// Time discretization. Suprema are maxima over a logarithmic grid with
/// per_decade points on [t_min, t_max_factor * max(x, 1)^2]. Time integrals
/// use Gauss-Legendre panels in u = log t from u_min up to
/// 2 log max(x, 1) + dz_span / (k + 1) for d^k/dz^k H_k, whose large-time decay
/// is (t / z^2)^{-(k+1)/2}, and up to 2 log max(x, 1) + moment_span for the
/// single moments, which decay like t^{-1/2}.
struct TimeSampling {
  double t_min = 1e-3;
  double t_max_factor = 1e3;
  int per_decade = 60;
  double u_min = -40.0;
  double dz_span = 30.0;
  double moment_span = 44.0;
  std::size_t order = 16;
  /// Panel width in u; panels for u < -pi are pi wide.
  double panel = std::numbers::pi / 4.0;

  bool operator==(const TimeSampling&) const = default;
};

struct DecayParams {
  double x_min = 8.0;
  double x_max = 512.0;
  int points_per_octave = 4;
  ZSampling sampling = ZSampling::half_integer;
  int k = 1;
  int n = 1;
  Profile profile = Profile::one;
  TimeSampling time;
  ThetaQuadrature theta;
};

struct DecaySample {
  double x = 0.0;
  double value = 0.0;
  double claimed_rate = 0.0;
  double ratio = 0.0;
  /// Neglected part of a time integral, or 0 for suprema.
  double tail = 0.0;
  /// int |psi d/dt V| dt for time integrals, value otherwise.
  double magnitude = 0.0;
  /// A supremum attained at a grid end, or a tail that is not small.
  bool flagged = false;
};

struct LogLogFit {
  double slope = 0.0;
  double intercept = 0.0;
  /// Half-width of the 95% confidence interval of the slope.
  double slope_ci = 0.0;
  std::size_t points = 0;
};

/// Least-squares fit of log y against log x over the positive entries.
LogLogFit fit_log_log(const std::vector<double>& x, const std::vector<double>& y);

struct DecayReport {
  DecayKind kind = DecayKind::eq31;
  std::string label;
  double claimed_exponent = 0.0;
  std::vector<DecaySample> samples;
  LogLogFit fit;
  double max_ratio = 0.0;
  double median_ratio = 0.0;
  /// Smallest |value| relative to the rounding level of its evaluation.
  double signal_to_noise = 0.0;
  /// Largest value / magnitude. A time integral far below the integral of its
  /// absolute integrand cancels to the level of the quadrature error.
  double cancellation = 1.0;
  bool flagged = false;
};

/// Below this cancellation a family is treated as vanishing identically.
inline constexpr double vanishing_cancellation = 1e-7;

/// Moments of d^k phi_t at the sup-grid times and at the time-integral nodes.
/// From the first time at or above max(parts_min_time, z^2) on, the moments of
/// phi_t itself are also kept for the integrated-by-parts route.
struct OscillatorySamples {
  std::vector<double> sup_times;
  std::vector<ProfileMoments> sup_moments, sup_smooth;
  std::size_t sup_smooth_from = 0;
  std::vector<double> node_u, node_times, node_weights;  // weights for du, u = log t
  std::vector<ProfileMoments> node_moments, node_smooth;
  std::size_t node_smooth_from = 0;
};

/// Write-once store of moment tables shared between suites with the same k and z.
/// All suites using one cache must use the same time and theta settings.
class DecayCache {
 public:
  std::shared_ptr<const OscillatorySamples> get(int k, double z, const TimeSampling& time,
                                                const ThetaQuadrature& theta);

 private:
  std::mutex mutex_;
  std::map<std::pair<int, double>, std::shared_ptr<const OscillatorySamples>> tables_;
  bool configured_ = false;
  TimeSampling time_;
  ThetaQuadrature theta_;
};

/// Sample points on [x_min, x_max] for the given kind.
std::vector<double> decay_points(DecayKind kind, const DecayParams& params);

DecayReport verify_decay_suite(DecayKind kind, const DecayParams& params, DecayCache* cache = nullptr);

/// CSV "kind,x,value,claimed_rate,ratio".
void write_decay_csv(std::ostream& out, const DecayReport& report, bool header = true);

}  // namespace dhs
