#pragma once

// Atoms and molecules of the discrete Hardy spaces, their validation and random
// generation, and sweeps of operators over random atoms.

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "dhs/decay.hpp"
#include "dhs/multiplier.hpp"
#include "dhs/operators.hpp"
#include "dhs/sequence.hpp"

namespace dhs {

/// plain: the values sum to zero. hardy: all moments of degree <= 1/p - 1 vanish.
enum class AtomFlavor { plain, hardy };
AtomFlavor parse_atom_flavor(const std::string& name);
std::string atom_flavor_name(AtomFlavor flavor);

struct Atom {
  std::int64_t center = 0;
  /// Real radius >= 1; the ball is {n : |n - center| <= radius}.
  double radius = 1.0;
  double p = 1.0;
  /// q = infinity is allowed.
  double q = 2.0;
  AtomFlavor flavor = AtomFlavor::hardy;
  Sequence values;
};

/// Number of points of the integer ball, 2 floor(radius) + 1.
std::int64_t ball_measure(double radius);
/// Integer part of 1/p: the number of vanishing moments of a hardy atom
/// (degrees 0 .. 1/p - 1) and the order of the associated molecules.
int moment_order(double p);
/// Moments checked for an atom of the given flavor.
int atom_moment_count(double p, AtomFlavor flavor);

struct AtomCondition {
  std::string name;
  bool ok = false;
  double measured = 0.0;
  double bound = 0.0;
  double slack() const { return bound - measured; }
};

struct AtomValidation {
  bool valid = false;
  std::vector<AtomCondition> conditions;
};

/// Checks the support, the q-norm bound mu^{1/q - 1/p} and the moments
/// |sum (n - center)^j b(n)| <= tol radius^j ||b||_1. Moments are taken about the
/// center; together they vanish exactly when the moments about 0 do.
AtomValidation validate_atom(const Atom& atom, double tol = 1e-12);

/// splitmix64 step; independent seeds for numbered streams of one run.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// Gaussian values on the ball, projected in l^2 onto the sequences with the
/// required vanishing moments and scaled to ||b||_q = mu^{1/q - 1/p}.
/// Throws std::invalid_argument when the ball has no more points than constraints.
Atom random_atom(double p, double q, std::int64_t center, double radius, std::uint64_t seed,
                 AtomFlavor flavor = AtomFlavor::hardy);

/// Power-law model A d^{-exponent} of |f(center + d)| beyond the stored window on one side.
struct PowerTail {
  double amplitude = 0.0;
  double exponent = 0.0;
  /// Last distance covered by the window.
  std::int64_t edge = 0;
  /// Fewer than four samples above 1e-12 max |f| in the outer half: the
  /// sequence is taken as negligible there.
  bool negligible = true;
};
/// Fit over the distances [edge / 2, edge] on the side sign = +1 or -1.
PowerTail fit_power_tail(const Sequence& f, std::int64_t center, int sign);
/// sum over d > edge of (weight(d) |f|)^r with weight d^alpha, from the model.
/// Infinite when the model sum diverges.
double power_tail_sum(const PowerTail& tail, double r, double alpha = 0.0);

struct Molecule {
  std::int64_t center = 0;
  double p = 1.0;
  /// q in (1, infinity].
  double q = 2.0;
  double alpha = 1.0;
  Sequence values;
  /// The values are a window of a sequence that continues beyond it; the
  /// truncated part is estimated from the decay measured near the window edges.
  bool windowed = false;
};

struct MoleculeNorm {
  double value = 0.0;
  double theta = 0.0;
  /// Slowest measured decay exponent at the window edges; 0 when not windowed.
  double decay_exponent = 0.0;
  /// Estimated relative change of the value from the truncated part.
  double tail = 0.0;
  /// alpha > 1/p - 1/q. At equality theta = 1 and the value is the weighted norm alone.
  bool strict = false;
  bool flagged = false;
};

/// ||M||_q^{1 - theta} || |. - center|^alpha M ||_q^theta, theta = (1/p - 1/q) / alpha.
/// Throws std::invalid_argument unless q > 1 and alpha >= 1/p - 1/q > 0.
MoleculeNorm molecule_norm(const Molecule& m, double tail_tol = 1e-3);

struct MomentReport {
  /// sum (n - center)^j T b(n) for j = 0 .. order; the last one is a control
  /// value that need not vanish.
  std::vector<cplx> moments;
  /// Certified tolerance of each moment: window tail, kernel error and rounding.
  std::vector<double> tolerance;
  /// sum |n - center|^j |T b(n)| over the window.
  std::vector<double> absolute;
  /// All moments below the order vanish within their tolerance.
  bool vanish = false;
  /// Some tail is not certified; required_window is the margin that would be needed.
  bool flagged = false;
  std::int64_t required_window = 0;
};

/// Moments of T_m b computed on the support widened by margin (0 selects
/// max(256, 16 radius)) through the kernel path.
MomentReport multiplier_moments(const LaplaceMultiplier& mult, const Atom& atom, std::int64_t margin = 0);

struct QuasinormEstimate {
  double value = 0.0;
  double lp = 0.0;
  double hilbert_lp = 0.0;
  /// Bound on the p-sum of H f outside the window, relative to the p-sum inside.
  double tail = 0.0;
  bool flagged = false;
};

/// ||f||_p + ||H f||_p with H evaluated on the support widened by margin (see hilbert).
/// Flagged when the tail bound diverges or exceeds tail_tol.
QuasinormEstimate hardy_quasinorm_estimate(const Sequence& f, double p, std::int64_t margin = 0,
                                           double tail_tol = std::numeric_limits<double>::infinity());

enum class SweepOperator { maximal, gfun, mult };
SweepOperator parse_sweep_operator(const std::string& name);
std::string sweep_operator_name(SweepOperator op);

struct SweepConfig {
  SweepOperator op = SweepOperator::maximal;
  double p = 1.0;
  int count = 50;
  std::vector<double> radii{1.0, 4.0, 16.0, 64.0};
  std::uint64_t seed = 1;
  /// Multiplier profile for op = mult.
  Profile profile = Profile::exp;
  /// Outputs are evaluated up to max(min_window, window_factor * radius) from the center.
  double window_factor = 16.0;
  std::int64_t min_window = 256;
  /// Maximal operator times per decade on [1e-4, window^2].
  int per_decade = 10;
  /// Node spacing in log t of the g-function integral.
  double g_step = 0.5;
  /// Allowed relative size of the extrapolated far tail.
  double tail_tol = 1.0;
};

struct SweepAtom {
  std::size_t id = 0;
  double radius = 0.0;
  std::uint64_t seed = 0;
  /// p-sums of |op b| on the doubled ball and outside it; far includes the extrapolated tail.
  double near = 0.0;
  double far = 0.0;
  double tail = 0.0;
  double total = 0.0;
  /// ||op b||_2 / ||b||_2 on the window.
  double l2_ratio = 0.0;
  /// ||op b||_2^p mu(doubled ball)^{1 - p/2}, the Holder bound of the near part.
  double near_bound = 0.0;
  /// mult only: the molecule norm of order moment_order(p) and the moment check.
  MoleculeNorm molecule;
  MomentReport moments;
  bool flagged = false;
};

struct SweepReport {
  SweepConfig config;
  std::vector<SweepAtom> atoms;
  double max_total = 0.0;
  double median_total = 0.0;
  /// Slope of log median(total) against log radius.
  LogLogFit trend;
  double max_molecule = 0.0;
  double median_molecule = 0.0;
  LogLogFit molecule_trend;
  bool near_bound_holds = true;
  bool moments_vanish = true;
  bool flagged = false;
};

SweepReport atom_operator_sweep(const SweepConfig& cfg);

/// CSV "atom_id,r0,near,far,total".
void write_sweep_csv(std::ostream& out, const SweepReport& report, bool header = true);

}  // namespace dhs
