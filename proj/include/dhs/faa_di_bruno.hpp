#pragma once

// Closed-form theta derivatives of the torus heat profile
// phi_t(theta) = exp(-2t (1 - cos theta)), expanded with Faa di Bruno's formula.

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace dhs {

/// Torus heat profile exp(-2t (1 - cos theta)).
double torus_profile(double t, double theta);

/// One summand a * t^{t_power} * cos^{cos_power} * sin^{sin_power} * phi_t
/// of the k-th theta derivative of phi_t.
struct FaaDiBrunoTerm {
  /// multi_index[j - 1] = m_j, the multiplicity of the j-th derivative of the exponent.
  std::vector<int> multi_index;
  double coefficient = 0.0;
  int cos_power = 0;
  int sin_power = 0;
  int t_power = 0;
  /// k + sin_power - 2 * t_power.
  int sigma = 0;
};

class CapacityError : public std::length_error {
 public:
  using std::length_error::length_error;
};

inline constexpr int kDefaultMaxDerivativeOrder = 12;

/// All terms for derivative order k (1 <= k <= k_max), one per tuple
/// (m_1, ..., m_k) with sum_j j * m_j = k. Throws CapacityError for k > k_max.
std::vector<FaaDiBrunoTerm> faa_di_bruno_terms(int k, int k_max = kDefaultMaxDerivativeOrder);

/// Evaluates d^k/dtheta^k phi_t and t d/dt of it from a cached term list.
class ProfileDerivative {
 public:
  explicit ProfileDerivative(int k);

  int order() const { return k_; }
  const std::vector<FaaDiBrunoTerm>& terms() const { return terms_; }

  /// d^k/dtheta^k phi_t(theta); k = 0 gives phi_t itself.
  double value(double t, double theta) const;
  /// t d/dt d^k/dtheta^k phi_t(theta).
  double t_dt_value(double t, double theta) const;
  /// Both at once, sharing the power tables.
  void values(double t, double theta, double& value, double& t_dt) const;

 private:
  int k_;
  std::vector<FaaDiBrunoTerm> terms_;
};

double phi_theta_derivative(int k, double t, double theta);
double phi_t_derivative_of_theta_deriv(int k, double t, double theta);

}  // namespace dhs
