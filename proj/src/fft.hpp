#pragma once

#include <complex>
#include <vector>

namespace dhs::detail {

// out[j] = sum_r in[r] * exp(sign * 2 pi i r j / M), unnormalized.
// Thin wrapper over FFTW; planning is serialized internally.
std::vector<std::complex<double>> dft(const std::vector<std::complex<double>>& in, int sign);

// Reusable plan for repeated transforms of one size; execute() is thread-safe.
class DftPlan {
 public:
  DftPlan(std::size_t n, int sign);
  ~DftPlan();
  DftPlan(const DftPlan&) = delete;
  DftPlan& operator=(const DftPlan&) = delete;

  std::size_t size() const { return n_; }
  void execute(const std::complex<double>* in, std::complex<double>* out) const;

 private:
  std::size_t n_;
  void* plan_;
};

}  // namespace dhs::detail
