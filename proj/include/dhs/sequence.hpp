#pragma once

// Finitely supported sequences on the integers, their quasinorms, the Fourier
// transform on the torus and discrete convolution.

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dhs {

using cplx = std::complex<double>;

/// A function Z -> C that vanishes outside a contiguous stored window
/// [offset, offset + size - 1].
class Sequence {
 public:
  Sequence() = default;
  Sequence(std::int64_t offset, std::vector<cplx> values);

  static Sequence delta(std::int64_t n, cplx value = 1.0);
  static Sequence from_real(std::int64_t offset, std::span<const double> values);

  std::int64_t offset() const { return offset_; }
  std::int64_t first() const { return offset_; }
  std::int64_t last() const { return offset_ + static_cast<std::int64_t>(values_.size()) - 1; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }
  std::span<const cplx> values() const { return values_; }

  /// Value at n; zero outside the stored window.
  cplx operator[](std::int64_t n) const;

  bool is_real(double tol = 0.0) const;
  std::vector<double> real_part() const;
  std::vector<double> imag_part() const;

  /// Drops leading and trailing entries with |f(n)| <= tol.
  Sequence trimmed(double tol = 0.0) const;
  Sequence shifted(std::int64_t k) const;
  /// Restriction (or zero extension) to the window [lo, hi].
  Sequence window(std::int64_t lo, std::int64_t hi) const;

  Sequence scaled(cplx c) const;

  friend Sequence operator+(const Sequence& a, const Sequence& b);
  friend Sequence operator-(const Sequence& a, const Sequence& b);

  /// Equality as functions Z -> C, independent of the storage window.
  friend bool operator==(const Sequence& a, const Sequence& b);

 private:
  std::int64_t offset_ = 0;
  std::vector<cplx> values_;
};

/// Maximum pointwise distance |a(n) - b(n)| over the union of the windows.
double max_abs_difference(const Sequence& a, const Sequence& b);

/// Equispaced angles theta_j = -pi + 2 pi j / M, j = 0..M-1.
struct TorusGrid {
  std::size_t size = 0;
  double theta(std::size_t j) const;
  /// Smallest power-of-two grid that is injective on a support of the given width.
  static TorusGrid for_support(std::size_t support_width);
};

/// (sum |f(n)|^p)^(1/p), or max |f(n)| for p = infinity. Throws std::domain_error for p <= 0.
double lp_quasinorm(const Sequence& f, double p);
/// sum |f(n)|^p without the outer root.
double lp_sum(const Sequence& f, double p);

/// F(f)(theta_j) = sum_n f(n) e^{i n theta_j} on every grid angle.
std::vector<cplx> fourier(const Sequence& f, const TorusGrid& grid);
/// F(f)(theta) at a single angle.
cplx fourier_at(const Sequence& f, double theta);

enum class ConvolutionMode { direct, fast, automatic };

/// Exact discrete convolution (f * g)(n) = sum_m f(n - m) g(m).
/// The fast mode zero-pads to the next power of two and goes through FFTW.
Sequence convolve(const Sequence& f, const Sequence& g, ConvolutionMode mode = ConvolutionMode::automatic);

/// Real-valued direct convolution restricted to an output window:
/// out[i] = sum_m kernel(lo + i - m) * f(m) with the kernel given on [-radius, radius].
/// Entries of the kernel beyond the radius are treated as zero.
std::vector<double> convolve_window(std::span<const double> kernel, std::int64_t kernel_radius,
                                   std::span<const double> f, std::int64_t f_offset,
                                   std::int64_t lo, std::int64_t hi);

// Text format: a line "offset k" followed by one "re im" pair per line.
// Blank lines and lines starting with '#' are ignored.
Sequence read_sequence(std::istream& in);
Sequence read_sequence_file(const std::string& path);
void write_sequence(std::ostream& out, const Sequence& f);

/// CSV "theta,re,im" of a transform on a grid.
void write_transform_csv(std::ostream& out, const TorusGrid& grid, std::span<const cplx> values);

/// Raised by the sequence readers; carries the 1-based line number of the failure.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

}  // namespace dhs
