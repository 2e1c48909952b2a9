#include "dhs/sequence.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

#include "fft.hpp"

namespace dhs {

Sequence::Sequence(std::int64_t offset, std::vector<cplx> values) : offset_(offset), values_(std::move(values)) {}

Sequence Sequence::delta(std::int64_t n, cplx value) { return Sequence(n, {value}); }

Sequence Sequence::from_real(std::int64_t offset, std::span<const double> values) {
  return Sequence(offset, std::vector<cplx>(values.begin(), values.end()));
}

cplx Sequence::operator[](std::int64_t n) const {
  if (n < first() || n > last()) return 0.0;
  return values_[static_cast<std::size_t>(n - offset_)];
}

bool Sequence::is_real(double tol) const {
  return std::all_of(values_.begin(), values_.end(), [tol](cplx v) { return std::abs(v.imag()) <= tol; });
}

std::vector<double> Sequence::real_part() const {
  std::vector<double> out(values_.size());
  std::transform(values_.begin(), values_.end(), out.begin(), [](cplx v) { return v.real(); });
  return out;
}

std::vector<double> Sequence::imag_part() const {
  std::vector<double> out(values_.size());
  std::transform(values_.begin(), values_.end(), out.begin(), [](cplx v) { return v.imag(); });
  return out;
}

Sequence Sequence::trimmed(double tol) const {
  std::size_t lo = 0, hi = values_.size();
  while (lo < hi && std::abs(values_[lo]) <= tol) ++lo;
  while (hi > lo && std::abs(values_[hi - 1]) <= tol) --hi;
  if (lo == hi) return Sequence();
  return Sequence(offset_ + static_cast<std::int64_t>(lo),
                  std::vector<cplx>(values_.begin() + static_cast<std::ptrdiff_t>(lo),
                                    values_.begin() + static_cast<std::ptrdiff_t>(hi)));
}

Sequence Sequence::shifted(std::int64_t k) const { return Sequence(offset_ + k, values_); }

Sequence Sequence::window(std::int64_t lo, std::int64_t hi) const {
  if (hi < lo) return Sequence(lo, {});
  std::vector<cplx> out(static_cast<std::size_t>(hi - lo + 1));
  for (std::int64_t n = std::max(lo, first()); n <= std::min(hi, last()); ++n)
    out[static_cast<std::size_t>(n - lo)] = values_[static_cast<std::size_t>(n - offset_)];
  return Sequence(lo, std::move(out));
}

Sequence Sequence::scaled(cplx c) const {
  std::vector<cplx> out(values_);
  for (auto& v : out) v *= c;
  return Sequence(offset_, std::move(out));
}

namespace {

std::pair<std::int64_t, std::int64_t> union_window(const Sequence& a, const Sequence& b) {
  if (a.empty()) return {b.first(), b.last()};
  if (b.empty()) return {a.first(), a.last()};
  return {std::min(a.first(), b.first()), std::max(a.last(), b.last())};
}

}  // namespace

Sequence operator+(const Sequence& a, const Sequence& b) {
  auto [lo, hi] = union_window(a, b);
  std::vector<cplx> out(hi >= lo ? static_cast<std::size_t>(hi - lo + 1) : 0);
  for (std::int64_t n = lo; n <= hi; ++n) out[static_cast<std::size_t>(n - lo)] = a[n] + b[n];
  return Sequence(lo, std::move(out));
}

Sequence operator-(const Sequence& a, const Sequence& b) { return a + b.scaled(-1.0); }

bool operator==(const Sequence& a, const Sequence& b) {
  auto [lo, hi] = union_window(a, b);
  for (std::int64_t n = lo; n <= hi; ++n)
    if (a[n] != b[n]) return false;
  return true;
}

double max_abs_difference(const Sequence& a, const Sequence& b) {
  auto [lo, hi] = union_window(a, b);
  double m = 0.0;
  for (std::int64_t n = lo; n <= hi; ++n) m = std::max(m, std::abs(a[n] - b[n]));
  return m;
}

double TorusGrid::theta(std::size_t j) const {
  return -std::numbers::pi + 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(size);
}

TorusGrid TorusGrid::for_support(std::size_t support_width) {
  return TorusGrid{std::bit_ceil(std::max<std::size_t>(2 * support_width, 2))};
}

double lp_sum(const Sequence& f, double p) {
  if (!(p > 0.0)) throw std::domain_error("lp exponent must be positive");
  double s = 0.0;
  for (cplx v : f.values()) {
    const double a = std::abs(v);
    if (a > 0.0) s += (p == 2.0) ? a * a : (p == 1.0 ? a : std::pow(a, p));
  }
  return s;
}

double lp_quasinorm(const Sequence& f, double p) {
  if (!(p > 0.0)) throw std::domain_error("lp exponent must be positive");
  if (std::isinf(p)) {
    double m = 0.0;
    for (cplx v : f.values()) m = std::max(m, std::abs(v));
    return m;
  }
  if (p == 2.0) {
    // Scaled accumulation avoids overflow and underflow of squares.
    double scale = 0.0;
    for (cplx v : f.values()) scale = std::max(scale, std::abs(v));
    if (scale == 0.0) return 0.0;
    double s = 0.0;
    for (cplx v : f.values()) s += std::norm(v / scale);
    return scale * std::sqrt(s);
  }
  return std::pow(lp_sum(f, p), 1.0 / p);
}

std::vector<cplx> fourier(const Sequence& f, const TorusGrid& grid) {
  const std::size_t m = grid.size;
  if (m == 0) return {};
  const auto mm = static_cast<std::int64_t>(m);
  // e^{i n theta_j} = (-1)^n e^{2 pi i n j / M}, so fold (-1)^n f(n) modulo M and run a backward DFT.
  std::vector<cplx> folded(m);
  for (std::int64_t n = f.first(); n <= f.last(); ++n) {
    const std::int64_t r = ((n % mm) + mm) % mm;
    const cplx v = f[n];
    folded[static_cast<std::size_t>(r)] += (n % 2 == 0) ? v : -v;
  }
  return detail::dft(folded, +1);
}

cplx fourier_at(const Sequence& f, double theta) {
  cplx s = 0.0;
  for (std::int64_t n = f.first(); n <= f.last(); ++n)
    s += f[n] * std::polar(1.0, static_cast<double>(n) * theta);
  return s;
}

namespace {

Sequence convolve_direct(const Sequence& f, const Sequence& g) {
  const std::size_t len = f.size() + g.size() - 1;
  std::vector<cplx> out(len);
  auto fv = f.values();
  auto gv = g.values();
  for (std::size_t i = 0; i < fv.size(); ++i) {
    const cplx a = fv[i];
    if (a == cplx(0.0)) continue;
    for (std::size_t j = 0; j < gv.size(); ++j) out[i + j] += a * gv[j];
  }
  return Sequence(f.offset() + g.offset(), std::move(out));
}

Sequence convolve_fast(const Sequence& f, const Sequence& g) {
  const std::size_t len = f.size() + g.size() - 1;
  const std::size_t m = std::bit_ceil(len);
  std::vector<cplx> a(m), b(m);
  std::copy(f.values().begin(), f.values().end(), a.begin());
  std::copy(g.values().begin(), g.values().end(), b.begin());
  auto fa = detail::dft(a, -1);
  auto fb = detail::dft(b, -1);
  for (std::size_t i = 0; i < m; ++i) fa[i] *= fb[i];
  auto c = detail::dft(fa, +1);
  const double inv = 1.0 / static_cast<double>(m);
  std::vector<cplx> out(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(len));
  for (auto& v : out) v *= inv;
  return Sequence(f.offset() + g.offset(), std::move(out));
}

}  // namespace

Sequence convolve(const Sequence& f, const Sequence& g, ConvolutionMode mode) {
  if (f.empty() || g.empty()) return Sequence(f.offset() + g.offset(), {});
  if (mode == ConvolutionMode::automatic)
    mode = std::min(f.size(), g.size()) <= 64 ? ConvolutionMode::direct : ConvolutionMode::fast;
  return mode == ConvolutionMode::direct ? convolve_direct(f, g) : convolve_fast(f, g);
}

std::vector<double> convolve_window(std::span<const double> kernel, std::int64_t kernel_radius,
                                   std::span<const double> f, std::int64_t f_offset,
                                   std::int64_t lo, std::int64_t hi) {
  std::vector<double> out(hi >= lo ? static_cast<std::size_t>(hi - lo + 1) : 0);
  const auto flen = static_cast<std::int64_t>(f.size());
  for (std::int64_t n = lo; n <= hi; ++n) {
    // m ranges over the support of f intersected with |n - m| <= radius.
    const std::int64_t mlo = std::max(f_offset, n - kernel_radius);
    const std::int64_t mhi = std::min(f_offset + flen - 1, n + kernel_radius);
    double s = 0.0;
    for (std::int64_t m = mlo; m <= mhi; ++m)
      s += kernel[static_cast<std::size_t>(n - m + kernel_radius)] * f[static_cast<std::size_t>(m - f_offset)];
    out[static_cast<std::size_t>(n - lo)] = s;
  }
  return out;
}

ParseError::ParseError(std::size_t line, const std::string& what)
    : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

Sequence read_sequence(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  bool have_offset = false;
  std::int64_t offset = 0;
  std::vector<cplx> values;
  while (std::getline(in, line)) {
    ++lineno;
    const auto start = line.find_first_not_of(" \t\r");
    if (start == std::string::npos || line[start] == '#') continue;
    std::istringstream ls(line);
    if (!have_offset) {
      std::string key;
      if (!(ls >> key >> offset) || key != "offset") throw ParseError(lineno, "expected 'offset <integer>'");
      std::string rest;
      if (ls >> rest) throw ParseError(lineno, "trailing characters after offset");
      have_offset = true;
      continue;
    }
    double re = 0.0, im = 0.0;
    if (!(ls >> re)) throw ParseError(lineno, "expected a real part");
    if (!(ls >> im)) {
      if (!ls.eof()) throw ParseError(lineno, "malformed imaginary part");
      im = 0.0;
    }
    std::string rest;
    if (ls.clear(), ls >> rest) throw ParseError(lineno, "trailing characters after value");
    values.emplace_back(re, im);
  }
  if (!have_offset) throw ParseError(lineno == 0 ? 1 : lineno, "missing 'offset' header");
  return Sequence(offset, std::move(values));
}

Sequence read_sequence_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_sequence(in);
}

void write_sequence(std::ostream& out, const Sequence& f) {
  char buf[96];
  out << "offset " << f.offset() << '\n';
  for (cplx v : f.values()) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g\n", v.real(), v.imag());
    out << buf;
  }
}

void write_transform_csv(std::ostream& out, const TorusGrid& grid, std::span<const cplx> values) {
  char buf[128];
  out << "theta,re,im\n";
  for (std::size_t j = 0; j < values.size(); ++j) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", grid.theta(j), values[j].real(), values[j].imag());
    out << buf;
  }
}

}  // namespace dhs
