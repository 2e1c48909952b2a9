#include "dhs/operators.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "dhs/bessel.hpp"
#include "dhs/parallel.hpp"
#include "dhs/quadrature.hpp"
#include "fft.hpp"

namespace dhs {

namespace {

constexpr double kPi = std::numbers::pi;

std::size_t next_pow2(std::size_t n) {
  std::size_t m = 1;
  while (m < n) m <<= 1;
  return m;
}

double l1_norm(const Sequence& f) {
  double s = 0.0;
  for (auto v : f.values()) s += std::abs(v);
  return s;
}

double l2_norm(const Sequence& f) {
  double s = 0.0;
  for (auto v : f.values()) s += std::norm(v);
  return std::sqrt(s);
}

// f on the periodic window [lo, lo + M) and its transform. W_t f is obtained
// by multiplying with exp(-4 t sin^2(pi j / M)); the window is wide enough
// that the wrapped-around kernel mass stays below the truncation tolerance.
class PeriodicHeat {
 public:
  PeriodicHeat(const Sequence& f, std::int64_t radius)
      : lo_(f.first() - radius),
        length_(f.size() + 2 * static_cast<std::size_t>(radius)),
        size_(next_pow2(length_)),
        forward_(size_, -1),
        inverse_(size_, +1),
        spectrum_(size_),
        half_gap_(size_) {
    std::vector<cplx> data(size_);
    for (std::size_t i = 0; i < f.size(); ++i) data[static_cast<std::size_t>(radius) + i] = f.values()[i];
    forward_.execute(data.data(), spectrum_.data());
    for (std::size_t j = 0; j < size_; ++j) {
      const double s = std::sin(kPi * static_cast<double>(j) / static_cast<double>(size_));
      half_gap_[j] = 4.0 * s * s;
    }
  }

  std::int64_t lo() const { return lo_; }
  std::size_t length() const { return length_; }
  std::size_t size() const { return size_; }

  /// W_t f on the whole periodic array; the first length() entries are the window.
  void apply(double t, std::vector<cplx>& scratch, std::vector<cplx>& out) const {
    scratch.resize(size_);
    out.resize(size_);
    const double scale = 1.0 / static_cast<double>(size_);
    for (std::size_t j = 0; j < size_; ++j) scratch[j] = spectrum_[j] * (scale * std::exp(-t * half_gap_[j]));
    inverse_.execute(scratch.data(), out.data());
  }

 private:
  std::int64_t lo_;
  std::size_t length_, size_;
  detail::DftPlan forward_, inverse_;
  std::vector<cplx> spectrum_;
  std::vector<double> half_gap_;
};

Sequence trimmed_real(std::int64_t lo, const std::vector<double>& v, double threshold) {
  std::size_t a = 0, b = v.size();
  while (a < b && !(v[a] > threshold)) ++a;
  while (b > a && !(v[b - 1] > threshold)) --b;
  return Sequence::from_real(lo + static_cast<std::int64_t>(a), std::span(v).subspan(a, b - a));
}

}  // namespace

void OperatorConfig::validate() const {
  if (t_grid.empty()) throw std::invalid_argument("empty t grid");
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    if (!(t_grid[i] > 0.0)) throw std::invalid_argument("t grid must be positive");
    if (i > 0 && !(t_grid[i] > t_grid[i - 1])) throw std::invalid_argument("t grid must be strictly increasing");
  }
  if (g_grid.count < 2 || !(g_grid.u_max > g_grid.u_min)) throw std::invalid_argument("degenerate g grid");
  if (!(truncation_tol > 0.0) || !(g_tail_tol > 0.0)) throw std::invalid_argument("tolerances must be positive");
}

Sequence discrete_laplacian(const Sequence& f) {
  if (f.empty()) return {};
  std::vector<cplx> out(f.size() + 2);
  for (std::size_t i = 0; i < f.size(); ++i) {
    const cplx v = f.values()[i];
    out[i] -= v;
    out[i + 1] += 2.0 * v;
    out[i + 2] -= v;
  }
  return Sequence(f.first() - 1, std::move(out));
}

Sequence heat_apply(const Sequence& f, double t, double tol) {
  if (!(t > 0.0)) throw std::domain_error("heat semigroup needs t > 0");
  if (f.empty()) return {};
  const std::int64_t radius = heat_kernel_radius(t, tol);
  const auto row = heat_kernel_row(radius, t);
  std::vector<cplx> kernel(2 * static_cast<std::size_t>(radius) + 1);
  for (std::int64_t n = -radius; n <= radius; ++n)
    kernel[static_cast<std::size_t>(n + radius)] = row[static_cast<std::size_t>(std::abs(n))];
  return convolve(Sequence(-radius, std::move(kernel)), f);
}

MaximalResult maximal(const Sequence& f, const OperatorConfig& cfg) {
  cfg.validate();
  MaximalResult res;
  if (f.empty()) return res;
  const std::int64_t radius = heat_kernel_radius(cfg.t_grid.back(), cfg.truncation_tol);
  const PeriodicHeat heat(f, radius);
  const std::size_t len = heat.length();
  std::vector<double> coarse(len, 0.0), fine(len, 0.0);
  std::vector<cplx> scratch, w;
  auto sweep = [&](double t, std::vector<double>& best) {
    heat.apply(t, scratch, w);
    for (std::size_t i = 0; i < len; ++i) best[i] = std::max(best[i], std::abs(w[i]));
  };
  for (std::size_t i = 0; i < cfg.t_grid.size(); ++i) {
    sweep(cfg.t_grid[i], coarse);
    if (i + 1 < cfg.t_grid.size()) sweep(std::sqrt(cfg.t_grid[i] * cfg.t_grid[i + 1]), fine);
  }
  double top = 0.0, delta = 0.0;
  for (std::size_t i = 0; i < len; ++i) {
    top = std::max(top, coarse[i]);
    // W_t f -> f as t -> 0, so |f| is the refinement at the short-time end.
    const double start = std::abs(f[heat.lo() + static_cast<std::int64_t>(i)]);
    delta = std::max(delta, std::max(fine[i], start) - coarse[i]);
  }
  res.refinement_delta = top > 0.0 ? delta / top : 0.0;
  res.value = trimmed_real(heat.lo(), coarse, 1e-14 * l2_norm(f));
  return res;
}

GFunctionResult g_function(const Sequence& f, const OperatorConfig& cfg) {
  cfg.validate();
  GFunctionResult res;
  if (f.empty()) return res;
  const auto& grid = cfg.g_grid;
  const double t_hi = std::exp(grid.u_max);
  // |t Delta W_t f| is at most 4 t times the kernel tail.
  const std::int64_t radius = heat_kernel_radius(t_hi, cfg.truncation_tol / (4.0 * t_hi + 1.0)) + 1;
  const PeriodicHeat heat(f, radius);
  // Entries farther than sqrt(t_hi) / 2 from the support are not resolved by the grid.
  const std::int64_t reach = std::min<std::int64_t>(radius, std::max<std::int64_t>(1, static_cast<std::int64_t>(0.5 * std::sqrt(t_hi))));
  const std::size_t from = static_cast<std::size_t>(radius - reach), len = f.size() + 2 * static_cast<std::size_t>(reach);
  const std::size_t size = heat.size();
  const double h = (grid.u_max - grid.u_min) / static_cast<double>(grid.count - 1);
  // The last three integrand values give the local decay rate for the tail beyond u_max.
  std::vector<double> sum(len, 0.0), first(len, 0.0);
  std::vector<std::array<double, 3>> last(len);
  std::vector<cplx> scratch, w;
  for (std::size_t k = 0; k < grid.count; ++k) {
    const double t = std::exp(grid.u(k));
    heat.apply(t, scratch, w);
    const double weight = (k == 0 || k + 1 == grid.count) ? 0.5 * h : h;
    for (std::size_t i = 0; i < len; ++i) {
      // t d/dt W_t f = -t Delta W_t f; the periodic neighbours outside the
      // window carry only truncated mass.
      const std::size_t c = from + i;
      const cplx left = w[(c + size - 1) % size], right = w[(c + 1) % size];
      const double d = std::norm(t * (left - 2.0 * w[c] + right));
      sum[i] += weight * d;
      if (k == 0) first[i] = d;
      if (k + 3 >= grid.count) last[i][k + 3 - grid.count] = d;
    }
  }
  std::vector<double> g(len);
  std::vector<double> uncertainty(len, 0.0);
  double top = 0.0;
  for (std::size_t i = 0; i < len; ++i) {
    // Below u_min the integrand grows like t^2; above u_max it decays like t^-rate.
    sum[i] += 0.5 * first[i];
    const auto& [a, b, c] = last[i];
    if (c > 0.0) {
      const double rate = std::log(b / c) / h, previous = std::log(a / b) / h;
      if (rate > 0.25 && previous > 0.25) {
        sum[i] += c / rate;
        uncertainty[i] = std::abs(c / rate - c / previous);
      } else {
        uncertainty[i] = std::numeric_limits<double>::infinity();
      }
    }
    g[i] = std::sqrt(sum[i]);
    top = std::max(top, g[i]);
  }
  auto ratio = [&](std::size_t i) { return g[i] > 1e-7 * top ? uncertainty[i] / sum[i] : 0.0; };
  // Keep the entries, outward from the support, whose tail is resolved.
  const auto support_lo = static_cast<std::size_t>(reach);
  std::size_t a = support_lo, b = support_lo + f.size();
  for (std::size_t i = a; i < b; ++i) res.tail = std::max(res.tail, ratio(i));
  res.flagged = !(res.tail <= cfg.g_tail_tol);
  while (a > 0 && ratio(a - 1) <= cfg.g_tail_tol) res.tail = std::max(res.tail, ratio(--a));
  while (b < len && ratio(b) <= cfg.g_tail_tol) res.tail = std::max(res.tail, ratio(b++));
  std::vector<double> kept(g.begin() + static_cast<std::ptrdiff_t>(a), g.begin() + static_cast<std::ptrdiff_t>(b));
  res.value = trimmed_real(heat.lo() + static_cast<std::int64_t>(from + a), kept, 1e-14 * l2_norm(f));
  return res;
}

HilbertResult hilbert(const Sequence& f, double p, std::int64_t margin) {
  if (!(p > 0.0)) throw std::domain_error("p must be positive");
  HilbertResult res;
  const auto support = static_cast<std::int64_t>(f.size());
  res.margin = margin > 0 ? margin : std::max<std::int64_t>(1024, 8 * support);
  if (f.empty()) return res;
  const std::int64_t reach = support - 1 + res.margin;
  std::vector<cplx> kernel(2 * static_cast<std::size_t>(reach) + 1);
  for (std::int64_t j = -reach; j <= reach; ++j)
    kernel[static_cast<std::size_t>(j + reach)] = 1.0 / (static_cast<double>(j) + 0.5);
  res.value = convolve(Sequence(-reach, std::move(kernel)), f).window(f.first() - res.margin, f.last() + res.margin);

  // Vanishing moments about the centre c of the support; with j of them,
  // |H f(n)| <= M_j / d^{j+1} at distance d from the window (Taylor remainder
  // of 1 / (x - y) in y).
  const double c = 0.5 * static_cast<double>(f.first() + f.last());
  int j = 0;
  for (; j < 8; ++j) {
    cplx moment = 0.0;
    double scale = 0.0;
    for (std::int64_t m = f.first(); m <= f.last(); ++m) {
      const double y = std::pow(static_cast<double>(m) - c, j);
      moment += f[m] * y;
      scale += std::abs(f[m]) * std::abs(y);
    }
    if (!(std::abs(moment) <= 1e-12 * scale) || scale == 0.0) break;
  }
  res.vanishing_moments = j;
  double mj = 0.0;
  for (std::int64_t m = f.first(); m <= f.last(); ++m) mj += std::abs(f[m]) * std::pow(std::abs(static_cast<double>(m) - c), j);
  const double d0 = static_cast<double>(res.margin) - 0.5;
  if (std::isinf(p)) {
    res.tail = mj / std::pow(d0 + 1.0, j + 1);
  } else {
    const double s = p * (j + 1);
    res.tail = s > 1.0 ? 2.0 * std::pow(mj, p) * std::pow(d0, 1.0 - s) / (s - 1.0)
                       : std::numeric_limits<double>::infinity();
  }
  return res;
}

MultiplierPath parse_multiplier_path(const std::string& name) {
  if (name == "fourier") return MultiplierPath::fourier;
  if (name == "kernel") return MultiplierPath::kernel;
  throw std::invalid_argument("unknown multiplier path '" + name + "' (expected fourier|kernel)");
}

std::string multiplier_path_name(MultiplierPath path) { return path == MultiplierPath::fourier ? "fourier" : "kernel"; }

namespace {

std::int64_t multiplier_margin(const Sequence& f, const MultiplierOptions& opts) {
  return opts.margin > 0 ? opts.margin : std::max<std::int64_t>(64, 4 * static_cast<std::int64_t>(f.size()));
}

MultiplierResult multiplier_fourier(const Sequence& f, const LaplaceMultiplier& mult, const MultiplierOptions& opts) {
  MultiplierResult res;
  const std::int64_t margin = multiplier_margin(f, opts);
  const std::int64_t lo = f.first() - margin, hi = f.last() + margin;
  // Recentre at c so that the phases depend only on offsets from the support.
  const std::int64_t c = f.first() + static_cast<std::int64_t>(f.size() - 1) / 2;
  const double frequency = static_cast<double>(std::max(hi - c, c - lo) + std::max(f.last() - c, c - f.first()) + 1);
  const auto half = composite_nodes(refine_toward_left(uniform_panels(0.0, kPi, kPi / (4.0 * frequency)),
                                                       opts.min_panel),
                                    opts.order);
  std::vector<cplx> out(static_cast<std::size_t>(hi - lo + 1));
  for (int side : {1, -1}) {
    for (std::size_t q = 0; q < half.x.size(); ++q) {
      const double theta = side * half.x[q];
      cplx transform = 0.0;
      const cplx rotate = std::polar(1.0, theta);
      cplx e = std::polar(1.0, static_cast<double>(f.first() - c) * theta);
      for (auto v : f.values()) {
        transform += v * e;
        e *= rotate;
      }
      const cplx a = half.w[q] / (2.0 * kPi) * mult.torus_symbol(theta) * transform;
      // a e^{-i (n - c) theta} for n = lo..hi by a running rotation.
      const cplx step = std::polar(1.0, -theta);
      cplx phase = std::polar(1.0, -static_cast<double>(lo - c) * theta);
      for (auto& v : out) {
        v += a * phase;
        phase *= step;
      }
    }
  }
  res.value = Sequence(lo, std::move(out));
  res.error = mult.sup_norm() * l1_norm(f) * 2.0 * opts.min_panel / (2.0 * kPi);
  return res;
}

MultiplierResult multiplier_kernel_path(const Sequence& f, const MultiplierKernel& kernel, std::int64_t margin) {
  MultiplierResult res;
  const std::int64_t lo = f.first() - margin, hi = f.last() + margin;
  const std::int64_t radius = kernel.radius();
  std::vector<double> full(2 * static_cast<std::size_t>(radius) + 1);
  for (std::int64_t n = -radius; n <= radius; ++n) full[static_cast<std::size_t>(n + radius)] = kernel(n);
  const auto re = convolve_window(full, radius, f.real_part(), f.first(), lo, hi);
  const auto im = convolve_window(full, radius, f.imag_part(), f.first(), lo, hi);
  std::vector<cplx> out(re.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = cplx(re[i], im[i]);
  res.value = Sequence(lo, std::move(out));
  res.error = kernel.tail * l1_norm(f);
  res.flagged = kernel.flagged;
  return res;
}

std::int64_t kernel_reach(const Sequence& f, std::int64_t margin) {
  return static_cast<std::int64_t>(f.size()) - 1 + margin;
}

}  // namespace

MultiplierResult multiplier_apply(const Sequence& f, const LaplaceMultiplier& mult, MultiplierPath path,
                                  const MultiplierOptions& opts) {
  if (f.empty()) return {};
  if (path == MultiplierPath::fourier) return multiplier_fourier(f, mult, opts);
  const std::int64_t margin = multiplier_margin(f, opts);
  return multiplier_kernel_path(f, multiplier_kernel_row(mult, kernel_reach(f, margin), opts.kernel), margin);
}

std::vector<MaximalResult> maximal_batch(std::span<const Sequence> fs, const OperatorConfig& cfg) {
  std::vector<MaximalResult> out(fs.size());
  parallel_for(fs.size(), [&](std::size_t i) { out[i] = maximal(fs[i], cfg); });
  return out;
}

std::vector<GFunctionResult> g_function_batch(std::span<const Sequence> fs, const OperatorConfig& cfg) {
  std::vector<GFunctionResult> out(fs.size());
  parallel_for(fs.size(), [&](std::size_t i) { out[i] = g_function(fs[i], cfg); });
  return out;
}

std::vector<MultiplierResult> multiplier_apply_batch(std::span<const Sequence> fs, const LaplaceMultiplier& mult,
                                                     MultiplierPath path, const MultiplierOptions& opts) {
  std::vector<MultiplierResult> out(fs.size());
  if (path == MultiplierPath::fourier) {
    parallel_for(fs.size(), [&](std::size_t i) { out[i] = multiplier_apply(fs[i], mult, path, opts); });
    return out;
  }
  // One kernel row serves every input.
  std::int64_t reach = 0;
  for (const auto& f : fs)
    if (!f.empty()) reach = std::max(reach, kernel_reach(f, multiplier_margin(f, opts)));
  const auto kernel = multiplier_kernel_row(mult, reach, opts.kernel);
  parallel_for(fs.size(), [&](std::size_t i) {
    if (!fs[i].empty()) out[i] = multiplier_kernel_path(fs[i], kernel, multiplier_margin(fs[i], opts));
  });
  return out;
}

}  // namespace dhs
