#include "dhs/grid.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace dhs {

std::vector<double> log_grid(double lo, double hi, std::size_t count) {
  if (!(lo > 0.0) || !(hi >= lo)) throw std::invalid_argument("log grid needs 0 < lo <= hi");
  std::vector<double> out(count);
  if (count == 0) return out;
  if (count == 1) {
    out[0] = lo;
    return out;
  }
  const double a = std::log(lo), b = std::log(hi);
  for (std::size_t i = 0; i < count; ++i)
    out[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1));
  out.front() = lo;
  out.back() = hi;
  return out;
}

std::vector<double> log_grid_per_decade(double lo, double hi, double per_decade) {
  const double decades = std::log10(hi / lo);
  const auto count = static_cast<std::size_t>(std::ceil(decades * per_decade)) + 1;
  return log_grid(lo, hi, count);
}

std::vector<double> parse_log_grid(const std::string& spec) {
  std::istringstream in(spec);
  double lo = 0.0, hi = 0.0;
  long long count = 0;
  char c1 = 0, c2 = 0;
  if (!(in >> lo >> c1 >> hi >> c2 >> count) || c1 != ':' || c2 != ':' || count < 1)
    throw std::invalid_argument("expected min:max:count, got '" + spec + "'");
  std::string rest;
  if (in >> rest) throw std::invalid_argument("trailing characters in grid spec '" + spec + "'");
  return log_grid(lo, hi, static_cast<std::size_t>(count));
}

}  // namespace dhs
