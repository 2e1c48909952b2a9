#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace dhs {

/// count log-spaced points from lo to hi inclusive (count == 1 gives {lo}).
std::vector<double> log_grid(double lo, double hi, std::size_t count);

/// Log-spaced grid with a fixed number of points per decade covering [lo, hi].
std::vector<double> log_grid_per_decade(double lo, double hi, double per_decade);

/// Parses "min:max:count" into a log-spaced grid. Throws std::invalid_argument.
std::vector<double> parse_log_grid(const std::string& spec);

}  // namespace dhs
