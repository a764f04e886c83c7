#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "pgfm/core.hpp"

namespace pgfm {

struct ConvergenceRow {
  double parameter = 0.0;
  Complex value = 0.0;
};

using ConvergenceTable = std::vector<ConvergenceRow>;

/// Two-level Richardson extrapolation on the last two rows of a schedule
/// decreasing in the parameter, assuming error ~ C * parameter^order.
inline Complex richardson(const ConvergenceTable& table, double order) {
  if (table.size() < 2) throw std::invalid_argument("richardson: need at least two schedule entries");
  const auto& big = table[table.size() - 2];
  const auto& small = table.back();
  if (!(small.parameter > 0.0 && big.parameter > small.parameter))
    throw std::invalid_argument("richardson: schedule must be positive and strictly decreasing");
  const double tp = std::pow(big.parameter / small.parameter, order);
  return (tp * small.value - big.value) / (tp - 1.0);
}

/// Least-squares slope of log(y) against log(x).
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("loglog_slope: need two or more pairs");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// Errors against `target` along the table.
inline std::vector<double> errors_against(const ConvergenceTable& table, Complex target) {
  std::vector<double> e;
  for (const auto& r : table) e.push_back(std::abs(r.value - target));
  return e;
}

/// Strictly decreasing, with values at or below `floor` counted as converged.
inline bool strictly_decreasing(const std::vector<double>& e, double floor = 0.0) {
  for (std::size_t i = 1; i < e.size(); ++i)
    if (!(e[i] < e[i - 1] || e[i] <= floor)) return false;
  return true;
}

/// Heuristic divergence test: successive differences grow.
inline bool diverging(const ConvergenceTable& table) {
  if (table.size() < 3) return false;
  const auto n = table.size();
  const double d1 = std::abs(table[n - 2].value - table[n - 3].value);
  const double d2 = std::abs(table[n - 1].value - table[n - 2].value);
  return d2 > d1 * (1.0 + 1e-9) && d2 > 1e-12 * std::max(1.0, std::abs(table.back().value));
}

}  // namespace pgfm
