#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pgfm {

using Complex = std::complex<double>;

/// A point of the base space, one coordinate per axis.
using Point = std::vector<double>;

/// Ordered tuple of points; the argument of a Janossy density.
using PointTuple = std::span<const Point>;

/// Raised when a point or region leaves the base space, or an argument is
/// outside the admissible set of an operation. Carries the offending value.
class DomainError : public std::domain_error {
 public:
  DomainError(const std::string& what, Point witness = {})
      : std::domain_error(what), witness_(std::move(witness)) {}

  const Point& witness() const noexcept { return witness_; }

 private:
  Point witness_;
};

/// Malformed JSON input. The message starts with the path of the offending
/// element, e.g. `model.family.pmf[2]: expected number`.
class SchemaError : public std::runtime_error {
 public:
  SchemaError(const std::string& path, const std::string& what)
      : std::runtime_error(path + ": " + what), path_(path) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

inline double squared_distance(const Point& a, const Point& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

/// |a - b| / |b|, or |a| when b is exactly zero.
inline double relative_error(Complex a, Complex b) {
  const double scale = std::abs(b);
  return scale == 0.0 ? std::abs(a) : std::abs(a - b) / scale;
}

inline double factorial(int n) {
  double f = 1.0;
  for (int k = 2; k <= n; ++k) f *= k;
  return f;
}

inline double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

/// Standard normal CDF.
inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

inline constexpr double kPi = 3.14159265358979323846;

}  // namespace pgfm
