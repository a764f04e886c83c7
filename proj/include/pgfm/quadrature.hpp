#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pgfm/core.hpp"
#include "pgfm/rng.hpp"

namespace pgfm {

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
/// Newton iteration on the three-term Legendre recurrence.
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: order must be positive");
  std::vector<double> x(n), w(n);
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = 0.0;
      for (int k = 1; k <= n; ++k) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    // Recompute the derivative at the converged root.
    double p0 = 1.0, p1 = 0.0;
    for (int k = 1; k <= n; ++k) {
      const double p2 = p1;
      p1 = p0;
      p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
    }
    dp = n * (z * p0 - p1) / (z * z - 1.0);
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
  if (n % 2 == 1) x[n / 2] = 0.0;
  return {x, w};
}

/// A product quadrature rule over an axis-aligned box.
struct QuadratureRule {
  std::vector<Point> nodes;
  std::vector<double> weights;
  /// Per-axis polynomial degree integrated exactly; -1 for sampled rules.
  int degree = -1;

  std::size_t size() const { return nodes.size(); }

  double weight_sum() const {
    double s = 0.0;
    for (double w : weights) s += w;
    return s;
  }
};

/// One-dimensional composite Gauss-Legendre rule with panels between the
/// given breakpoints (endpoints included).
inline std::pair<std::vector<double>, std::vector<double>> composite_gauss_legendre_1d(
    std::vector<double> breakpoints, int nodes_per_panel) {
  std::sort(breakpoints.begin(), breakpoints.end());
  breakpoints.erase(std::unique(breakpoints.begin(), breakpoints.end(),
                                [](double a, double b) { return std::abs(a - b) < 1e-14; }),
                    breakpoints.end());
  const auto [gx, gw] = gauss_legendre(nodes_per_panel);
  std::vector<double> x, w;
  for (std::size_t p = 0; p + 1 < breakpoints.size(); ++p) {
    const double a = breakpoints[p], b = breakpoints[p + 1];
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    for (int i = 0; i < nodes_per_panel; ++i) {
      x.push_back(mid + half * gx[i]);
      w.push_back(half * gw[i]);
    }
  }
  return {x, w};
}

inline QuadratureRule tensor_rule(const std::vector<std::pair<std::vector<double>, std::vector<double>>>& axes,
                                  int degree) {
  QuadratureRule rule;
  rule.degree = degree;
  rule.nodes.push_back({});
  rule.weights.push_back(1.0);
  for (const auto& [ax, aw] : axes) {
    std::vector<Point> nodes;
    std::vector<double> weights;
    nodes.reserve(rule.nodes.size() * ax.size());
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      for (std::size_t k = 0; k < ax.size(); ++k) {
        Point p = rule.nodes[i];
        p.push_back(ax[k]);
        nodes.push_back(std::move(p));
        weights.push_back(rule.weights[i] * aw[k]);
      }
    }
    rule.nodes = std::move(nodes);
    rule.weights = std::move(weights);
  }
  return rule;
}

enum class QuadratureKind { gauss_legendre, monte_carlo };

struct QuadratureSpec {
  QuadratureKind kind = QuadratureKind::gauss_legendre;
  /// Nodes per axis (Gauss-Legendre) or total samples (Monte Carlo); 0 selects
  /// the dimension default.
  int order = 0;
  std::uint64_t seed = 0;
};

inline int default_order(int dim) {
  if (dim == 1) return 32;
  if (dim == 2) return 16;
  return 8;
}

/// Compact axis-aligned box in R^d with Lebesgue reference measure.
class BaseSpace {
 public:
  BaseSpace(Point lower, Point upper, QuadratureSpec spec = {})
      : lower_(std::move(lower)), upper_(std::move(upper)), spec_(spec) {
    if (lower_.empty() || lower_.size() != upper_.size())
      throw std::invalid_argument("BaseSpace: lower/upper must be nonempty and of equal length");
    for (std::size_t i = 0; i < lower_.size(); ++i) {
      if (!(upper_[i] > lower_[i]) || !std::isfinite(lower_[i]) || !std::isfinite(upper_[i]))
        throw std::invalid_argument("BaseSpace: upper[" + std::to_string(i) + "] must exceed lower[" +
                                    std::to_string(i) + "]");
    }
    if (spec_.order == 0)
      spec_.order = spec_.kind == QuadratureKind::gauss_legendre ? default_order(dim()) : 4096;
    rule_ = std::make_shared<const QuadratureRule>(build_rule());
  }

  static BaseSpace unit_interval() { return BaseSpace({0.0}, {1.0}); }
  static BaseSpace unit_square() { return BaseSpace({0.0, 0.0}, {1.0, 1.0}); }

  int dim() const { return static_cast<int>(lower_.size()); }
  const Point& lower() const { return lower_; }
  const Point& upper() const { return upper_; }
  const QuadratureSpec& spec() const { return spec_; }
  const QuadratureRule& rule() const { return *rule_; }

  double volume() const {
    double v = 1.0;
    for (int i = 0; i < dim(); ++i) v *= upper_[i] - lower_[i];
    return v;
  }

  bool contains(const Point& x, double tol = 1e-12) const {
    if (static_cast<int>(x.size()) != dim()) return false;
    for (int i = 0; i < dim(); ++i)
      if (x[i] < lower_[i] - tol || x[i] > upper_[i] + tol) return false;
    return true;
  }

  void require_contains(const Point& x, const std::string& what) const {
    if (!contains(x)) throw DomainError(what + ": point outside the base space", x);
  }

  /// Composite Gauss-Legendre rule whose panels are split at the given
  /// per-axis breakpoints (clipped to the box).
  QuadratureRule composite_rule(const std::vector<std::vector<double>>& breakpoints, int nodes_per_panel) const {
    std::vector<std::pair<std::vector<double>, std::vector<double>>> axes;
    for (int i = 0; i < dim(); ++i) {
      std::vector<double> b{lower_[i], upper_[i]};
      if (i < static_cast<int>(breakpoints.size()))
        for (double t : breakpoints[i])
          if (t > lower_[i] && t < upper_[i]) b.push_back(t);
      axes.push_back(composite_gauss_legendre_1d(std::move(b), nodes_per_panel));
    }
    return tensor_rule(axes, 2 * nodes_per_panel - 1);
  }

  /// Base rule with each axis split into `factor` equal panels.
  QuadratureRule refined_rule(int factor) const {
    const int per_panel = spec_.kind == QuadratureKind::gauss_legendre ? spec_.order : default_order(dim());
    std::vector<std::vector<double>> bps(dim());
    for (int i = 0; i < dim(); ++i)
      for (int k = 1; k < factor; ++k) bps[i].push_back(lower_[i] + (upper_[i] - lower_[i]) * k / factor);
    return composite_rule(bps, per_panel);
  }

  bool operator==(const BaseSpace& o) const {
    return lower_ == o.lower_ && upper_ == o.upper_ && spec_.kind == o.spec_.kind && spec_.order == o.spec_.order &&
           spec_.seed == o.spec_.seed;
  }

 private:
  QuadratureRule build_rule() const {
    if (spec_.kind == QuadratureKind::gauss_legendre) return composite_rule({}, spec_.order);
    QuadratureRule rule;
    Rng rng(spec_.seed);
    const double w = volume() / spec_.order;
    for (int s = 0; s < spec_.order; ++s) {
      Point p(dim());
      for (int i = 0; i < dim(); ++i) p[i] = rng.uniform(lower_[i], upper_[i]);
      rule.nodes.push_back(std::move(p));
      rule.weights.push_back(w);
    }
    rule.degree = -1;
    return rule;
  }

  Point lower_, upper_;
  QuadratureSpec spec_;
  std::shared_ptr<const QuadratureRule> rule_;
};

}  // namespace pgfm
