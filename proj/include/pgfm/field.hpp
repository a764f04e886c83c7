#pragma once

#include <memory>
#include <variant>
#include <vector>

#include "pgfm/core.hpp"
#include "pgfm/quadrature.hpp"

namespace pgfm {

class ScalarField;

namespace field_node {

struct Constant {
  Complex value;
};

/// amplitude * exp(-|y - center|^2 / (2 width^2))
struct Gaussian {
  Point center;
  double width;
  Complex amplitude;
};

/// amplitude on the closed box [lower, upper], zero elsewhere.
struct Indicator {
  Point lower, upper;
  Complex amplitude;
};

/// Indicator of a union of boxes (value 1 on the union, even on shared faces).
struct RegionIndicator {
  std::vector<std::pair<Point, Point>> boxes;
};

struct Monomial {
  Complex coeff;
  std::vector<int> exponents;
};

struct Polynomial {
  std::vector<Monomial> terms;
};

struct Sum {
  std::vector<ScalarField> terms;
};

struct Product {
  std::vector<ScalarField> factors;
};

struct Scale {
  Complex factor;
  std::shared_ptr<const ScalarField> field;
};

}  // namespace field_node

struct SupEstimate {
  double value = 0.0;
  Point witness;
};

/// Closed-form complex-valued function on the base space. Immutable; copies
/// share the expression tree.
class ScalarField {
 public:
  using Node = std::variant<field_node::Constant, field_node::Gaussian, field_node::Indicator,
                            field_node::RegionIndicator, field_node::Polynomial, field_node::Sum,
                            field_node::Product, field_node::Scale>;

  ScalarField() : ScalarField(field_node::Constant{0.0}) {}
  explicit ScalarField(Node node) : node_(std::make_shared<const Node>(std::move(node))) {}

  static ScalarField constant(Complex c) { return ScalarField(field_node::Constant{c}); }

  static ScalarField gaussian(Point center, double width, Complex amplitude) {
    if (!(width > 0.0)) throw std::invalid_argument("gaussian field: width must be positive");
    return ScalarField(field_node::Gaussian{std::move(center), width, amplitude});
  }

  static ScalarField indicator(Point lower, Point upper, Complex amplitude = 1.0) {
    return ScalarField(field_node::Indicator{std::move(lower), std::move(upper), amplitude});
  }

  static ScalarField region_indicator(std::vector<std::pair<Point, Point>> boxes) {
    return ScalarField(field_node::RegionIndicator{std::move(boxes)});
  }

  static ScalarField polynomial(std::vector<field_node::Monomial> terms) {
    return ScalarField(field_node::Polynomial{std::move(terms)});
  }

  static ScalarField sum(std::vector<ScalarField> terms) { return ScalarField(field_node::Sum{std::move(terms)}); }

  static ScalarField product(std::vector<ScalarField> factors) {
    return ScalarField(field_node::Product{std::move(factors)});
  }

  ScalarField scaled(Complex c) const {
    return ScalarField(field_node::Scale{c, std::make_shared<const ScalarField>(*this)});
  }

  friend ScalarField operator+(const ScalarField& a, const ScalarField& b) { return sum({a, b}); }
  friend ScalarField operator*(const ScalarField& a, const ScalarField& b) { return product({a, b}); }
  friend ScalarField operator*(Complex c, const ScalarField& f) { return f.scaled(c); }

  const Node& node() const { return *node_; }

  Complex operator()(const Point& y) const {
    return std::visit([&](const auto& n) { return eval(n, y); }, *node_);
  }

  /// Upper bound of sup|f| over the box by the triangle inequality. Exact for
  /// constants, indicators and single Gaussian bumps centred in the box.
  double sup_bound(const BaseSpace& space) const {
    return std::visit([&](const auto& n) { return bound(n, space); }, *node_);
  }

  /// Largest |f| over a refined grid plus structural candidate points (bump
  /// centres, box centres and corners). A lower estimate of the supremum with
  /// the point where it is attained.
  SupEstimate sampled_sup(const BaseSpace& space) const {
    SupEstimate best;
    auto visit = [&](const Point& p) {
      const double v = std::abs((*this)(p));
      if (best.witness.empty() || v > best.value) best = {v, p};
    };
    for (const auto& p : space.refined_rule(4).nodes) visit(p);
    std::vector<Point> cands;
    collect_candidates(space, cands);
    for (const auto& p : cands) visit(p);
    return best;
  }

  /// Per-axis discontinuity locations (indicator faces); used to align
  /// quadrature panels.
  std::vector<std::vector<double>> breakpoints(int dim) const {
    std::vector<std::vector<double>> out(dim);
    add_breakpoints(out);
    return out;
  }

  void collect_candidates(const BaseSpace& space, std::vector<Point>& out) const {
    std::visit([&](const auto& n) { candidates(n, space, out); }, *node_);
  }

  void add_breakpoints(std::vector<std::vector<double>>& out) const {
    std::visit([&](const auto& n) { breaks(n, out); }, *node_);
  }

 private:
  static Complex eval(const field_node::Constant& n, const Point&) { return n.value; }
  static Complex eval(const field_node::Gaussian& n, const Point& y) {
    return n.amplitude * std::exp(-squared_distance(y, n.center) / (2.0 * n.width * n.width));
  }
  static bool inside(const Point& lo, const Point& hi, const Point& y) {
    for (std::size_t i = 0; i < lo.size(); ++i)
      if (y[i] < lo[i] || y[i] > hi[i]) return false;
    return true;
  }
  static Complex eval(const field_node::Indicator& n, const Point& y) {
    return inside(n.lower, n.upper, y) ? n.amplitude : Complex{0.0};
  }
  static Complex eval(const field_node::RegionIndicator& n, const Point& y) {
    for (const auto& [lo, hi] : n.boxes)
      if (inside(lo, hi, y)) return 1.0;
    return 0.0;
  }
  static Complex eval(const field_node::Polynomial& n, const Point& y) {
    Complex s = 0.0;
    for (const auto& t : n.terms) {
      double m = 1.0;
      for (std::size_t i = 0; i < t.exponents.size(); ++i)
        for (int k = 0; k < t.exponents[i]; ++k) m *= y[i];
      s += t.coeff * m;
    }
    return s;
  }
  static Complex eval(const field_node::Sum& n, const Point& y) {
    Complex s = 0.0;
    for (const auto& t : n.terms) s += t(y);
    return s;
  }
  static Complex eval(const field_node::Product& n, const Point& y) {
    Complex s = 1.0;
    for (const auto& t : n.factors) s *= t(y);
    return s;
  }
  static Complex eval(const field_node::Scale& n, const Point& y) { return n.factor * (*n.field)(y); }

  static double bound(const field_node::Constant& n, const BaseSpace&) { return std::abs(n.value); }
  static double bound(const field_node::Gaussian& n, const BaseSpace& s) {
    // Peak of the bump restricted to the box: nearest box point to the centre.
    Point c = n.center;
    for (int i = 0; i < s.dim(); ++i) c[i] = std::clamp(c[i], s.lower()[i], s.upper()[i]);
    return std::abs(n.amplitude) * std::exp(-squared_distance(c, n.center) / (2.0 * n.width * n.width));
  }
  static double bound(const field_node::Indicator& n, const BaseSpace&) { return std::abs(n.amplitude); }
  static double bound(const field_node::RegionIndicator& n, const BaseSpace&) { return n.boxes.empty() ? 0.0 : 1.0; }
  static double bound(const field_node::Polynomial& n, const BaseSpace& s) {
    double b = 0.0;
    for (const auto& t : n.terms) {
      double m = std::abs(t.coeff);
      for (std::size_t i = 0; i < t.exponents.size(); ++i) {
        const std::size_t axis = i % s.dim();
        const double r = std::max(std::abs(s.lower()[axis]), std::abs(s.upper()[axis]));
        m *= std::pow(r, t.exponents[i]);
      }
      b += m;
    }
    return b;
  }
  static double bound(const field_node::Sum& n, const BaseSpace& s) {
    double b = 0.0;
    for (const auto& t : n.terms) b += t.sup_bound(s);
    return b;
  }
  static double bound(const field_node::Product& n, const BaseSpace& s) {
    double b = 1.0;
    for (const auto& t : n.factors) b *= t.sup_bound(s);
    return b;
  }
  static double bound(const field_node::Scale& n, const BaseSpace& s) {
    return std::abs(n.factor) * n.field->sup_bound(s);
  }

  static Point clip(Point p, const BaseSpace& s) {
    for (int i = 0; i < s.dim() && i < static_cast<int>(p.size()); ++i)
      p[i] = std::clamp(p[i], s.lower()[i], s.upper()[i]);
    return p;
  }
  static void boxes_candidates(const Point& lo, const Point& hi, const BaseSpace& s, std::vector<Point>& out) {
    Point mid(lo.size());
    for (std::size_t i = 0; i < lo.size(); ++i) mid[i] = 0.5 * (lo[i] + hi[i]);
    out.push_back(clip(mid, s));
    out.push_back(clip(lo, s));
    out.push_back(clip(hi, s));
  }
  static void candidates(const field_node::Constant&, const BaseSpace& s, std::vector<Point>& out) {
    out.push_back(s.lower());
  }
  static void candidates(const field_node::Gaussian& n, const BaseSpace& s, std::vector<Point>& out) {
    if (static_cast<int>(n.center.size()) == s.dim()) out.push_back(clip(n.center, s));
  }
  static void candidates(const field_node::Indicator& n, const BaseSpace& s, std::vector<Point>& out) {
    if (static_cast<int>(n.lower.size()) == s.dim()) boxes_candidates(n.lower, n.upper, s, out);
  }
  static void candidates(const field_node::RegionIndicator& n, const BaseSpace& s, std::vector<Point>& out) {
    for (const auto& [lo, hi] : n.boxes) boxes_candidates(lo, hi, s, out);
  }
  static void candidates(const field_node::Polynomial&, const BaseSpace& s, std::vector<Point>& out) {
    out.push_back(s.lower());
    out.push_back(s.upper());
  }
  static void candidates(const field_node::Sum& n, const BaseSpace& s, std::vector<Point>& out) {
    for (const auto& t : n.terms) t.collect_candidates(s, out);
  }
  static void candidates(const field_node::Product& n, const BaseSpace& s, std::vector<Point>& out) {
    for (const auto& t : n.factors) t.collect_candidates(s, out);
  }
  static void candidates(const field_node::Scale& n, const BaseSpace& s, std::vector<Point>& out) {
    n.field->collect_candidates(s, out);
  }

  static void box_breaks(const Point& lo, const Point& hi, std::vector<std::vector<double>>& out) {
    for (std::size_t i = 0; i < lo.size() && i < out.size(); ++i) {
      out[i].push_back(lo[i]);
      out[i].push_back(hi[i]);
    }
  }
  static void breaks(const field_node::Constant&, std::vector<std::vector<double>>&) {}
  static void breaks(const field_node::Gaussian&, std::vector<std::vector<double>>&) {}
  static void breaks(const field_node::Polynomial&, std::vector<std::vector<double>>&) {}
  static void breaks(const field_node::Indicator& n, std::vector<std::vector<double>>& out) {
    box_breaks(n.lower, n.upper, out);
  }
  static void breaks(const field_node::RegionIndicator& n, std::vector<std::vector<double>>& out) {
    for (const auto& [lo, hi] : n.boxes) box_breaks(lo, hi, out);
  }
  static void breaks(const field_node::Sum& n, std::vector<std::vector<double>>& out) {
    for (const auto& t : n.terms) t.add_breakpoints(out);
  }
  static void breaks(const field_node::Product& n, std::vector<std::vector<double>>& out) {
    for (const auto& t : n.factors) t.add_breakpoints(out);
  }
  static void breaks(const field_node::Scale& n, std::vector<std::vector<double>>& out) {
    n.field->add_breakpoints(out);
  }

  std::shared_ptr<const Node> node_;
};

/// Gaussian density with isotropic width, truncated to the box and
/// renormalized to unit mass (exact normalization via erf per axis).
inline ScalarField truncated_gaussian_pdf(const BaseSpace& space, const Point& center, double width) {
  if (!(width > 0.0)) throw std::invalid_argument("truncated_gaussian_pdf: width must be positive");
  double amp = 1.0;
  for (int i = 0; i < space.dim(); ++i) {
    const double z = normal_cdf((space.upper()[i] - center[i]) / width) -
                     normal_cdf((space.lower()[i] - center[i]) / width);
    amp /= width * std::sqrt(2.0 * kPi) * z;
  }
  return ScalarField::gaussian(center, width, amp);
}

}  // namespace pgfm
