#pragma once

#include <optional>
#include <vector>

#include "pgfm/core.hpp"
#include "pgfm/field.hpp"
#include "pgfm/quadrature.hpp"

namespace pgfm {

struct Atom {
  Point x;
  Complex weight;
};

/// Weighted point list: a measure after its continuous part has been
/// replaced by quadrature nodes. Every integral in the library is a finite
/// sum against one of these.
struct DiscreteMeasure {
  std::vector<Point> points;
  std::vector<Complex> weights;

  std::size_t size() const { return points.size(); }

  Complex integrate(const ScalarField& f) const {
    Complex s = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) s += weights[i] * f(points[i]);
    return s;
  }

  double total_variation() const {
    double s = 0.0;
    for (const auto& w : weights) s += std::abs(w);
    return s;
  }
};

/// Complex Radon measure on the base space: finitely many Dirac atoms plus
/// an optional density with respect to the reference measure.
class ComplexMeasure {
 public:
  ComplexMeasure() = default;
  ComplexMeasure(std::vector<Atom> atoms, std::optional<ScalarField> density)
      : atoms_(std::move(atoms)), density_(std::move(density)) {}

  static ComplexMeasure zero() { return {}; }
  static ComplexMeasure reference() { return {{}, ScalarField::constant(1.0)}; }
  static ComplexMeasure with_density(ScalarField h) { return {{}, std::move(h)}; }

  const std::vector<Atom>& atoms() const { return atoms_; }
  const std::optional<ScalarField>& density() const { return density_; }

  ComplexMeasure scaled(Complex c) const {
    ComplexMeasure out = *this;
    for (auto& a : out.atoms_) a.weight *= c;
    if (out.density_) out.density_ = out.density_->scaled(c);
    return out;
  }

  friend ComplexMeasure operator+(const ComplexMeasure& a, const ComplexMeasure& b) {
    ComplexMeasure out = a;
    out.atoms_.insert(out.atoms_.end(), b.atoms_.begin(), b.atoms_.end());
    if (a.density_ && b.density_)
      out.density_ = *a.density_ + *b.density_;
    else if (b.density_)
      out.density_ = b.density_;
    return out;
  }
  friend ComplexMeasure operator*(Complex c, const ComplexMeasure& m) { return m.scaled(c); }
  friend ComplexMeasure operator-(const ComplexMeasure& a, const ComplexMeasure& b) { return a + b.scaled(-1.0); }

  /// Atoms at identical locations merged, zero-weight atoms dropped.
  ComplexMeasure coalesced() const {
    std::vector<Atom> merged;
    for (const auto& a : atoms_) {
      auto it = std::find_if(merged.begin(), merged.end(), [&](const Atom& m) { return m.x == a.x; });
      if (it == merged.end())
        merged.push_back(a);
      else
        it->weight += a.weight;
    }
    std::erase_if(merged, [](const Atom& a) { return a.weight == Complex{0.0}; });
    return {std::move(merged), density_};
  }

  void validate(const BaseSpace& space) const {
    for (const auto& a : atoms_) space.require_contains(a.x, "measure atom");
  }

  DiscreteMeasure discretize(const QuadratureRule& rule) const {
    DiscreteMeasure d;
    for (const auto& a : atoms_) {
      d.points.push_back(a.x);
      d.weights.push_back(a.weight);
    }
    if (density_) {
      for (std::size_t q = 0; q < rule.size(); ++q) {
        const Complex w = rule.weights[q] * (*density_)(rule.nodes[q]);
        if (w == Complex{0.0}) continue;
        d.points.push_back(rule.nodes[q]);
        d.weights.push_back(w);
      }
    }
    return d;
  }

  DiscreteMeasure discretize(const BaseSpace& space) const { return discretize(space.rule()); }

 private:
  std::vector<Atom> atoms_;
  std::optional<ScalarField> density_;
};

/// Unit point mass at x.
inline ComplexMeasure dirac(const BaseSpace& space, const Point& x) {
  space.require_contains(x, "dirac");
  return {{Atom{x, 1.0}}, std::nullopt};
}

/// Sum of atom moduli (after coalescing) plus the quadrature of |density|.
inline double total_variation(const ComplexMeasure& eta, const QuadratureRule& rule) {
  const auto c = eta.coalesced();
  double tv = 0.0;
  for (const auto& a : c.atoms()) tv += std::abs(a.weight);
  if (c.density())
    for (std::size_t q = 0; q < rule.size(); ++q) tv += rule.weights[q] * std::abs((*c.density())(rule.nodes[q]));
  return tv;
}

inline double total_variation(const ComplexMeasure& eta, const BaseSpace& space) {
  return total_variation(eta, space.rule());
}

/// Pairing of a field with a measure: atoms are sifted exactly, the density
/// part goes through the quadrature rule.
inline Complex integrate(const ScalarField& f, const ComplexMeasure& eta, const BaseSpace& space,
                         const QuadratureRule& rule) {
  eta.validate(space);
  Complex s = 0.0;
  for (const auto& a : eta.atoms()) s += a.weight * f(a.x);
  if (eta.density())
    for (std::size_t q = 0; q < rule.size(); ++q) s += rule.weights[q] * f(rule.nodes[q]) * (*eta.density())(rule.nodes[q]);
  return s;
}

inline Complex integrate(const ScalarField& f, const ComplexMeasure& eta, const BaseSpace& space) {
  return integrate(f, eta, space, space.rule());
}

}  // namespace pgfm
