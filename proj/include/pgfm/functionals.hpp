#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pgfm/measure.hpp"
#include "pgfm/model.hpp"
#include "pgfm/set_integral.hpp"

namespace pgfm {

/// h left the class of functions bounded by 1 in modulus.
class GammaViolation : public DomainError {
 public:
  GammaViolation(double sup, Point witness)
      : DomainError("field exceeds |h| <= 1: sup |h| = " + std::to_string(sup), std::move(witness)), sup_(sup) {}

  double sup() const noexcept { return sup_; }

 private:
  double sup_;
};

struct FunctionalValue {
  Complex value = 0.0;
  std::size_t terms = 0;
  bool sampled = false;
  /// Set when the input field has |h| > 1 somewhere (witness below).
  bool gamma_violation = false;
  double sup_abs = 0.0;
  Point witness;
};

/// G[h] = int h^X p(X) dX, evaluated by direct enumeration of the set
/// integral over the quadrature rule (default: the base rule).
inline FunctionalValue pgfl_eval(const FiniteSetDensity& model, const ScalarField& h, bool enforce_gamma = false,
                                 const QuadratureRule* rule = nullptr, const IntegrationOptions& opt = {}) {
  const auto& space = model.space();
  FunctionalValue out;
  const auto sup = h.sampled_sup(space);
  out.sup_abs = sup.value;
  out.witness = sup.witness;
  out.gamma_violation = sup.value > 1.0 + 1e-12;
  if (out.gamma_violation && enforce_gamma) throw GammaViolation(sup.value, sup.witness);

  // h^X p(X) against mu^X equals p(X) against (h mu)^X node by node.
  const auto weighted = ComplexMeasure::with_density(h).discretize(rule ? *rule : space.rule());
  const auto r = set_integral(janossy_set_function(model), weighted, opt);
  out.value = r.value;
  out.terms = r.terms;
  out.sampled = r.sampled;
  return out;
}

/// G[eta] = sum_n 1/n! int j_n d(eta x ... x eta), evaluated through the
/// model's slot-wise iterated integral.
inline Complex pgfm_eval(const FiniteSetDensity& model, const DiscreteMeasure& eta, const IntegrationOptions& opt = {}) {
  Complex s = 0.0;
  std::vector<const DiscreteMeasure*> slots;
  for (int n = 0; n <= model.n_max(); ++n) {
    s += model.iterated_integral(slots, opt) / factorial(n);
    slots.push_back(&eta);
  }
  return s;
}

inline Complex pgfm_eval(const FiniteSetDensity& model, const ComplexMeasure& eta, const QuadratureRule* rule = nullptr,
                         const IntegrationOptions& opt = {}) {
  eta.validate(model.space());
  return pgfm_eval(model, eta.discretize(rule ? *rule : model.space().rule()), opt);
}

/// Quadrature rule with panel faces on every box face of the region.
inline QuadratureRule region_rule(const BaseSpace& space, const Region& S) {
  const int per_panel = std::max(4, default_order(space.dim()) / 2);
  return space.composite_rule(S.indicator().breakpoints(space.dim()), per_panel);
}

/// beta(S) = G[1_S].
inline double bmf_eval(const FiniteSetDensity& model, const Region& S, const IntegrationOptions& opt = {}) {
  S.validate(model.space());
  if (S.is_empty()) return model.janossy_unchecked({});
  const auto rule = region_rule(model.space(), S);
  return pgfl_eval(model, S.indicator(), false, &rule, opt).value.real();
}

struct ValidationReport {
  double normalization = 0.0;
  double normalization_residual = 0.0;
  double symmetry_residual = 0.0;
  double min_janossy = 0.0;
  double j0 = 0.0;
  double spatial_imag_max = 0.0;
  KBound K;
  double truncated_mass = 0.0;
  bool sampled = false;
  std::vector<std::string> failures;

  bool ok() const { return failures.empty(); }
};

/// Re-checks every model invariant: unit set-integral mass, symmetry at
/// sampled tuples, nonnegativity at node tuples, j_0 in [0, 1], finite K.
inline ValidationReport validate(const FiniteSetDensity& model, double normalization_tol = 1e-6,
                                 std::uint64_t seed = 7, const IntegrationOptions& opt = {}) {
  ValidationReport rep;
  const auto& space = model.space();
  const auto integral = set_integral(janossy_set_function(model), ComplexMeasure::reference(), space, opt);
  rep.normalization = integral.value.real();
  rep.normalization_residual = std::abs(integral.value - 1.0);
  rep.sampled = integral.sampled;
  rep.j0 = model.janossy_unchecked({});
  rep.truncated_mass = model.truncated_mass();
  rep.K = bound_K(model);

  Rng rng = Rng(seed).split("validate");
  auto random_point = [&] {
    Point p(space.dim());
    for (int i = 0; i < space.dim(); ++i) p[i] = rng.uniform(space.lower()[i], space.upper()[i]);
    return p;
  };
  rep.min_janossy = rep.j0;
  const auto& nodes = space.rule().nodes;
  for (int n = 1; n <= model.n_max(); ++n) {
    for (int t = 0; t < 64; ++t) {
      std::vector<Point> xs(n);
      for (auto& x : xs) x = random_point();
      const double base = model.janossy_unchecked(xs);
      std::vector<Point> rev(xs.rbegin(), xs.rend());
      std::vector<Point> rot(xs.begin() + 1, xs.end());
      rot.push_back(xs.front());
      const double scale = std::max(std::abs(base), 1e-300);
      rep.symmetry_residual = std::max({rep.symmetry_residual, std::abs(model.janossy_unchecked(rev) - base) / scale,
                                        std::abs(model.janossy_unchecked(rot) - base) / scale});
      std::vector<Point> at_nodes(n);
      for (auto& x : at_nodes) x = nodes[rng.index(nodes.size())];
      rep.min_janossy = std::min({rep.min_janossy, base, model.janossy_unchecked(at_nodes)});
    }
  }
  std::visit(
      [&](const auto& f) {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, family::IidCluster> || std::is_same_v<T, family::Bernoulli>)
          for (const auto& p : nodes) rep.spatial_imag_max = std::max(rep.spatial_imag_max, std::abs(f.spatial(p).imag()));
      },
      model.family());

  if (rep.normalization_residual > normalization_tol) rep.failures.push_back("normalization");
  if (rep.symmetry_residual > 1e-12) rep.failures.push_back("symmetry");
  if (rep.min_janossy < 0.0) rep.failures.push_back("nonnegativity");
  if (rep.j0 < 0.0 || rep.j0 > 1.0) rep.failures.push_back("j0 outside [0,1]");
  if (!std::isfinite(rep.K.value)) rep.failures.push_back("K not finite");
  if (rep.spatial_imag_max > 1e-12) rep.failures.push_back("spatial density not real");
  return rep;
}

}  // namespace pgfm
