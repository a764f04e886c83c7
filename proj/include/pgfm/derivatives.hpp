#pragma once

#include <algorithm>
#include <functional>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "pgfm/extrapolation.hpp"
#include "pgfm/functionals.hpp"
#include "pgfm/sampling.hpp"
#include "pgfm/test_sequence.hpp"

namespace pgfm {

/// sup |h + eps * member| exceeded 1 for this (eps, lambda) pair.
struct DomainViolation {
  double eps = 0.0;
  double lambda = 0.0;
  double sup = 0.0;
  Point witness;
};

struct DerivativeReport {
  std::string method;
  Complex value = 0.0;
  /// Raw schedule: parameter (eps, lambda or radius) -> estimate.
  ConvergenceTable table;
  std::optional<Complex> extrapolated;
  /// Largest relative spread across site orderings.
  std::optional<double> commutation_residual;
  bool truncated = false;
  bool divergent = false;
  std::vector<DomainViolation> violations;
  std::vector<std::string> warnings;
};

using Functional = std::function<Complex(const ComplexMeasure&)>;

namespace detail {

inline std::vector<std::string> coincidence_warnings(std::span<const Point> sites) {
  std::vector<std::string> w;
  for (std::size_t i = 0; i < sites.size(); ++i)
    for (std::size_t j = i + 1; j < sites.size(); ++j)
      if (sites[i] == sites[j])
        w.push_back("sites " + std::to_string(i) + " and " + std::to_string(j) + " coincide");
  return w;
}

/// Sum over cardinalities n >= m, slot positions i_1 < ... < i_m and
/// orderings of the directions, of the iterated integral with direction
/// pi(k) in slot i_k and eta in every other slot, weighted by 1/n!.
inline Complex slot_expansion(const FiniteSetDensity& model, const std::vector<DiscreteMeasure>& dirs,
                              const DiscreteMeasure& eta, const IntegrationOptions& opt) {
  const int m = static_cast<int>(dirs.size());
  Complex total = 0.0;
  std::vector<const DiscreteMeasure*> slots;
  std::vector<int> perm(m);
  for (int n = m; n <= model.n_max(); ++n) {
    Complex level = 0.0;
    std::vector<bool> chosen(n, false);
    std::fill(chosen.end() - m, chosen.end(), true);
    do {
      std::iota(perm.begin(), perm.end(), 0);
      do {
        slots.assign(n, &eta);
        for (int i = 0, k = 0; i < n; ++i)
          if (chosen[i]) slots[i] = &dirs[perm[k++]];
        level += model.iterated_integral(slots, opt);
      } while (std::next_permutation(perm.begin(), perm.end()));
    } while (std::next_permutation(chosen.begin(), chosen.end()));
    total += level / factorial(n);
  }
  return total;
}

}  // namespace detail

/// int h^X p(X u Y) against eta^X: the set integral of p(. u Y), with the Y
/// points held fixed.
inline Complex oracle_derivative(const FiniteSetDensity& model, std::span<const Point> sites,
                                 const ComplexMeasure& eta, const QuadratureRule* rule = nullptr,
                                 const IntegrationOptions& opt = {}) {
  for (const auto& y : sites) model.space().require_contains(y, "derivative site");
  const int m = static_cast<int>(sites.size());
  if (m > model.n_max()) return 0.0;
  std::vector<Point> fixed(sites.begin(), sites.end());
  SetFunction F{[&model, fixed](PointTuple xs) -> Complex {
                  std::vector<Point> all(fixed);
                  all.insert(all.end(), xs.begin(), xs.end());
                  return model.janossy_unchecked(all);
                },
                model.n_max() - m};
  eta.validate(model.space());
  return set_integral(F, eta.discretize(rule ? *rule : model.space().rule()), opt).value;
}

inline Complex oracle_derivative(const FiniteSetDensity& model, std::span<const Point> sites, const ScalarField& h,
                                 const QuadratureRule* rule = nullptr, const IntegrationOptions& opt = {}) {
  return oracle_derivative(model, sites, ComplexMeasure::with_density(h), rule, opt);
}

/// m-th directional derivative of the PGFM at eta in directions nu_1..nu_m,
/// by the closed-form slot expansion. Zero when m > n_max.
inline Complex directional_derivative(const FiniteSetDensity& model, std::span<const ComplexMeasure> directions,
                                      const ComplexMeasure& eta, const QuadratureRule* rule = nullptr,
                                      const IntegrationOptions& opt = {}) {
  const auto& q = rule ? *rule : model.space().rule();
  eta.validate(model.space());
  std::vector<DiscreteMeasure> dirs;
  for (const auto& d : directions) {
    d.validate(model.space());
    dirs.push_back(d.discretize(q));
  }
  return detail::slot_expansion(model, dirs, eta.discretize(q), opt);
}

/// Functional derivative at the sites: directional derivative with Dirac
/// directions. Reports truncation, coincident sites and the spread across
/// site orderings (for 2 <= m <= 4).
inline DerivativeReport pgfm_derivative(const FiniteSetDensity& model, std::span<const Point> sites,
                                        const ComplexMeasure& eta, const QuadratureRule* rule = nullptr,
                                        const IntegrationOptions& opt = {}) {
  DerivativeReport r;
  r.method = "pgfm";
  const auto& space = model.space();
  std::vector<ComplexMeasure> dirs;
  for (const auto& y : sites) dirs.push_back(dirac(space, y));
  r.warnings = detail::coincidence_warnings(sites);
  const int m = static_cast<int>(sites.size());
  if (m > model.n_max()) {
    r.truncated = true;
    r.warnings.push_back("order " + std::to_string(m) + " exceeds n_max " + std::to_string(model.n_max()));
    return r;
  }
  r.value = directional_derivative(model, dirs, eta, rule, opt);
  if (m >= 2 && m <= 4) {
    std::vector<std::size_t> perm(m);
    std::iota(perm.begin(), perm.end(), 0);
    double spread = 0.0;
    while (std::next_permutation(perm.begin(), perm.end())) {
      std::vector<ComplexMeasure> p;
      for (auto i : perm) p.push_back(dirs[i]);
      spread = std::max(spread, relative_error(directional_derivative(model, p, eta, rule, opt), r.value));
    }
    r.commutation_residual = spread;
  }
  return r;
}

struct NestedFdOptions {
  std::vector<double> eps{1e-1, 1e-2, 1e-3};
  bool extrapolate = true;
};

/// Recursive central differences of an arbitrary measure functional:
/// D_{nu_1..nu_m} G[eta] with the last direction differenced first.
inline DerivativeReport nested_fd_derivative(const Functional& G, std::span<const ComplexMeasure> directions,
                                             const ComplexMeasure& eta, const NestedFdOptions& opt = {}) {
  DerivativeReport r;
  r.method = "nested_fd";
  const int m = static_cast<int>(directions.size());
  if (opt.eps.empty()) throw std::invalid_argument("nested_fd: empty step schedule");
  for (double e : opt.eps) {
    if (!(e > 0.0)) throw std::domain_error("nested_fd: step must be positive");
    if (std::pow(e, m) < 1e-290) throw std::domain_error("nested_fd: step underflow for order " + std::to_string(m));
    if (std::pow(e, m) < 1e-12) r.warnings.push_back("step " + std::to_string(e) + " is roundoff dominated");
  }
  std::function<Complex(const ComplexMeasure&, int, double)> diff = [&](const ComplexMeasure& at, int k,
                                                                         double e) -> Complex {
    if (k == 0) return G(at);
    const auto& nu = directions[k - 1];
    return (diff(at + nu.scaled(e), k - 1, e) - diff(at - nu.scaled(e), k - 1, e)) / (2.0 * e);
  };
  for (double e : opt.eps) r.table.push_back({e, diff(eta, m, e)});
  r.value = r.table.back().value;
  if (opt.extrapolate && r.table.size() >= 2 && m > 0) {
    r.extrapolated = richardson(r.table, 2.0);
    r.value = *r.extrapolated;
  }
  return r;
}

inline DerivativeReport nested_fd_derivative(const FiniteSetDensity& model, std::span<const ComplexMeasure> directions,
                                             const ComplexMeasure& eta, const NestedFdOptions& opt = {},
                                             const IntegrationOptions& iopt = {}) {
  const Functional G = [&model, iopt](const ComplexMeasure& x) { return pgfm_eval(model, x, nullptr, iopt); };
  return nested_fd_derivative(G, directions, eta, opt);
}

struct LimitSequenceOptions {
  TestSequenceKind kind = TestSequenceKind::gaussian;
  std::vector<double> lambdas{0.2, 0.1, 0.05, 0.025};
  /// Two central-difference steps combined by Richardson.
  std::vector<double> eps{1e-2, 5e-3};
  bool extrapolate = true;
};

/// For each lambda: d/d eps G[h + eps member] at 0, by central differences
/// of the function-input PGFL; then two-level Richardson in lambda unless the
/// trend diverges.
inline DerivativeReport limit_sequence_derivative(const FiniteSetDensity& model, const Point& site, const ScalarField& h,
                                                  const LimitSequenceOptions& opt = {},
                                                  const IntegrationOptions& iopt = {}) {
  DerivativeReport r;
  r.method = "limit_sequence";
  const auto& space = model.space();
  space.require_contains(site, "derivative site");
  if (opt.lambdas.empty() || opt.eps.empty()) throw std::invalid_argument("limit_sequence: empty schedule");
  for (double lambda : opt.lambdas) {
    const TestSequenceFamily fam{opt.kind, site, lambda};
    const auto member = test_member(space, fam);
    auto rule = member_rule(space, fam);
    ConvergenceTable eps_table;
    for (double e : opt.eps) {
      const Complex up = pgfl_eval(model, h + member.scaled(e), false, &rule, iopt).value;
      const Complex dn = pgfl_eval(model, h + member.scaled(-e), false, &rule, iopt).value;
      eps_table.push_back({e, (up - dn) / (2.0 * e)});
    }
    r.table.push_back({lambda, eps_table.size() >= 2 ? richardson(eps_table, 2.0) : eps_table.back().value});
  }
  r.value = r.table.back().value;
  r.divergent = diverging(r.table);
  if (r.divergent) r.warnings.push_back("lambda trend diverges; not extrapolated");
  if (opt.extrapolate && !r.divergent && r.table.size() >= 2) {
    r.extrapolated = richardson(r.table, 2.0);
    r.value = *r.extrapolated;
  }
  return r;
}

struct SecularOptions {
  TestSequenceKind kind = TestSequenceKind::gaussian;
  std::vector<double> lambdas{0.2, 0.1, 0.05, 0.025};
  double eps = 0.1;
};

/// Width below which 0.5-style constant fields plus eps times an interior
/// Gaussian member exceed modulus 1 at the centre: h + eps (2 pi)^{-d/2}
/// lambda^{-d} = 1.
inline double critical_secular_width(double h, double eps, int dim) {
  return std::pow(eps / ((1.0 - h) * std::pow(2.0 * kPi, dim / 2.0)), 1.0 / dim);
}

/// S(+-eps) = G[h +- eps member] at the smallest lambda; derivative by the
/// central difference. Each (+-eps, lambda) pair whose field leaves
/// |h| <= 1 is recorded with its witness.
inline DerivativeReport secular_derivative(const FiniteSetDensity& model, const Point& site, const ScalarField& h,
                                           const SecularOptions& opt = {}, const IntegrationOptions& iopt = {}) {
  DerivativeReport r;
  r.method = "secular";
  const auto& space = model.space();
  space.require_contains(site, "derivative site");
  if (opt.lambdas.empty()) throw std::invalid_argument("secular: empty lambda schedule");
  for (double lambda : opt.lambdas) {
    const TestSequenceFamily fam{opt.kind, site, lambda};
    const auto member = test_member(space, fam);
    auto rule = member_rule(space, fam);
    Complex s[2];
    for (int sign = 0; sign < 2; ++sign) {
      const double e = sign == 0 ? opt.eps : -opt.eps;
      const auto field = h + member.scaled(e);
      const auto v = pgfl_eval(model, field, false, &rule, iopt);
      s[sign] = v.value;
      if (v.gamma_violation) r.violations.push_back({e, lambda, v.sup_abs, v.witness});
    }
    r.table.push_back({lambda, opt.eps == 0.0 ? s[0] : (s[0] - s[1]) / (2.0 * opt.eps)});
  }
  r.value = r.table.back().value;
  r.divergent = diverging(r.table);
  if (r.divergent) r.warnings.push_back("lambda trend diverges");
  if (!r.violations.empty())
    r.warnings.push_back(std::to_string(r.violations.size()) + " (eps, lambda) pairs leave |h| <= 1");
  return r;
}

struct SetDerivativeOptions {
  std::vector<double> radii{0.1, 0.05, 0.025};
  bool extrapolate = true;
};

/// Iterated set derivative of the belief mass at sites outside closure(S):
/// sum over T of (-1)^{m-|T|} beta(S u E_T) / prod mu(E_i), with E_i the
/// sup-norm ball of radius r about site i clipped to the box.
inline DerivativeReport set_derivative_bmf(const FiniteSetDensity& model, std::span<const Point> sites, const Region& S,
                                           const SetDerivativeOptions& opt = {}, const IntegrationOptions& iopt = {}) {
  DerivativeReport r;
  r.method = "set_derivative";
  const auto& space = model.space();
  S.validate(space);
  const int m = static_cast<int>(sites.size());
  if (m == 0) throw std::invalid_argument("set_derivative: at least one site required");
  if (m > 16) throw std::invalid_argument("set_derivative: too many sites");
  for (const auto& x : sites) {
    space.require_contains(x, "derivative site");
    if (S.contains(x)) throw DomainError("set_derivative: site lies in the closure of S", x);
  }
  r.warnings = detail::coincidence_warnings(sites);
  if (opt.radii.empty()) throw std::invalid_argument("set_derivative: empty radius schedule");
  for (double rad : opt.radii) {
    if (!(rad > 0.0)) throw std::invalid_argument("set_derivative: radius must be positive");
    std::vector<std::pair<Point, Point>> balls;
    double vol = 1.0;
    for (const auto& x : sites) {
      Point lo(space.dim()), hi(space.dim());
      for (int i = 0; i < space.dim(); ++i) {
        lo[i] = std::max(space.lower()[i], x[i] - rad);
        hi[i] = std::min(space.upper()[i], x[i] + rad);
      }
      const Region ball({{lo, hi}});
      vol *= ball.volume();
      balls.emplace_back(lo, hi);
    }
    Complex total = 0.0;
    for (std::size_t mask = 0; mask < (std::size_t{1} << m); ++mask) {
      auto boxes = S.boxes();
      for (int i = 0; i < m; ++i)
        if ((mask >> i) & 1U) boxes.push_back(balls[i]);
      const Region U(boxes);
      try {
        U.validate(space);
      } catch (const DomainError&) {
        throw DomainError("set_derivative: radius " + std::to_string(rad) + " makes balls meet S or each other",
                          sites[0]);
      }
      const double sign = (m - std::popcount(mask)) % 2 == 0 ? 1.0 : -1.0;
      total += sign * bmf_eval(model, U, iopt);
    }
    r.table.push_back({rad, total / vol});
  }
  r.value = r.table.back().value;
  if (opt.extrapolate && r.table.size() >= 2) {
    r.extrapolated = richardson(r.table, 1.0);
    r.value = *r.extrapolated;
  }
  return r;
}

/// |G[eta+nu] - G[eta] - dG/dnu[eta]| / ||nu||.
inline double frechet_residual(const FiniteSetDensity& model, const ComplexMeasure& eta, const ComplexMeasure& nu,
                               const IntegrationOptions& opt = {}) {
  const double norm = total_variation(nu, model.space());
  if (!(norm > 0.0)) throw std::invalid_argument("frechet_residual: zero direction");
  const std::vector<ComplexMeasure> dir{nu};
  const Complex defect =
      pgfm_eval(model, eta + nu, nullptr, opt) - pgfm_eval(model, eta, nullptr, opt) -
      directional_derivative(model, dir, eta, nullptr, opt);
  return std::abs(defect) / norm;
}

struct FrechetEstimate {
  /// Sampled lower bound on the (m-1)-linear defect norm divided by ||nu||.
  double value = 0.0;
  int samples = 0;
};

/// Order-m defect: sup over unit (nu_1..nu_{m-1}) of
/// |D^{m-1}G[eta+nu](..) - D^{m-1}G[eta](..) - D^m G[eta](.., nu)| / ||nu||,
/// estimated over `samples` random tuples mixing atoms and densities.
inline FrechetEstimate frechet_residual_order(const FiniteSetDensity& model, const ComplexMeasure& eta,
                                              const ComplexMeasure& nu, int m, std::uint64_t seed, int samples = 64,
                                              const IntegrationOptions& opt = {}) {
  if (m < 1) throw std::invalid_argument("frechet_residual_order: order must be >= 1");
  if (m == 1) return {frechet_residual(model, eta, nu, opt), 1};
  const auto& space = model.space();
  const double norm = total_variation(nu, space);
  if (!(norm > 0.0)) throw std::invalid_argument("frechet_residual: zero direction");
  Rng rng = Rng(seed).split("frechet_order");
  FrechetEstimate est;
  est.samples = samples;
  for (int s = 0; s < samples; ++s) {
    Rng sub = rng.split(static_cast<std::uint64_t>(s));
    std::vector<ComplexMeasure> dirs;
    for (int k = 0; k + 1 < m; ++k)
      dirs.push_back(sampling::random_measure_with_norm(sub, space, 1.0, static_cast<sampling::MeasureShape>(k % 3)));
    auto full = dirs;
    full.push_back(nu);
    const Complex defect = directional_derivative(model, dirs, eta + nu, nullptr, opt) -
                           directional_derivative(model, dirs, eta, nullptr, opt) -
                           directional_derivative(model, full, eta, nullptr, opt);
    est.value = std::max(est.value, std::abs(defect) / norm);
  }
  return est;
}

}  // namespace pgfm
