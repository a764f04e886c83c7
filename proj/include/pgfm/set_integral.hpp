#pragma once

#include <functional>

#include "pgfm/core.hpp"
#include "pgfm/measure.hpp"
#include "pgfm/model.hpp"
#include "pgfm/rng.hpp"

namespace pgfm {

/// Finite-set function F(X), |X| <= n_max. Called with the elements of X in
/// some order; must not depend on that order.
struct SetFunction {
  std::function<Complex(PointTuple)> value;
  int n_max = 0;
};

struct SetIntegral {
  Complex value = 0.0;
  /// Number of integrand evaluations.
  std::size_t terms = 0;
  /// True when at least one cardinality was estimated by Monte Carlo.
  bool sampled = false;
};

/// sum_n 1/n! int ... int F({x_1..x_n}) eta(dx_1) ... eta(dx_n) against a
/// discrete measure. Slot assignments are enumerated as multisets of the
/// measure's points with multinomial weight n!/prod(mult!), so atoms and
/// quadrature nodes are handled alike.
inline SetIntegral set_integral(const SetFunction& F, const DiscreteMeasure& eta, const IntegrationOptions& opt = {}) {
  SetIntegral out;
  const std::size_t N = eta.size();
  std::vector<Point> tuple;
  for (int n = 0; n <= F.n_max; ++n) {
    tuple.assign(n, Point{});
    if (n == 0) {
      out.value += F.value(tuple);
      ++out.terms;
      continue;
    }
    if (N == 0) break;
    const double count = binomial(static_cast<int>(N) + n - 1, n);
    if (count <= static_cast<double>(opt.budget)) {
      std::vector<std::size_t> idx(n, 0);
      Complex total = 0.0;
      while (true) {
        Complex w = 1.0;
        double mult = 1.0;
        int run = 1;
        for (int i = 0; i < n; ++i) {
          tuple[i] = eta.points[idx[i]];
          w *= eta.weights[idx[i]];
          if (i > 0 && idx[i] == idx[i - 1])
            mult *= ++run;
          else
            run = 1;
        }
        total += F.value(tuple) * w / mult;
        ++out.terms;
        int k = n - 1;
        while (k >= 0 && idx[k] + 1 == N) --k;
        if (k < 0) break;
        ++idx[k];
        for (int j = k + 1; j < n; ++j) idx[j] = idx[k];
      }
      out.value += total;
    } else {
      out.sampled = true;
      Rng rng = Rng(opt.seed).split("set_integral").split(static_cast<std::uint64_t>(n));
      Complex total = 0.0;
      for (std::size_t s = 0; s < opt.budget; ++s) {
        Complex w = 1.0;
        for (int i = 0; i < n; ++i) {
          const auto k = rng.index(N);
          tuple[i] = eta.points[k];
          w *= eta.weights[k];
        }
        total += F.value(tuple) * w;
        ++out.terms;
      }
      out.value += total * (std::pow(static_cast<double>(N), n) / factorial(n) / static_cast<double>(opt.budget));
    }
  }
  return out;
}

inline SetIntegral set_integral(const SetFunction& F, const ComplexMeasure& eta, const BaseSpace& space,
                                const QuadratureRule& rule, const IntegrationOptions& opt = {}) {
  eta.validate(space);
  return set_integral(F, eta.discretize(rule), opt);
}

inline SetIntegral set_integral(const SetFunction& F, const ComplexMeasure& eta, const BaseSpace& space,
                                const IntegrationOptions& opt = {}) {
  return set_integral(F, eta, space, space.rule(), opt);
}

/// The Janossy family as a set function, p(X) = j_|X|(X).
inline SetFunction janossy_set_function(const FiniteSetDensity& model) {
  return {[model](PointTuple xs) -> Complex { return model.janossy_unchecked(xs); }, model.n_max()};
}

}  // namespace pgfm
