#pragma once

#include <string>
#include <vector>

#include "pgfm/model.hpp"

namespace pgfm::zoo {

/// rho = (0.25, 0.5, 0.25), f = 1 on [0, 1]. Every functional is a low-degree
/// polynomial, so most quantities have closed forms.
inline FiniteSetDensity model_a() {
  return FiniteSetDensity::iid_cluster(BaseSpace::unit_interval(), {0.25, 0.5, 0.25}, ScalarField::constant(1.0));
}

/// r = 0.7 with a truncated Gaussian spatial density on [0, 1].
inline FiniteSetDensity bernoulli_1d() {
  const auto space = BaseSpace::unit_interval();
  return FiniteSetDensity::bernoulli(space, 0.7, truncated_gaussian_pdf(space, {0.45}, 0.3));
}

/// Poisson(1.2) cardinality truncated at 4 and renormalized; uniform on [0, 1].
inline FiniteSetDensity truncated_poisson() {
  return FiniteSetDensity::truncated_poisson(BaseSpace::unit_interval(), 1.2, 4, ScalarField::constant(1.0));
}

/// r = 0.6 with a truncated isotropic Gaussian on [0, 1]^2.
inline FiniteSetDensity bernoulli_2d() {
  const auto space = BaseSpace::unit_square();
  return FiniteSetDensity::bernoulli(space, 0.6, truncated_gaussian_pdf(space, {0.5, 0.5}, 0.3));
}

/// Model A together with an independent 1-d Bernoulli target.
inline FiniteSetDensity superposed() { return superpose(model_a(), bernoulli_1d()); }

struct Entry {
  std::string id;
  std::string description;
  FiniteSetDensity model;
  /// Normalization holds in closed form (uniform spatial law, exact pmf).
  bool closed_form;
};

inline std::vector<Entry> all() {
  return {
      {"A", "iid cluster rho=(0.25,0.5,0.25), f=1 on [0,1]", model_a(), true},
      {"bernoulli", "Bernoulli r=0.7, truncated Gaussian(0.45, 0.3) on [0,1]", bernoulli_1d(), false},
      {"poisson", "truncated Poisson rate 1.2, n_max 4, uniform on [0,1]", truncated_poisson(), false},
      {"bernoulli2d", "Bernoulli r=0.6, truncated Gaussian((0.5,0.5), 0.3) on [0,1]^2", bernoulli_2d(), false},
      {"superposition", "A superposed with the 1-d Bernoulli", superposed(), false},
  };
}

inline FiniteSetDensity by_id(const std::string& id) {
  for (auto& e : all())
    if (e.id == id) return e.model;
  throw std::invalid_argument("unknown zoo model '" + id + "'");
}

}  // namespace pgfm::zoo
