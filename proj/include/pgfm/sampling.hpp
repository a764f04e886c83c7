#pragma once

// Seeded generators of random points, fields and measures for property checks.

#include "pgfm/field.hpp"
#include "pgfm/measure.hpp"
#include "pgfm/rng.hpp"

namespace pgfm::sampling {

inline Point random_point(Rng& rng, const BaseSpace& s, double margin = 0.0) {
  Point p(s.dim());
  for (int i = 0; i < s.dim(); ++i) {
    const double w = s.upper()[i] - s.lower()[i];
    p[i] = rng.uniform(s.lower()[i] + margin * w, s.upper()[i] - margin * w);
  }
  return p;
}

inline Complex random_complex(Rng& rng, double scale = 1.0) {
  return {rng.uniform(-scale, scale), rng.uniform(-scale, scale)};
}

/// Smooth complex field: constant plus up to two Gaussian bumps.
inline ScalarField random_field(Rng& rng, const BaseSpace& s) {
  std::vector<ScalarField> terms{ScalarField::constant(random_complex(rng, 0.5))};
  const int bumps = static_cast<int>(rng.index(3));
  for (int b = 0; b < bumps; ++b)
    terms.push_back(ScalarField::gaussian(random_point(rng, s), rng.uniform(0.1, 0.4), random_complex(rng, 0.5)));
  return ScalarField::sum(terms);
}

/// Real field with 0 <= h <= bound everywhere.
inline ScalarField random_positive_field(Rng& rng, const BaseSpace& s, double bound = 1.0) {
  const double c = rng.uniform(0.0, 0.5);
  const double a = rng.uniform(0.0, 0.5);
  return ScalarField::sum({ScalarField::constant(c * bound),
                           ScalarField::gaussian(random_point(rng, s), rng.uniform(0.1, 0.4), a * bound)});
}

enum class MeasureShape { atomic, continuous, mixed };

inline ComplexMeasure random_measure(Rng& rng, const BaseSpace& s, MeasureShape shape = MeasureShape::mixed,
                                     bool positive = false) {
  std::vector<Atom> atoms;
  std::optional<ScalarField> density;
  if (shape != MeasureShape::continuous) {
    const int n = 1 + static_cast<int>(rng.index(3));
    for (int k = 0; k < n; ++k)
      atoms.push_back({random_point(rng, s), positive ? Complex{rng.uniform(0.05, 1.0)} : random_complex(rng)});
  }
  if (shape != MeasureShape::atomic) density = positive ? random_positive_field(rng, s) : random_field(rng, s);
  return {std::move(atoms), std::move(density)};
}

/// Random measure rescaled to the requested total variation.
inline ComplexMeasure random_measure_with_norm(Rng& rng, const BaseSpace& s, double norm,
                                               MeasureShape shape = MeasureShape::mixed) {
  auto m = random_measure(rng, s, shape);
  const double tv = total_variation(m, s);
  return m.scaled(norm / tv);
}

}  // namespace pgfm::sampling
