#include <gtest/gtest.h>

#include "pgfm/functionals.hpp"
#include "pgfm/sampling.hpp"
#include "pgfm/zoo.hpp"

using namespace pgfm;
using namespace pgfm::sampling;

namespace {

ScalarField random_gamma_field(Rng& rng, const BaseSpace& s) {
  const auto f = random_field(rng, s);
  return f.scaled(rng.uniform(0.2, 1.0) / std::max(1.0, f.sup_bound(s)));
}

Region interval(double a, double b) { return Region({{{a}, {b}}}); }

}  // namespace

TEST(SetIntegral, ConstantEmptyTerm) {
  const auto s = BaseSpace::unit_interval();
  const SetFunction F{[](PointTuple xs) -> Complex { return xs.empty() ? Complex{2.0, -1.0} : 0.0; }, 3};
  Rng rng(2);
  for (int t = 0; t < 10; ++t) {
    const auto r = set_integral(F, random_measure(rng, s), s);
    EXPECT_EQ(r.value, Complex(2.0, -1.0));
  }
}

TEST(SetIntegral, ModelAAgainstReferenceAndDirac) {
  const auto a = zoo::model_a();
  const auto& s = a.space();
  EXPECT_NEAR(std::abs(set_integral(janossy_set_function(a), ComplexMeasure::reference(), s).value - 1.0), 0.0, 1e-10);
  const auto d = set_integral(janossy_set_function(a), dirac(s, {0.5}), s);
  EXPECT_NEAR(std::abs(d.value - 1.0), 0.0, 1e-15);
  EXPECT_EQ(d.terms, 3u);
}

TEST(SetIntegral, AtomicExpansionMatchesHandSum) {
  // Two atoms a, b: n=2 term is (1/2)(F(a,a)w_a^2 + 2F(a,b)w_a w_b + F(b,b)w_b^2).
  const auto s = BaseSpace::unit_interval();
  const SetFunction F{[](PointTuple xs) -> Complex {
                        Complex v = 1.0;
                        for (const auto& x : xs) v *= 1.0 + x[0];
                        return v;
                      },
                      2};
  const Complex wa{0.5, 0.25}, wb{-1.0, 0.0};
  const ComplexMeasure m({Atom{{0.2}, wa}, Atom{{0.6}, wb}}, std::nullopt);
  const Complex fa = 1.2, fb = 1.6;
  const Complex expect = 1.0 + (fa * wa + fb * wb) + 0.5 * std::pow(fa * wa + fb * wb, 2);
  EXPECT_LE(std::abs(set_integral(F, m, s).value - expect), 1e-14);
}

TEST(SetIntegral, MonteCarloFallbackIsSeededAndClose) {
  const auto a = zoo::model_a();
  IntegrationOptions opt;
  opt.budget = 200;
  const auto r1 = set_integral(janossy_set_function(a), ComplexMeasure::reference(), a.space(), opt);
  const auto r2 = set_integral(janossy_set_function(a), ComplexMeasure::reference(), a.space(), opt);
  EXPECT_TRUE(r1.sampled);
  EXPECT_EQ(r1.value, r2.value);
  EXPECT_NEAR(r1.value.real(), 1.0, 0.05);
}

TEST(Pgfl, ModelAExamples) {
  const auto a = zoo::model_a();
  EXPECT_NEAR(pgfl_eval(a, ScalarField::constant(0.0)).value.real(), 0.25, 1e-15);
  EXPECT_NEAR(pgfl_eval(a, ScalarField::constant(1.0)).value.real(), 1.0, 1e-12);
  EXPECT_NEAR(pgfl_eval(a, ScalarField::constant(0.5)).value.real(), 0.5625, 1e-12);
}

TEST(Pgfl, ZeroAndOneOnZoo) {
  for (const auto& e : zoo::all()) {
    EXPECT_NEAR(pgfl_eval(e.model, ScalarField::constant(0.0)).value.real(), e.model.janossy({}), 1e-15) << e.id;
    EXPECT_NEAR(pgfl_eval(e.model, ScalarField::constant(1.0)).value.real(), 1.0, 1e-6) << e.id;
  }
}

TEST(Pgfl, GammaViolationFlaggedOrRejected) {
  const auto a = zoo::model_a();
  const auto h = ScalarField::constant(0.9) + ScalarField::gaussian({0.5}, 0.05, 0.2);
  const auto v = pgfl_eval(a, h);
  EXPECT_TRUE(v.gamma_violation);
  EXPECT_NEAR(v.sup_abs, 1.1, 1e-12);
  EXPECT_EQ(v.witness, Point{0.5});
  try {
    pgfl_eval(a, h, true);
    FAIL() << "expected rejection";
  } catch (const GammaViolation& e) {
    EXPECT_NEAR(e.sup(), 1.1, 1e-12);
    EXPECT_EQ(e.witness(), Point{0.5});
  }
  EXPECT_FALSE(pgfl_eval(a, ScalarField::constant(0.5), true).gamma_violation);
}

TEST(Pgfl, ComplexFieldOnModelA) {
  // G[c] = 0.25 + 0.5 c + 0.25 c^2 for constant c.
  const auto a = zoo::model_a();
  const Complex c{0.3, -0.6};
  EXPECT_LE(std::abs(pgfl_eval(a, ScalarField::constant(c)).value - (0.25 + 0.5 * c + 0.25 * c * c)), 1e-13);
}

TEST(Pgfm, ModelAExamples) {
  const auto a = zoo::model_a();
  const auto& s = a.space();
  EXPECT_NEAR(std::abs(pgfm_eval(a, ComplexMeasure::reference()) - 1.0), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(pgfm_eval(a, dirac(s, {0.4})) - 1.0), 0.0, 1e-15);
  EXPECT_EQ(pgfm_eval(a, ComplexMeasure::zero()), Complex(0.25));
  for (Complex c : {Complex{2.0, 0.0}, Complex{0.0, 1.0}, Complex{-0.5, 0.5}})
    EXPECT_LE(std::abs(pgfm_eval(a, dirac(s, {0.4}).scaled(c)) - (0.25 + 0.5 * c + 0.25 * c * c)), 1e-14);
}

TEST(Pgfm, AtomOutsideBoxRejected) {
  const ComplexMeasure m({Atom{{2.0}, 1.0}}, std::nullopt);
  EXPECT_THROW(pgfm_eval(zoo::model_a(), m), DomainError);
}

TEST(Pgfm, MatchesBruteForceSetIntegralOnMixedMeasures) {
  Rng rng(71);
  for (const auto& e : zoo::all()) {
    for (int t = 0; t < 5; ++t) {
      const auto eta = random_measure(rng, e.model.space());
      const auto brute = set_integral(janossy_set_function(e.model), eta, e.model.space()).value;
      const auto fast = pgfm_eval(e.model, eta);
      EXPECT_LE(std::abs(fast - brute), 1e-11 * std::max(1.0, std::abs(brute))) << e.id;
    }
  }
}

TEST(Pgfm, ConsistentWithPgflOnDensityMeasures) {
  Rng rng(12);
  for (const auto& e : zoo::all()) {
    for (int t = 0; t < 50; ++t) {
      const auto h = random_gamma_field(rng, e.model.space());
      const Complex g = pgfl_eval(e.model, h).value;
      const Complex m = pgfm_eval(e.model, ComplexMeasure::with_density(h));
      EXPECT_LE(std::abs(g - m), 1e-12 * std::max(1.0, std::abs(g))) << e.id;
    }
  }
}

TEST(Pgfm, RealInputsGiveRealOutputs) {
  Rng rng(13);
  for (const auto& e : zoo::all()) {
    for (int t = 0; t < 10; ++t) {
      const auto eta = random_measure(rng, e.model.space(), MeasureShape::mixed, true);
      EXPECT_LT(std::abs(pgfm_eval(e.model, eta).imag()), 1e-10) << e.id;
    }
  }
}

TEST(Pgfm, GrowthBound) {
  Rng rng(14);
  for (const auto& e : zoo::all()) {
    const double K = bound_K(e.model).value;
    for (int t = 0; t < 1000; ++t) {
      const auto shape = static_cast<MeasureShape>(t % 3);
      const auto eta = random_measure_with_norm(rng, e.model.space(), rng.uniform(0.0, 3.0), shape);
      const double norm = total_variation(eta, e.model.space());
      EXPECT_LE(std::abs(pgfm_eval(e.model, eta)), K * std::exp(norm) * (1 + 1e-12)) << e.id;
    }
  }
}

TEST(Pgfl, SuperpositionProductLaw) {
  Rng rng(15);
  const auto a = zoo::model_a(), b = zoo::bernoulli_1d(), p = zoo::truncated_poisson();
  const std::vector<std::pair<FiniteSetDensity, FiniteSetDensity>> pairs{{a, b}, {b, b}, {a, a}, {b, p}};
  for (const auto& [x, y] : pairs) {
    const auto sum = superpose(x, y);
    for (int t = 0; t < 20; ++t) {
      const auto h = random_gamma_field(rng, sum.space());
      const Complex lhs = pgfl_eval(sum, h).value;
      const Complex rhs = pgfl_eval(x, h).value * pgfl_eval(y, h).value;
      EXPECT_LE(std::abs(lhs - rhs), 1e-10);
    }
  }
}

TEST(Bmf, ModelAExamples) {
  const auto a = zoo::model_a();
  EXPECT_NEAR(bmf_eval(a, Region::whole(a.space())), 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(bmf_eval(a, Region::empty()), 0.25);
  EXPECT_NEAR(bmf_eval(a, interval(0.0, 0.5)), 0.5625, 1e-12);
}

TEST(Bmf, PolynomialInLengthForModelA) {
  const auto a = zoo::model_a();
  for (double len : {0.1, 0.33, 0.71}) {
    const double expect = 0.25 + 0.5 * len + 0.25 * len * len;
    EXPECT_NEAR(bmf_eval(a, interval(0.2, 0.2 + len)), expect, 1e-12);
  }
  const Region two({{{0.0}, {0.1}}, {{0.5}, {0.8}}});
  EXPECT_NEAR(bmf_eval(a, two), 0.25 + 0.5 * 0.4 + 0.25 * 0.16, 1e-12);
}

TEST(Bmf, MonotoneAndBoundedOnZoo) {
  for (const auto& e : zoo::all()) {
    const auto& s = e.model.space();
    double previous = bmf_eval(e.model, Region::empty());
    for (double frac : {0.2, 0.4, 0.6, 0.8, 1.0}) {
      Point hi = s.lower();
      for (int i = 0; i < s.dim(); ++i) hi[i] += frac * (s.upper()[i] - s.lower()[i]);
      const double b = bmf_eval(e.model, Region({{s.lower(), hi}}));
      EXPECT_GE(b, previous - 1e-12) << e.id;
      previous = b;
    }
    EXPECT_NEAR(previous, 1.0, 1e-6) << e.id;
  }
}

TEST(Bmf, NonAdditiveOnHalves) {
  const auto a = zoo::model_a();
  const double gap = bmf_eval(a, Region::whole(a.space())) - bmf_eval(a, interval(0.0, 0.5)) -
                     bmf_eval(a, interval(0.5, 1.0));
  EXPECT_NEAR(gap, -0.125, 1e-10);
  EXPECT_GT(std::abs(gap), 0.01);
}

TEST(Bmf, InvalidRegionRejected) {
  EXPECT_THROW(bmf_eval(zoo::model_a(), interval(0.5, 1.5)), std::exception);
}
