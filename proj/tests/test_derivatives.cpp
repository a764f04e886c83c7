#include <gtest/gtest.h>

#include <algorithm>

#include "pgfm/derivatives.hpp"
#include "pgfm/sampling.hpp"
#include "pgfm/zoo.hpp"

using namespace pgfm;
using namespace pgfm::sampling;

namespace {

std::vector<Point> pts(std::initializer_list<double> xs) {
  std::vector<Point> v;
  for (double x : xs) v.push_back({x});
  return v;
}

std::vector<ComplexMeasure> diracs(const BaseSpace& s, const std::vector<Point>& ys) {
  std::vector<ComplexMeasure> v;
  for (const auto& y : ys) v.push_back(dirac(s, y));
  return v;
}

double rel(Complex a, Complex b) { return relative_error(a, b); }

const ScalarField kZero = ScalarField::constant(0.0);
const ScalarField kOne = ScalarField::constant(1.0);
const ScalarField kHalf = ScalarField::constant(0.5);

}  // namespace

TEST(Oracle, ModelAExamples) {
  const auto a = zoo::model_a();
  EXPECT_NEAR(oracle_derivative(a, pts({0.3}), kZero).real(), 0.5, 1e-15);
  EXPECT_NEAR(oracle_derivative(a, pts({0.3}), kOne).real(), 1.0, 1e-12);
  EXPECT_NEAR(oracle_derivative(a, pts({0.3, 0.7}), kZero).real(), 0.5, 1e-15);
  EXPECT_NEAR(oracle_derivative(a, pts({0.5}), kHalf).real(), 0.75, 1e-12);
  EXPECT_EQ(oracle_derivative(a, pts({0.1, 0.2, 0.3}), kOne), Complex(0.0));
}

TEST(PgfmDerivative, ModelAExamples) {
  const auto a = zoo::model_a();
  const auto z = pgfm_derivative(a, pts({0.3}), ComplexMeasure::zero());
  EXPECT_NEAR(z.value.real(), 0.5, 1e-15);
  EXPECT_FALSE(z.truncated);
  EXPECT_NEAR(pgfm_derivative(a, pts({0.3}), ComplexMeasure::reference()).value.real(), 1.0, 1e-12);
  EXPECT_NEAR(pgfm_derivative(a, pts({0.3, 0.7}), ComplexMeasure::zero()).value.real(), 0.5, 1e-15);
}

TEST(PgfmDerivative, TruncationFlag) {
  const auto r = pgfm_derivative(zoo::model_a(), pts({0.1, 0.2, 0.3}), ComplexMeasure::reference());
  EXPECT_TRUE(r.truncated);
  EXPECT_EQ(r.value, Complex(0.0));
}

TEST(PgfmDerivative, CoincidentSitesWarnOnly) {
  const auto r = pgfm_derivative(zoo::model_a(), pts({0.3, 0.3}), ComplexMeasure::zero());
  EXPECT_NEAR(r.value.real(), 0.5, 1e-15);
  EXPECT_FALSE(r.warnings.empty());
}

TEST(PgfmDerivative, SiteOutsideBoxRejected) {
  EXPECT_THROW(pgfm_derivative(zoo::model_a(), pts({1.3}), ComplexMeasure::zero()), DomainError);
}

TEST(PgfmDerivative, DensityRecoveryOnZoo) {
  Rng rng(101);
  for (const auto& e : zoo::all()) {
    for (int m = 1; m <= std::min(3, e.model.n_max()); ++m) {
      for (int t = 0; t < 50; ++t) {
        std::vector<Point> ys(m);
        for (auto& y : ys) y = random_point(rng, e.model.space());
        const auto d = pgfm_derivative(e.model, ys, ComplexMeasure::zero());
        EXPECT_LE(rel(d.value, e.model.janossy(ys)), 1e-10) << e.id << " m=" << m;
      }
    }
  }
}

TEST(PgfmDerivative, MomentRecoveryOnZoo) {
  Rng rng(102);
  for (const auto& e : zoo::all()) {
    for (int m = 1; m <= std::min(3, e.model.n_max()); ++m) {
      for (int t = 0; t < 20; ++t) {
        std::vector<Point> ys(m);
        for (auto& y : ys) y = random_point(rng, e.model.space());
        const auto d = pgfm_derivative(e.model, ys, ComplexMeasure::reference());
        EXPECT_LE(rel(d.value, oracle_derivative(e.model, ys, kOne)), 1e-8) << e.id << " m=" << m;
      }
    }
  }
}

TEST(PgfmDerivative, ModelAIntensityIsOne) {
  Rng rng(103);
  const auto a = zoo::model_a();
  for (int t = 0; t < 20; ++t) {
    const auto y = random_point(rng, a.space());
    EXPECT_NEAR(pgfm_derivative(a, std::vector<Point>{y}, ComplexMeasure::reference()).value.real(), 1.0, 1e-12);
  }
}

TEST(PgfmDerivative, AgreesWithOracleOnPositiveMixtures) {
  Rng rng(104);
  for (const auto& e : zoo::all()) {
    for (int t = 0; t < 10; ++t) {
      const auto eta = random_measure(rng, e.model.space(), MeasureShape::mixed, true);
      const std::vector<Point> ys{random_point(rng, e.model.space())};
      const auto f = pgfm_derivative(e.model, ys, eta).value;
      EXPECT_LE(rel(f, oracle_derivative(e.model, ys, eta)), 1e-8) << e.id;
    }
  }
}

TEST(PgfmDerivative, SitePermutationInvariance) {
  Rng rng(105);
  for (const auto& e : zoo::all()) {
    for (int m = 2; m <= std::min(3, e.model.n_max()); ++m) {
      for (auto shape : {MeasureShape::atomic, MeasureShape::continuous, MeasureShape::mixed}) {
        for (int t = 0; t < 5; ++t) {
          std::vector<Point> ys(m);
          for (auto& y : ys) y = random_point(rng, e.model.space());
          const auto eta = random_measure(rng, e.model.space(), shape);
          const auto base = pgfm_derivative(e.model, ys, eta);
          ASSERT_TRUE(base.commutation_residual.has_value());
          EXPECT_LE(*base.commutation_residual, 1e-10) << e.id;
          std::reverse(ys.begin(), ys.end());
          EXPECT_LE(rel(pgfm_derivative(e.model, ys, eta).value, base.value), 1e-10) << e.id;
        }
      }
    }
  }
}

TEST(Directional, ModelAExamples) {
  const auto a = zoo::model_a();
  const auto& s = a.space();
  const std::vector<ComplexMeasure> ref{ComplexMeasure::reference()};
  EXPECT_NEAR(directional_derivative(a, ref, ComplexMeasure::zero()).real(), 0.5, 1e-12);
  const auto d = diracs(s, pts({0.3, 0.3}));
  EXPECT_NEAR(directional_derivative(a, d, ComplexMeasure::zero()).real(), 0.5, 1e-15);
}

TEST(Directional, ReducesToPgfmDerivativeForDiracs) {
  Rng rng(106);
  for (const auto& e : zoo::all()) {
    const auto eta = random_measure(rng, e.model.space());
    const std::vector<Point> ys{random_point(rng, e.model.space())};
    EXPECT_EQ(directional_derivative(e.model, diracs(e.model.space(), ys), eta),
              pgfm_derivative(e.model, ys, eta).value);
  }
}

TEST(Directional, Multilinear) {
  Rng rng(107);
  for (const auto& e : zoo::all()) {
    const auto& s = e.model.space();
    for (int m = 1; m <= std::min(2, e.model.n_max()); ++m) {
      for (int t = 0; t < 10; ++t) {
        const auto eta = random_measure(rng, s);
        std::vector<ComplexMeasure> dirs;
        for (int k = 0; k < m; ++k) dirs.push_back(random_measure(rng, s));
        const Complex base = directional_derivative(e.model, dirs, eta);
        const int slot = static_cast<int>(rng.index(m));
        const Complex c = random_complex(rng, 2.0);
        const auto extra = random_measure(rng, s);
        auto scaled = dirs;
        scaled[slot] = dirs[slot].scaled(c);
        EXPECT_LE(std::abs(directional_derivative(e.model, scaled, eta) - c * base),
                  1e-12 * std::max(1.0, std::abs(c * base)))
            << e.id;
        auto summed = dirs, other = dirs;
        summed[slot] = dirs[slot] + extra;
        other[slot] = extra;
        const Complex add = base + directional_derivative(e.model, other, eta);
        EXPECT_LE(std::abs(directional_derivative(e.model, summed, eta) - add), 1e-12 * std::max(1.0, std::abs(add)))
            << e.id;
      }
    }
  }
}

TEST(NestedFd, ModelAFirstOrder) {
  const auto a = zoo::model_a();
  const auto d = diracs(a.space(), pts({0.3}));
  const auto r = nested_fd_derivative(a, d, ComplexMeasure::zero());
  ASSERT_EQ(r.table.size(), 3u);
  EXPECT_NEAR(r.value.real(), 0.5, 1e-8);
  // Quadratic in epsilon: every raw row is already exact to roundoff.
  for (const auto& row : r.table) EXPECT_NEAR(row.value.real(), 0.5, 1e-12);
}

TEST(NestedFd, ModelASecondOrder) {
  const auto a = zoo::model_a();
  const auto d = diracs(a.space(), pts({0.3, 0.7}));
  EXPECT_NEAR(nested_fd_derivative(a, d, ComplexMeasure::zero()).value.real(), 0.5, 1e-6);
}

TEST(NestedFd, AgreesWithClosedFormOnZoo) {
  Rng rng(108);
  for (const auto& e : zoo::all()) {
    for (int m = 1; m <= std::min(2, e.model.n_max()); ++m) {
      std::vector<Point> ys(m);
      for (auto& y : ys) y = random_point(rng, e.model.space());
      for (const auto& eta : {ComplexMeasure::zero(), ComplexMeasure::reference()}) {
        const auto fd = nested_fd_derivative(e.model, diracs(e.model.space(), ys), eta);
        EXPECT_LE(rel(fd.value, pgfm_derivative(e.model, ys, eta).value), 1e-6) << e.id << " m=" << m;
      }
    }
  }
}

TEST(NestedFd, RejectsNonpositiveStep) {
  const auto a = zoo::model_a();
  NestedFdOptions opt;
  opt.eps = {1e-2, 0.0};
  EXPECT_THROW(nested_fd_derivative(a, diracs(a.space(), pts({0.3})), ComplexMeasure::zero(), opt), std::domain_error);
  opt.eps = {1e-200};
  EXPECT_THROW(nested_fd_derivative(a, diracs(a.space(), pts({0.3, 0.4})), ComplexMeasure::zero(), opt),
               std::domain_error);
}

TEST(NestedFd, ChainRuleThroughScalarComposition) {
  Rng rng(109);
  for (const auto& e : zoo::all()) {
    const auto& model = e.model;
    const Functional square = [&model](const ComplexMeasure& eta) {
      const Complex g = pgfm_eval(model, eta);
      return g * g;
    };
    const auto eta = random_measure(rng, model.space(), MeasureShape::mixed, true);
    const std::vector<Point> ys{random_point(rng, model.space())};
    const Complex g = pgfm_eval(model, eta);
    const Complex dg = pgfm_derivative(model, ys, eta).value;
    const auto fd = nested_fd_derivative(square, diracs(model.space(), ys), eta);
    EXPECT_LE(rel(fd.value, 2.0 * g * dg), 1e-8) << e.id;
  }
}

TEST(ProductRule, SuperpositionDerivative) {
  Rng rng(110);
  const auto a = zoo::model_a(), b = zoo::bernoulli_1d();
  const auto ab = superpose(a, b);
  for (int t = 0; t < 10; ++t) {
    const auto eta = random_measure(rng, a.space(), MeasureShape::mixed, true);
    const std::vector<Point> ys{random_point(rng, a.space())};
    const Complex lhs = pgfm_derivative(ab, ys, eta).value;
    const Complex rhs = pgfm_derivative(a, ys, eta).value * pgfm_eval(b, eta) +
                        pgfm_eval(a, eta) * pgfm_derivative(b, ys, eta).value;
    EXPECT_LE(rel(lhs, rhs), 1e-8);
  }
}

TEST(ChainRule, SquareAndCubeViaSuperposition) {
  Rng rng(111);
  const auto b = zoo::bernoulli_1d();
  const auto b2 = superpose(b, b), b3 = superpose(b2, b);
  for (int t = 0; t < 10; ++t) {
    const auto eta = random_measure(rng, b.space(), MeasureShape::mixed, true);
    const std::vector<Point> ys{random_point(rng, b.space())};
    const Complex g = pgfm_eval(b, eta), dg = pgfm_derivative(b, ys, eta).value;
    EXPECT_LE(rel(pgfm_derivative(b2, ys, eta).value, 2.0 * g * dg), 1e-8);
    EXPECT_LE(rel(pgfm_derivative(b3, ys, eta).value, 3.0 * g * g * dg), 1e-7);
  }
}

TEST(LimitSequence, ModelAGaussianTrendsToOracle) {
  const auto a = zoo::model_a();
  LimitSequenceOptions opt;
  const auto r = limit_sequence_derivative(a, {0.5}, kHalf, opt);
  ASSERT_EQ(r.table.size(), 4u);
  EXPECT_NEAR(r.value.real(), 0.75, 1e-10);
  EXPECT_FALSE(r.divergent);
}

TEST(LimitSequence, ModelAIndicatorFamily) {
  const auto a = zoo::model_a();
  LimitSequenceOptions opt;
  opt.kind = TestSequenceKind::indicator;
  const auto r = limit_sequence_derivative(a, {0.5}, kHalf, opt);
  EXPECT_NEAR(r.table.back().value.real(), 0.75, 5e-2);
  EXPECT_TRUE(strictly_decreasing(errors_against(r.table, 0.75), 1e-13));
}

TEST(LimitSequence, ZeroFieldGivesDensity) {
  const auto a = zoo::model_a();
  EXPECT_NEAR(limit_sequence_derivative(a, {0.5}, kZero, {}).value.real(), 0.5, 1e-10);
}

TEST(LimitSequence, SmoothBernoulliErrorDecreases) {
  const auto b = zoo::bernoulli_1d();
  const Point x{0.5};
  const Complex target = oracle_derivative(b, std::vector<Point>{x}, kHalf);
  const auto r = limit_sequence_derivative(b, x, kHalf, {});
  const auto err = errors_against(r.table, target);
  EXPECT_TRUE(strictly_decreasing(err));
  EXPECT_GT(err.front(), 1e-4);
  EXPECT_LE(rel(r.value, target), 1e-3);
  EXPECT_LT(std::abs(r.value - target), err.back());
}

TEST(Secular, ModelAFlagsBelowCriticalWidth) {
  const auto a = zoo::model_a();
  SecularOptions opt;
  opt.lambdas = {0.2, 0.1, 0.09, 0.081, 0.079, 0.07, 0.05, 0.025};
  const auto r = secular_derivative(a, {0.5}, kHalf, opt);
  std::vector<double> flagged;
  for (const auto& v : r.violations)
    if (v.eps > 0) flagged.push_back(v.lambda);
  EXPECT_EQ(flagged, (std::vector<double>{0.079, 0.07, 0.05, 0.025}));
  for (const auto& v : r.violations) EXPECT_EQ(v.witness, Point{0.5});
  EXPECT_NEAR(r.value.real(), 0.75, 1e-3);
  EXPECT_NEAR(critical_secular_width(0.5, 0.1, 1), 0.1 / (0.5 * std::sqrt(2.0 * kPi)), 1e-15);
}

TEST(Secular, ZeroPerturbationHasNoViolations) {
  const auto a = zoo::model_a();
  SecularOptions opt;
  opt.eps = 0.0;
  const auto r = secular_derivative(a, {0.5}, kHalf, opt);
  EXPECT_TRUE(r.violations.empty());
  EXPECT_NEAR(r.table.back().value.real(), pgfl_eval(a, kHalf).value.real(), 1e-12);
}

TEST(SetDerivative, ModelAExamples) {
  const auto a = zoo::model_a();
  const auto r1 = set_derivative_bmf(a, pts({0.5}), Region::empty());
  ASSERT_EQ(r1.table.size(), 3u);
  EXPECT_NEAR(r1.table.back().value.real(), 0.5 + 0.5 * 0.025, 1e-12);
  EXPECT_NEAR(r1.value.real(), 0.5, 1e-10);
  EXPECT_TRUE(strictly_decreasing(errors_against(r1.table, 0.5)));

  const auto r2 = set_derivative_bmf(a, pts({0.7}), Region({{{0.0}, {0.4}}}));
  EXPECT_NEAR(r2.value.real(), 0.7, 1e-10);

  const auto r3 = set_derivative_bmf(a, pts({0.3, 0.7}), Region::empty());
  EXPECT_NEAR(r3.value.real(), 0.5, 1e-2);
}

TEST(SetDerivative, RejectsSiteInsideRegion) {
  const auto a = zoo::model_a();
  EXPECT_THROW(set_derivative_bmf(a, pts({0.2}), Region({{{0.0}, {0.4}}})), DomainError);
  EXPECT_THROW(set_derivative_bmf(a, pts({0.4}), Region({{{0.0}, {0.4}}})), DomainError);
}

TEST(SetDerivative, ConvergesToJanossyOnZoo) {
  for (const auto& e : zoo::all()) {
    const auto& s = e.model.space();
    std::vector<Point> ys{Point(s.dim(), 0.45)};
    const auto r = set_derivative_bmf(e.model, ys, Region::empty());
    EXPECT_LE(std::abs(r.value - e.model.janossy(ys)), 1e-2) << e.id;
    EXPECT_TRUE(strictly_decreasing(errors_against(r.table, e.model.janossy(ys)), 1e-13)) << e.id;
  }
}

TEST(Frechet, ModelAAtomicClosedForm) {
  const auto a = zoo::model_a();
  for (Complex c : {Complex{1e-3, 0.0}, Complex{0.0, 0.05}, Complex{-0.3, 0.4}}) {
    const auto nu = dirac(a.space(), {0.6}).scaled(c);
    EXPECT_NEAR(frechet_residual(a, ComplexMeasure::zero(), nu), 0.25 * std::abs(c), 1e-12);
  }
  EXPECT_THROW(frechet_residual(a, ComplexMeasure::zero(), ComplexMeasure::zero()), std::invalid_argument);
}

TEST(Frechet, SlopeAndRemainderBound) {
  Rng rng(112);
  for (const auto& e : zoo::all()) {
    const auto& s = e.model.space();
    const double K = bound_K(e.model).value;
    const auto eta = random_measure_with_norm(rng, s, 1.0);
    const auto dir = random_measure_with_norm(rng, s, 1.0);
    std::vector<double> norms, ratios;
    for (double t : {1e-1, 1e-2, 1e-3, 1e-4}) {
      const double r = frechet_residual(e.model, eta, dir.scaled(t));
      norms.push_back(t);
      ratios.push_back(r);
      EXPECT_LE(r * t, K * std::exp(1.0) * (std::expm1(t) - t) * (1 + 1e-9) + 1e-15) << e.id;
    }
    if (e.model.n_max() >= 2) EXPECT_GE(loglog_slope(norms, ratios), 0.9) << e.id;
    else
      for (std::size_t i = 0; i < ratios.size(); ++i) EXPECT_LE(ratios[i] * norms[i], 1e-14) << e.id;
  }
}

TEST(Frechet, HigherOrderDefectDecays) {
  const auto a = zoo::model_a();
  const auto& s = a.space();
  Rng rng(113);
  const auto dir = random_measure_with_norm(rng, s, 1.0);
  const auto big = frechet_residual_order(a, ComplexMeasure::zero(), dir.scaled(1e-1), 2, 5);
  const auto small = frechet_residual_order(a, ComplexMeasure::zero(), dir.scaled(1e-3), 2, 5);
  EXPECT_EQ(big.samples, 64);
  // Model A is quadratic, so the first-derivative defect is exactly linear: its ratio is zero.
  EXPECT_LE(big.value, 1e-12);
  EXPECT_LE(small.value, 1e-12);
  const auto p = zoo::truncated_poisson();
  const auto pb = frechet_residual_order(p, ComplexMeasure::zero(), dir.scaled(1e-1), 2, 5);
  const auto ps = frechet_residual_order(p, ComplexMeasure::zero(), dir.scaled(1e-2), 2, 5);
  EXPECT_GT(pb.value, 0.0);
  EXPECT_NEAR(ps.value / pb.value, 0.1, 0.02);
}
