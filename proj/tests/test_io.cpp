#include <gtest/gtest.h>

#include "pgfm/io.hpp"
#include "pgfm/sampling.hpp"

using namespace pgfm;
using pgfm::io::json;

namespace {

std::string schema_path(const std::function<void()>& f) {
  try {
    f();
  } catch (const SchemaError& e) {
    return e.path();
  }
  return "<no error>";
}

const char* kModelA = R"({
  "space": {"dim": 1, "lower": [0], "upper": [1], "quadrature": {"kind": "gauss_legendre", "order": 32}},
  "n_max": 2,
  "family": {"kind": "iid_cluster", "pmf": [0.25, 0.5, 0.25], "spatial": {"kind": "constant", "value": 1}}
})";

}  // namespace

TEST(Io, ParsesModelA) {
  const auto m = io::parse_model(json::parse(kModelA));
  EXPECT_EQ(m.n_max(), 2);
  EXPECT_EQ(m.kind(), "iid_cluster");
  const std::vector<Point> xs{{0.3}, {0.7}};
  EXPECT_DOUBLE_EQ(m.janossy(xs), 0.5);
}

TEST(Io, ModelErrorsNameTheOffendingPath) {
  auto j = json::parse(kModelA);
  j["family"]["pmf"][2] = "x";
  EXPECT_EQ(schema_path([&] { io::parse_model(j); }), "model.family.pmf[2]");
  j = json::parse(kModelA);
  j["space"]["upper"] = json::array({-1});
  EXPECT_EQ(schema_path([&] { io::parse_model(j); }), "model.space.upper[0]");
  j = json::parse(kModelA);
  j["family"].erase("spatial");
  EXPECT_EQ(schema_path([&] { io::parse_model(j); }), "model.family.spatial");
  j = json::parse(kModelA);
  j["family"]["kind"] = "cox";
  EXPECT_EQ(schema_path([&] { io::parse_model(j); }), "model.family.kind");
  j = json::parse(kModelA);
  j["n_max"] = 3;
  EXPECT_EQ(schema_path([&] { io::parse_model(j); }), "model.family.pmf");
  j = json::parse(kModelA);
  j["family"]["pmf"] = json::array({0.5, 0.6});
  j.erase("n_max");
  EXPECT_EQ(schema_path([&] { io::parse_model(j); }), "model.family");
}

TEST(Io, ParsesOtherFamilies) {
  const auto p = io::parse_model(json::parse(R"({"space": {"dim": 1, "lower": [0], "upper": [1]}, "n_max": 4,
      "family": {"kind": "iid_cluster", "poisson_rate": 1.2, "spatial": 1}})"));
  EXPECT_EQ(p.n_max(), 4);
  EXPECT_GT(p.truncated_mass(), 0.0);
  const auto b = io::parse_model(json::parse(R"({"space": {"dim": 2, "lower": [0, 0], "upper": [1, 1]},
      "family": {"kind": "bernoulli", "existence": 0.6,
                 "spatial": {"kind": "truncated_gaussian_pdf", "center": [0.5, 0.5], "width": 0.3}}})"));
  EXPECT_EQ(b.n_max(), 1);
  EXPECT_TRUE(validate(b).ok());
  const auto t = io::parse_model(json::parse(R"({"space": {"dim": 1, "lower": [0], "upper": [1]},
      "family": {"kind": "tabulated", "j0": 0.5, "jn": [0.125,
          {"kind": "polynomial", "terms": [{"coeff": 1.5, "exponents": [1, 0]}]}]}})"));
  const std::vector<Point> xy{{0.2}, {0.8}};
  EXPECT_DOUBLE_EQ(t.janossy(xy), 0.75);
  EXPECT_TRUE(validate(t).ok());
  const auto s = io::parse_model(json::parse(R"({"space": {"dim": 1, "lower": [0], "upper": [1]},
      "family": {"kind": "superposition", "components": [
          {"kind": "bernoulli", "existence": 0.5, "spatial": 1},
          {"kind": "bernoulli", "existence": 0.5, "spatial": 1}]}})"));
  EXPECT_EQ(s.n_max(), 2);
  EXPECT_DOUBLE_EQ(s.janossy({}), 0.25);
}

TEST(Io, MeasureRoundTrip) {
  Rng rng(5);
  const auto s = BaseSpace::unit_square();
  for (int t = 0; t < 20; ++t) {
    const auto m = sampling::random_measure(rng, s);
    const auto j = io::measure_to_json(m);
    const auto back = io::parse_measure(json::parse(j.dump()), s);
    EXPECT_EQ(io::measure_to_json(back).dump(), j.dump());
    const auto f = sampling::random_field(rng, s);
    EXPECT_EQ(integrate(f, back, s), integrate(f, m, s));
  }
}

TEST(Io, MeasureErrors) {
  const auto s = BaseSpace::unit_interval();
  EXPECT_EQ(schema_path([&] { io::parse_measure(json::parse(R"({"atoms": [{"x": [2.0], "re": 1}]})"), s); }),
            "measure.atoms[0].x");
  EXPECT_EQ(schema_path([&] { io::parse_measure(json::parse(R"({"atoms": [{"x": [0.5, 0.1]}]})"), s); }),
            "measure.atoms[0].x");
  EXPECT_EQ(schema_path([&] { io::parse_measure(json::parse(R"({"density": {"kind": "gaussian", "center": [0.5]}})"), s); }),
            "measure.density.width");
  EXPECT_EQ(schema_path([&] { io::parse_measure(json::parse(R"({"atom": []})"), s); }), "measure.atom");
}

TEST(Io, FieldRoundTripAllKinds) {
  const auto s = BaseSpace::unit_square();
  const auto j = json::parse(R"({"kind": "sum", "terms": [
      {"kind": "constant", "value": {"re": 0.1, "im": -0.2}},
      {"kind": "gaussian", "center": [0.3, 0.4], "width": 0.1, "amplitude": 2},
      {"kind": "indicator", "lower": [0, 0], "upper": [0.5, 0.5]},
      {"kind": "polynomial", "terms": [{"coeff": 1, "exponents": [2, 1]}]},
      {"kind": "product", "factors": [1.5, {"kind": "constant", "value": 2}]},
      {"kind": "scale", "factor": {"im": 1}, "field": {"kind": "region_indicator",
          "boxes": [{"lower": [0.6, 0.6], "upper": [1, 1]}]}}]})");
  const auto f = io::parse_field(j, 2, "field", &s);
  const auto g = io::parse_field(json::parse(io::field_to_json(f).dump()), 2, "field", &s);
  for (const auto& p : s.rule().nodes) EXPECT_EQ(f(p), g(p));
  EXPECT_EQ(schema_path([&] { io::parse_field(json::parse(R"({"kind": "sum", "terms": [{"kind": "nope"}]})"), 2, "field"); }),
            "field.terms[0].kind");
}

TEST(Io, ModelRoundTrip) {
  for (const auto& e : zoo::all()) {
    const auto j = io::model_to_json(e.model);
    const auto back = io::parse_model(json::parse(j.dump()));
    EXPECT_EQ(io::model_to_json(back).dump(), j.dump()) << e.id;
    EXPECT_NEAR(pgfl_eval(back, ScalarField::constant(0.5)).value.real(),
                pgfl_eval(e.model, ScalarField::constant(0.5)).value.real(), 1e-15)
        << e.id;
  }
}

TEST(Io, RegionParsing) {
  const auto s = BaseSpace::unit_interval();
  const auto r = io::parse_region(json::parse(R"([{"lower": [0], "upper": [0.5]}])"), s);
  EXPECT_DOUBLE_EQ(r.volume(), 0.5);
  EXPECT_EQ(schema_path([&] {
              io::parse_region(json::parse(R"({"boxes": [{"lower": [0], "upper": [0.5]}, {"lower": [0.4], "upper": [0.9]}]})"), s);
            }),
            "region");
}

TEST(Io, ReportRoundTrip) {
  DerivativeReport r;
  r.method = "secular";
  r.value = {0.75, 1e-17};
  r.table = {{0.2, 0.7}, {0.1, {0.74, 0.0}}};
  r.extrapolated = 0.75;
  r.violations.push_back({0.1, 0.05, 1.3, {0.5}});
  r.warnings = {"w"};
  const auto j = io::report_to_json(r);
  const auto back = io::parse_report(json::parse(j.dump()));
  EXPECT_EQ(io::report_to_json(back).dump(), j.dump());
  const auto out = io::value_output({1.0, 2.0}, json{{"terms", 3}});
  EXPECT_EQ(io::parse_value_output(json::parse(out.dump())), Complex(1.0, 2.0));
}

TEST(Io, LoadModelByZooId) {
  EXPECT_EQ(io::load_model("zoo:A").n_max(), 2);
  EXPECT_THROW(io::load_model("zoo:nope"), std::invalid_argument);
  EXPECT_THROW(io::load_model("/nonexistent/model.json"), SchemaError);
}
