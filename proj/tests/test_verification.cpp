#include <gtest/gtest.h>

#include "pgfm/verification.hpp"

using namespace pgfm;
using namespace pgfm::verification;

namespace {

SuiteConfig reduced() {
  SuiteConfig c;
  c.trials = {5, 5, 2, 10, 5, 20, 3, 2, 3, 3, 5};
  c.determinism_pass = false;
  return c;
}

}  // namespace

TEST(Verification, DefaultSuitePassesEveryCheck) {
  SuiteConfig c;
  c.determinism_pass = false;
  const auto rep = run_suite(c);
  for (const auto& check : rep.checks) EXPECT_TRUE(check.passed) << check_to_json(check).dump(2);
  for (int k = 1; k <= 11; ++k) {
    char id[8];
    std::snprintf(id, sizeof id, "AC%02d", k);
    EXPECT_NE(rep.find(id), nullptr) << id;
  }
}

TEST(Verification, SameSeedGivesIdenticalReports) {
  const auto a = report_to_json(run_suite(reduced())).dump();
  const auto b = report_to_json(run_suite(reduced())).dump();
  EXPECT_EQ(a, b);
}

TEST(Verification, DifferentSeedChangesSampledDetails) {
  auto c = reduced();
  c.only = {"AC02"};
  const auto a = report_to_json(run_suite(c)).dump();
  c.seed += 1;
  EXPECT_NE(a, report_to_json(run_suite(c)).dump());
}

TEST(Verification, DeterminismCheckAppearsWithDoublePass) {
  auto c = reduced();
  c.determinism_pass = true;
  c.only = {"AC01", "AC11", "AC12"};
  const auto rep = run_suite(c);
  const auto* d = rep.find("AC12");
  ASSERT_NE(d, nullptr);
  EXPECT_TRUE(d->passed);
}

TEST(Verification, ZeroToleranceOverrideFailsSomething) {
  auto c = reduced();
  c.tolerance_overrides["*"] = 0.0;
  const auto rep = run_suite(c);
  EXPECT_FALSE(rep.all_passed());
  const auto* ac04 = rep.find("AC04");
  ASSERT_NE(ac04, nullptr);
  EXPECT_FALSE(ac04->passed);
}

TEST(Verification, OverrideTargetsOnlyNamedCheck) {
  auto c = reduced();
  c.only = {"AC04", "AC11"};
  c.tolerance_overrides["AC04"] = 0.0;
  const auto rep = run_suite(c);
  EXPECT_FALSE(rep.find("AC04")->passed);
  EXPECT_TRUE(rep.find("AC11")->passed);
}

TEST(Verification, BooleanMetricsIgnoreOverrides) {
  auto c = reduced();
  c.only = {"AC10"};
  c.tolerance_overrides["AC10"] = 1.0;
  const auto* r = run_suite(c).find("AC10");
  ASSERT_NE(r, nullptr);
  EXPECT_TRUE(r->passed);
  EXPECT_EQ(r->metrics.front().tolerance, 1.0);
}

TEST(Verification, FailureDemosReportKnownWitnesses) {
  const auto d = failure_mode_demos();
  EXPECT_TRUE(d["expected_failures"].get<bool>());
  const double lstar = d["secular"]["detected_threshold"].get<double>();
  EXPECT_NEAR(lstar, 0.0798, 0.0798 * 0.01);
  EXPECT_NEAR(d["secular"]["analytic_lambda_star"].get<double>(), 0.079788, 1e-5);
  EXPECT_NEAR(d["bmf_non_additivity"]["gap"].get<double>(), -0.125, 1e-10);
  EXPECT_NEAR(d["gamma_exit"]["witness"][0].get<double>(), 0.5, 1e-9);
  EXPECT_GT(d["gamma_exit"]["sup_abs"].get<double>(), 1.0);
}

TEST(Verification, UnknownModelIdThrows) {
  auto c = reduced();
  c.models = {"nope"};
  EXPECT_THROW(run_suite(c), std::invalid_argument);
}

TEST(Verification, ModelSubsetRestrictsReport) {
  auto c = reduced();
  c.models = {"A"};
  c.only = {"AC01", "AC09"};
  const auto rep = run_suite(c);
  EXPECT_EQ(rep.models, std::vector<std::string>{"A"});
  EXPECT_TRUE(rep.all_passed());
  EXPECT_TRUE(rep.find("AC01")->details.contains("A"));
  EXPECT_FALSE(rep.find("AC01")->details.contains("poisson"));
}

TEST(Verification, ReportIsFiniteJson) {
  const auto j = report_to_json(run_suite(reduced()));
  const auto text = j.dump();
  EXPECT_EQ(text.find("nan"), std::string::npos);
  EXPECT_EQ(text.find("null,\"relation\""), std::string::npos);
  EXPECT_EQ(j["summary"]["failed"].get<int>(), 0);
  const auto& checks = j["checks"];
  for (std::size_t i = 1; i < checks.size(); ++i)
    EXPECT_LT(checks[i - 1]["id"].get<std::string>(), checks[i]["id"].get<std::string>());
}

TEST(Verification, JunitListsFailures) {
  auto c = reduced();
  c.only = {"AC11"};
  c.tolerance_overrides["AC11"] = -1.0;
  const auto xml = junit_xml(run_suite(c));
  EXPECT_NE(xml.find("tests=\"1\" failures=\"1\""), std::string::npos);
  EXPECT_NE(xml.find("<failure"), std::string::npos);
}

TEST(Verification, ConfigParsingRejectsUnknownKeys) {
  EXPECT_THROW(parse_config(io::json::parse(R"({"sed": 1})")), SchemaError);
  EXPECT_THROW(parse_config(io::json::parse(R"({"trials": {"bound_trials": 0}})")), SchemaError);
  const auto c = parse_config(io::json::parse(R"({"seed": 9, "models": ["A"], "tolerances": {"AC04": 1e-3}})"));
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.models.size(), 1u);
  EXPECT_DOUBLE_EQ(c.tolerance_overrides.at("AC04"), 1e-3);
}

TEST(Verification, ThreadCountDoesNotChangeReport) {
  auto c = reduced();
  c.threads = 1;
  const auto a = report_to_json(run_suite(c)).dump();
  c.threads = 4;
  EXPECT_EQ(a, report_to_json(run_suite(c)).dump());
}
