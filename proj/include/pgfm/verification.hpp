#pragma once

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <functional>
#include <map>
#include <mutex>
#include <thread>

#include "pgfm/derivatives.hpp"
#include "pgfm/io.hpp"
#include "pgfm/sampling.hpp"
#include "pgfm/zoo.hpp"

namespace pgfm::verification {

using io::json;

struct Trials {
  int density_sites = 50;
  int moment_sites = 20;
  int cross_sites = 5;
  int frechet_directions = 100;
  int frechet_norms = 13;
  int bound_trials = 1000;
  int product_sites = 20;
  int product_measures = 10;
  int chain_trials = 10;
  int permutation_trials = 20;
  int property_trials = 50;
};

struct SuiteConfig {
  std::uint64_t seed = 20240611;
  Trials trials;
  /// Check id (or "*") -> tolerance replacing every metric tolerance of it.
  std::map<std::string, double> tolerance_overrides;
  /// Zoo ids; empty selects the whole zoo.
  std::vector<std::string> models;
  /// Check ids to run; empty runs all.
  std::vector<std::string> only;
  std::string output;
  /// Worker threads; 0 uses PGFM_THREADS or the hardware concurrency.
  int threads = 0;
  /// Run everything a second time and compare the serialized results.
  bool determinism_pass = true;
  double runtime_limit_seconds = 300.0;
};

enum class Relation { at_most, at_least };

struct Metric {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  Relation relation = Relation::at_most;
  bool overridable = true;
  bool passed = false;
};

struct CheckResult {
  std::string id;
  std::string title;
  std::vector<Metric> metrics;
  json details = json::object();
  bool passed = false;
};

struct SuiteReport {
  std::uint64_t seed = 0;
  std::vector<std::string> models;
  std::vector<CheckResult> checks;
  json demos = json::object();
  /// Wall-clock seconds per check id; never serialized.
  std::map<std::string, double> seconds;
  double total_seconds = 0.0;

  bool all_passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
  }
  const CheckResult* find(const std::string& id) const {
    for (const auto& c : checks)
      if (c.id == id) return &c;
    return nullptr;
  }
};

inline SuiteConfig parse_config(const json& j, const std::string& path = "config") {
  using namespace io::detail;
  SuiteConfig c;
  if (!j.is_object()) throw SchemaError(path, "expected object");
  for (const auto& [k, v] : j.items()) {
    const auto kp = at(path, k);
    if (k == "seed") {
      if (!v.is_number_unsigned()) throw SchemaError(kp, "expected nonnegative integer");
      c.seed = v.get<std::uint64_t>();
    } else if (k == "trials") {
      if (!v.is_object()) throw SchemaError(kp, "expected object");
      std::map<std::string, int*> slots{{"density_sites", &c.trials.density_sites},
                                         {"moment_sites", &c.trials.moment_sites},
                                         {"cross_sites", &c.trials.cross_sites},
                                         {"frechet_directions", &c.trials.frechet_directions},
                                         {"frechet_norms", &c.trials.frechet_norms},
                                         {"bound_trials", &c.trials.bound_trials},
                                         {"product_sites", &c.trials.product_sites},
                                         {"product_measures", &c.trials.product_measures},
                                         {"chain_trials", &c.trials.chain_trials},
                                         {"permutation_trials", &c.trials.permutation_trials},
                                         {"property_trials", &c.trials.property_trials}};
      for (const auto& [tk, tv] : v.items()) {
        auto it = slots.find(tk);
        if (it == slots.end()) throw SchemaError(at(kp, tk), "unknown trial count");
        *it->second = integer(tv, at(kp, tk), 1);
      }
      if (c.trials.frechet_norms < 2) throw SchemaError(at(kp, "frechet_norms"), "need at least two norms");
    } else if (k == "tolerances") {
      if (!v.is_object()) throw SchemaError(kp, "expected object");
      for (const auto& [tk, tv] : v.items()) {
        const double t = number(tv, at(kp, tk));
        if (t < 0.0) throw SchemaError(at(kp, tk), "tolerance must be nonnegative");
        c.tolerance_overrides[tk] = t;
      }
    } else if (k == "models") {
      const auto& arr = array(v, kp);
      for (std::size_t i = 0; i < arr.size(); ++i) c.models.push_back(text(arr[i], at(kp, i)));
    } else if (k == "only") {
      const auto& arr = array(v, kp);
      for (std::size_t i = 0; i < arr.size(); ++i) c.only.push_back(text(arr[i], at(kp, i)));
    } else if (k == "output") {
      c.output = text(v, kp);
    } else if (k == "threads") {
      c.threads = integer(v, kp, 0);
    } else if (k == "determinism_pass") {
      if (!v.is_boolean()) throw SchemaError(kp, "expected boolean");
      c.determinism_pass = v.get<bool>();
    } else if (k == "runtime_limit_seconds") {
      c.runtime_limit_seconds = positive(v, kp);
    } else {
      throw SchemaError(kp, "unknown key");
    }
  }
  return c;
}

namespace detail {

using sampling::MeasureShape;
using sampling::random_measure;
using sampling::random_measure_with_norm;
using sampling::random_point;

struct Context {
  const SuiteConfig& config;
  std::vector<zoo::Entry> models;

  Rng rng(const std::string& id) const { return Rng(config.seed).split(id); }
  const Trials& trials() const { return config.trials; }

  /// Zoo entry by id when selected, else nullptr.
  const zoo::Entry* model(const std::string& id) const {
    for (const auto& e : models)
      if (e.id == id) return &e;
    return nullptr;
  }
};

class Builder {
 public:
  Builder(std::string id, std::string title) { r_.id = std::move(id), r_.title = std::move(title); }

  void at_most(const std::string& name, double value, double tol, bool overridable = true) {
    r_.metrics.push_back({name, value, tol, Relation::at_most, overridable, false});
  }
  void at_least(const std::string& name, double value, double tol, bool overridable = true) {
    r_.metrics.push_back({name, value, tol, Relation::at_least, overridable, false});
  }
  /// Boolean property; passes when `ok`.
  void holds(const std::string& name, bool ok) { at_least(name, ok ? 1.0 : 0.0, 1.0, false); }
  json& details() { return r_.details; }

  CheckResult finish(const SuiteConfig& cfg) && {
    auto ov = cfg.tolerance_overrides.find(r_.id);
    if (ov == cfg.tolerance_overrides.end()) ov = cfg.tolerance_overrides.find("*");
    r_.passed = true;
    for (auto& m : r_.metrics) {
      if (ov != cfg.tolerance_overrides.end() && m.overridable) m.tolerance = ov->second;
      const bool finite = std::isfinite(m.value);
      m.passed = finite && (m.relation == Relation::at_most ? m.value <= m.tolerance : m.value >= m.tolerance);
      r_.passed = r_.passed && m.passed;
    }
    if (r_.metrics.empty()) r_.passed = false;
    return std::move(r_);
  }

 private:
  CheckResult r_;
};

inline std::vector<Point> random_sites(Rng& rng, const BaseSpace& s, int m) {
  std::vector<Point> ys(m);
  for (auto& y : ys) y = random_point(rng, s);
  return ys;
}

inline Point centre_site(const BaseSpace& s, double frac = 0.5) {
  Point p(s.dim());
  for (int i = 0; i < s.dim(); ++i) p[i] = s.lower()[i] + frac * (s.upper()[i] - s.lower()[i]);
  return p;
}

inline ScalarField gamma_field(Rng& rng, const BaseSpace& s) {
  const auto f = sampling::random_field(rng, s);
  return f.scaled(rng.uniform(0.2, 1.0) / std::max(1.0, f.sup_bound(s)));
}

// -------------------------------------------------------------- criteria

inline CheckResult ac01(const Context& ctx) {
  Builder b("AC01", "Normalization of every zoo model");
  double worst_q = 0.0, worst_c = 0.0;
  for (const auto& e : ctx.models) {
    const auto r = set_integral(janossy_set_function(e.model), ComplexMeasure::reference(), e.model.space());
    const double res = std::abs(r.value - 1.0);
    b.details()[e.id] = {{"residual", res}, {"closed_form", e.closed_form}, {"sampled", r.sampled}};
    (e.closed_form ? worst_c : worst_q) = std::max(e.closed_form ? worst_c : worst_q, res);
  }
  b.at_most("max residual, quadrature models", worst_q, 1e-6);
  b.at_most("max residual, closed-form models", worst_c, 1e-10);
  return std::move(b).finish(ctx.config);
}

inline CheckResult ac02(const Context& ctx) {
  Builder b("AC02", "Density recovery at the zero measure");
  Rng rng = ctx.rng("AC02");
  double worst = 0.0;
  for (const auto& e : ctx.models) {
    double w = 0.0;
    for (int m = 1; m <= std::min(3, e.model.n_max()); ++m)
      for (int t = 0; t < ctx.trials().density_sites; ++t) {
        const auto ys = random_sites(rng, e.model.space(), m);
        w = std::max(w, relative_error(pgfm_derivative(e.model, ys, ComplexMeasure::zero()).value, e.model.janossy(ys)));
      }
    b.details()[e.id] = w;
    worst = std::max(worst, w);
  }
  b.at_most("max relative error", worst, 1e-10);
  return std::move(b).finish(ctx.config);
}

inline CheckResult ac03(const Context& ctx) {
  Builder b("AC03", "Factorial-moment recovery at the reference measure");
  Rng rng = ctx.rng("AC03");
  const auto one = ScalarField::constant(1.0);
  double worst = 0.0;
  for (const auto& e : ctx.models) {
    double w = 0.0;
    const int top = std::min(3, e.model.n_max());
    for (int t = 0; t < ctx.trials().moment_sites; ++t) {
      const auto ys = random_sites(rng, e.model.space(), 1 + t % top);
      const auto d = pgfm_derivative(e.model, ys, ComplexMeasure::reference()).value;
      w = std::max(w, relative_error(d, oracle_derivative(e.model, ys, one)));
    }
    b.details()[e.id] = w;
    worst = std::max(worst, w);
  }
  b.at_most("max relative error vs brute-force moment", worst, 1e-8);
  if (const auto* a = ctx.model("A")) {
    double dev = 0.0;
    for (int t = 0; t < ctx.trials().moment_sites; ++t) {
      const std::vector<Point> ys{random_point(rng, a->model.space())};
      dev = std::max(dev, std::abs(pgfm_derivative(a->model, ys, ComplexMeasure::reference()).value - 1.0));
    }
    b.at_most("Model A |D({x}) - 1|", dev, 1e-12);
  }
  return std::move(b).finish(ctx.config);
}

inline CheckResult ac04(const Context& ctx) {
  Builder b("AC04", "Cross-definition agreement");
  Rng rng = ctx.rng("AC04");
  const auto half = ScalarField::constant(0.5);
  double oracle_err = 0.0, fd_err = 0.0, limit_err = 0.0, set_err = 0.0;
  bool limit_monotone = true, set_monotone = true;
  for (const auto& e : ctx.models) {
    const auto& s = e.model.space();
    json d;
    double wo = 0.0, wf = 0.0;
    for (int t = 0; t < ctx.trials().cross_sites; ++t) {
      const auto ys = random_sites(rng, s, 1 + t % std::min(2, e.model.n_max()));
      const auto eta = t % 2 == 0 ? ComplexMeasure::reference() : random_measure(rng, s, MeasureShape::mixed, true);
      const auto formula = pgfm_derivative(e.model, ys, eta).value;
      wo = std::max(wo, relative_error(oracle_derivative(e.model, ys, eta), formula));
      std::vector<ComplexMeasure> dirs;
      for (const auto& y : ys) dirs.push_back(dirac(s, y));
      wf = std::max(wf, relative_error(nested_fd_derivative(e.model, dirs, eta).value, formula));
    }
    d["oracle_vs_pgfm"] = wo;
    d["nested_fd_vs_pgfm"] = wf;

    const Point x = centre_site(s);
    const auto target = oracle_derivative(e.model, std::vector<Point>{x}, half);
    const auto ls = limit_sequence_derivative(e.model, x, half);
    const auto ls_errors = errors_against(ls.table, target);
    const bool ls_mono = strictly_decreasing(ls_errors, 1e-13);
    d["limit_sequence"] = {{"raw_errors", ls_errors}, {"extrapolated_error", relative_error(ls.value, target)},
                           {"strictly_decreasing", ls_mono}};

    const std::vector<Point> sd_site{centre_site(s, 0.45)};
    const double jx = e.model.janossy(sd_site);
    const auto sd = set_derivative_bmf(e.model, sd_site, Region::empty());
    const auto sd_errors = errors_against(sd.table, jx);
    const bool sd_mono = strictly_decreasing(sd_errors, 1e-13);
    d["set_derivative"] = {{"raw_errors", sd_errors}, {"extrapolated_error", std::abs(sd.value - jx)},
                           {"strictly_decreasing", sd_mono}};

    oracle_err = std::max(oracle_err, wo);
    fd_err = std::max(fd_err, wf);
    limit_err = std::max(limit_err, relative_error(ls.value, target));
    set_err = std::max(set_err, std::abs(sd.value - jx));
    limit_monotone = limit_monotone && ls_mono;
    set_monotone = set_monotone && sd_mono;
    b.details()[e.id] = d;
  }
  b.at_most("oracle vs pgfm, positive measures (relative)", oracle_err, 1e-8);
  b.at_most("nested_fd extrapolated vs pgfm (relative)", fd_err, 1e-6);
  b.at_most("limit_sequence gaussian extrapolated vs oracle (relative)", limit_err, 1e-3);
  b.holds("limit_sequence raw error strictly decreasing over lambda", limit_monotone);
  b.at_most("set_derivative extrapolated vs janossy (absolute)", set_err, 1e-2);
  return std::move(b).finish(ctx.config);
}

inline CheckResult ac05(const Context& ctx) {
  Builder b("AC05", "Frechet remainder decay");
  Rng rng = ctx.rng("AC05");
  const int nn = ctx.trials().frechet_norms;
  std::vector<double> norms(nn);
  for (int k = 0; k < nn; ++k) norms[k] = std::pow(10.0, -4.0 + 3.0 * k / (nn - 1));
  double min_slope = std::numeric_limits<double>::infinity();
  double affine_floor = 0.0;
  for (const auto& e : ctx.models) {
    const auto& s = e.model.space();
    const bool affine = e.model.n_max() <= 1;
    double ms = std::numeric_limits<double>::infinity(), fl = 0.0;
    for (int t = 0; t < ctx.trials().frechet_directions; ++t) {
      const auto eta = random_measure_with_norm(rng, s, rng.uniform(0.0, 2.0), static_cast<MeasureShape>(t % 3));
      const auto dir = random_measure_with_norm(rng, s, 1.0, static_cast<MeasureShape>((t / 3) % 3));
      const double scale = std::max(1.0, std::abs(pgfm_eval(e.model, eta)));
      std::vector<double> ratios;
      for (double n : norms) ratios.push_back(frechet_residual(e.model, eta, dir.scaled(n)));
      if (affine) {
        for (int k = 0; k < nn; ++k) fl = std::max(fl, ratios[k] * norms[k] / scale);
      } else {
        ms = std::min(ms, loglog_slope(norms, ratios));
      }
    }
    if (affine) {
      b.details()[e.id] = {{"affine", true}, {"max_defect", fl}};
      affine_floor = std::max(affine_floor, fl);
    } else {
      b.details()[e.id] = {{"affine", false}, {"min_slope", ms}};
      min_slope = std::min(min_slope, ms);
    }
  }
  if (std::isfinite(min_slope)) b.at_least("min fitted log-log slope (non-affine models)", min_slope, 0.9);
  b.at_most("affine models: max relative defect (roundoff floor)", affine_floor, 1e-14);
  if (const auto* a = ctx.model("A")) {
    double dev = 0.0;
    for (int t = 0; t < ctx.trials().frechet_directions; ++t) {
      const Complex c = std::polar(norms[t % nn], rng.uniform(0.0, 2.0 * kPi));
      const auto nu = dirac(a->model.space(), random_point(rng, a->model.space())).scaled(c);
      dev = std::max(dev, std::abs(frechet_residual(a->model, ComplexMeasure::zero(), nu) - 0.25 * std::abs(c)));
    }
    b.at_most("Model A atomic residual vs 0.25 |nu| (absolute)", dev, 1e-10);
  }
  return std::move(b).finish(ctx.config);
}

inline CheckResult ac06(const Context& ctx) {
  Builder b("AC06", "Growth and remainder bounds with K");
  Rng rng = ctx.rng("AC06");
  double worst_g = 0.0, worst_d = 0.0;
  int violations = 0, total = 0;
  for (const auto& e : ctx.models) {
    const auto& s = e.model.space();
    const double K = bound_K(e.model).value;
    for (int t = 0; t < ctx.trials().bound_trials; ++t) {
      const auto eta = random_measure_with_norm(rng, s, rng.uniform(0.01, 3.0), static_cast<MeasureShape>(t % 3));
      const auto nu = random_measure_with_norm(rng, s, rng.uniform(0.01, 3.0), static_cast<MeasureShape>((t / 3) % 3));
      const double ne = total_variation(eta, s), nv = total_variation(nu, s);
      const double g = std::abs(pgfm_eval(e.model, eta));
      const double defect = frechet_residual(e.model, eta, nu) * nv;
      const double rg = g / (K * std::exp(ne));
      const double rd = defect / (K * std::exp(ne) * (std::expm1(nv) - nv));
      worst_g = std::max(worst_g, rg);
      worst_d = std::max(worst_d, rd);
      violations += (rg > 1.0) + (rd > 1.0);
      ++total;
    }
  }
  b.details() = {{"trials", total}, {"violations", violations}};
  b.at_most("max |G| / (K e^|eta|)", worst_g, 1.0);
  b.at_most("max defect / (K e^|eta| (e^|nu| - 1 - |nu|))", worst_d, 1.0);
  return std::move(b).finish(ctx.config);
}

inline CheckResult ac07(const Context& ctx) {
  Builder b("AC07", "Product rule on superpositions");
  Rng rng = ctx.rng("AC07");
  std::vector<std::pair<std::string, std::string>> pairs{{"A", "bernoulli"}, {"poisson", "bernoulli"}};
  double worst = 0.0;
  int pairs_run = 0;
  for (const auto& [ia, ib] : pairs) {
    const auto* a = ctx.model(ia);
    const auto* bb = ctx.model(ib);
    if (!a || !bb) continue;
    ++pairs_run;
    const auto sum = superpose(a->model, bb->model);
    const auto& s = sum.space();
    double w = 0.0;
    for (int mi = 0; mi < ctx.trials().product_measures; ++mi) {
      const auto eta = random_measure(rng, s, static_cast<MeasureShape>(mi % 3), true);
      const Complex ga = pgfm_eval(a->model, eta), gb = pgfm_eval(bb->model, eta);
      for (int si = 0; si < ctx.trials().product_sites; ++si) {
        const std::vector<Point> ys{random_point(rng, s)};
        const Complex lhs = pgfm_derivative(sum, ys, eta).value;
        const Complex rhs =
            pgfm_derivative(a->model, ys, eta).value * gb + ga * pgfm_derivative(bb->model, ys, eta).value;
        w = std::max(w, relative_error(lhs, rhs));
      }
    }
    b.details()[ia + "+" + ib] = w;
    worst = std::max(worst, w);
  }
  b.holds("at least one model pair selected", pairs_run > 0);
  b.at_most("max relative error", worst, 1e-8);
  return std::move(b).finish(ctx.config);
}

inline CheckResult ac08(const Context& ctx) {
  Builder b("AC08", "Chain rule for t^2 and t^3 via superposition");
  Rng rng = ctx.rng("AC08");
  double w2 = 0.0, w3 = 0.0;
  int cubes = 0;
  for (const auto& e : ctx.models) {
    if (e.model.n_max() > 4) continue;
    const auto sq = superpose(e.model, e.model);
    const bool cube = e.model.n_max() <= 2;
    const auto cu = cube ? superpose(sq, e.model) : sq;
    double a2 = 0.0, a3 = 0.0;
    for (int t = 0; t < ctx.trials().chain_trials; ++t) {
      const auto eta = random_measure(rng, e.model.space(), static_cast<MeasureShape>(t % 3), true);
      const std::vector<Point> ys{random_point(rng, e.model.space())};
      const Complex g = pgfm_eval(e.model, eta), dg = pgfm_derivative(e.model, ys, eta).value;
      a2 = std::max(a2, relative_error(pgfm_derivative(sq, ys, eta).value, 2.0 * g * dg));
      if (cube) a3 = std::max(a3, relative_error(pgfm_derivative(cu, ys, eta).value, 3.0 * g * g * dg));
    }
    b.details()[e.id] = {{"square", a2}, {"cube", cube ? json(a3) : json(nullptr)}};
    w2 = std::max(w2, a2);
    w3 = std::max(w3, a3);
    cubes += cube;
  }
  b.at_most("t^2: max relative error", w2, 1e-8);
  b.at_most("t^3: max relative error", w3, 1e-7);
  b.holds("t^3 exercised on at least one model", cubes > 0);
  return std::move(b).finish(ctx.config);
}

inline CheckResult ac09(const Context& ctx) {
  Builder b("AC09", "Site-permutation invariance");
  Rng rng = ctx.rng("AC09");
  double worst = 0.0;
  int runs = 0;
  for (const auto& e : ctx.models) {
    json d;
    for (int m = 2; m <= std::min(3, e.model.n_max()); ++m) {
      for (auto shape : {MeasureShape::atomic, MeasureShape::continuous, MeasureShape::mixed}) {
        double w = 0.0;
        for (int t = 0; t < ctx.trials().permutation_trials; ++t) {
          const auto ys = random_sites(rng, e.model.space(), m);
          const auto eta = random_measure(rng, e.model.space(), shape);
          w = std::max(w, pgfm_derivative(e.model, ys, eta).commutation_residual.value_or(0.0));
          ++runs;
        }
        d["m" + std::to_string(m) + "_" + std::to_string(static_cast<int>(shape))] = w;
        worst = std::max(worst, w);
      }
    }
    if (!d.is_null()) b.details()[e.id] = d;
  }
  b.holds("at least one model with n_max >= 2 selected", runs > 0);
  b.at_most("max relative spread over m! orderings", worst, 1e-10);
  return std::move(b).finish(ctx.config);
}

struct SecularScan {
  double analytic = 0.0;
  double transition = 0.0;
  double largest_flagged = 0.0;
  double smallest_clear = 0.0;
  bool threshold_shaped = true;
  Point witness;
  json flags = json::array();
};

inline SecularScan secular_scan(const FiniteSetDensity& model) {
  SecularScan s;
  s.analytic = critical_secular_width(0.5, 0.1, 1);
  SecularOptions opt;
  opt.lambdas.clear();
  for (int k = 0; k <= 160; ++k) opt.lambdas.push_back(0.12 - 0.0005 * k);
  const auto r = secular_derivative(model, {0.5}, ScalarField::constant(0.5), opt);
  std::map<double, bool> flagged;
  for (double l : opt.lambdas) flagged[l] = false;
  for (const auto& v : r.violations) {
    flagged[v.lambda] = true;
    if (s.witness.empty() && v.eps > 0) s.witness = v.witness;
  }
  s.largest_flagged = 0.0;
  s.smallest_clear = std::numeric_limits<double>::infinity();
  for (const auto& [l, f] : flagged) {
    if (f) s.largest_flagged = std::max(s.largest_flagged, l);
    else s.smallest_clear = std::min(s.smallest_clear, l);
  }
  s.threshold_shaped = s.largest_flagged < s.smallest_clear;
  s.transition = 0.5 * (s.largest_flagged + s.smallest_clear);
  for (const auto& [l, f] : flagged) s.flags.push_back({{"lambda", l}, {"flagged", f}});
  return s;
}

inline CheckResult ac10(const Context& ctx) {
  Builder b("AC10", "Secular method leaves |h| <= 1 below the critical width");
  const auto scan = secular_scan(zoo::model_a());
  b.details() = {{"analytic_lambda_star", scan.analytic},
                 {"largest_flagged", scan.largest_flagged},
                 {"smallest_clear", scan.smallest_clear},
                 {"witness", scan.witness}};
  b.holds("flags exactly the widths below a threshold", scan.threshold_shaped);
  b.at_most("|threshold - 0.0798| / 0.0798", std::abs(scan.transition - 0.0798) / 0.0798, 0.01);
  b.at_most("|threshold - analytic| / analytic", std::abs(scan.transition - scan.analytic) / scan.analytic, 0.01);
  return std::move(b).finish(ctx.config);
}

inline CheckResult ac11(const Context& ctx) {
  Builder b("AC11", "Belief mass is not additive over the halves split");
  const auto a = zoo::model_a();
  const double whole = bmf_eval(a, Region::whole(a.space()));
  const double left = bmf_eval(a, Region({{{0.0}, {0.5}}}));
  const double right = bmf_eval(a, Region({{{0.5}, {1.0}}}));
  const double gap = whole - left - right;
  b.details() = {{"beta_whole", whole}, {"beta_left", left}, {"beta_right", right}, {"gap", gap}};
  b.at_most("|gap + 0.125|", std::abs(gap + 0.125), 1e-10);
  return std::move(b).finish(ctx.config);
}

// -------------------------------------------------------------- module invariants

inline CheckResult inv_space_measure(const Context& ctx) {
  Builder b("INV-SM", "Measures: linearity, duality, exactness, sifting, test-sequence mass");
  Rng rng = ctx.rng("INV-SM");
  double lin = 0.0, dual = 0.0, sift = 0.0, quad = 0.0, mass = 0.0;
  bool concentrates = true;
  for (const auto& s : {BaseSpace::unit_interval(), BaseSpace::unit_square()}) {
    for (int t = 0; t < ctx.trials().property_trials; ++t) {
      const auto f = sampling::random_field(rng, s);
      const auto eta = random_measure(rng, s), nu = random_measure(rng, s);
      const Complex a = sampling::random_complex(rng), c = sampling::random_complex(rng);
      const Complex rhs = a * integrate(f, eta, s) + c * integrate(f, nu, s);
      lin = std::max(lin, std::abs(integrate(f, a * eta + c * nu, s) - rhs) / std::max(1.0, std::abs(rhs)));
      dual = std::max(dual, std::abs(integrate(f, eta, s)) / (f.sup_bound(s) * total_variation(eta, s)));
      const auto x = random_point(rng, s);
      sift = std::max(sift, std::abs(integrate(f, dirac(s, x), s) - f(x)));
    }
    const int deg = s.rule().degree;
    for (int k = 0; k <= deg; ++k) {
      double q = 0.0;
      for (std::size_t i = 0; i < s.rule().size(); ++i) q += s.rule().weights[i] * std::pow(s.rule().nodes[i][0], k);
      quad = std::max(quad, std::abs(q * (k + 1) - 1.0));
    }
    for (auto kind : {TestSequenceKind::gaussian, TestSequenceKind::indicator}) {
      double previous = 0.0;
      for (double lambda : {0.2, 0.1, 0.05, 0.025}) {
        const TestSequenceFamily fam{kind, centre_site(s, 0.3), lambda};
        const auto member = test_member(s, fam);
        const auto rule = member_rule(s, fam);
        mass = std::max(mass, std::abs(integrate(member, ComplexMeasure::reference(), s, rule) - 1.0));
        Point lo(s.dim()), hi(s.dim());
        for (int i = 0; i < s.dim(); ++i) lo[i] = fam.center[i] - 0.1, hi[i] = fam.center[i] + 0.1;
        const auto ball = ScalarField::indicator(lo, hi);
        auto bps = ball.breakpoints(s.dim());
        for (int i = 0; i < s.dim(); ++i)
          for (double k : {-3.0, -1.0, 1.0, 3.0}) bps[i].push_back(fam.center[i] + k * lambda);
        const double inside =
            integrate(member * ball, ComplexMeasure::reference(), s, s.composite_rule(bps, 12)).real();
        concentrates = concentrates && inside >= previous - 1e-12;
        previous = inside;
      }
      concentrates = concentrates && previous > 0.95;
    }
  }
  b.at_most("linearity (relative)", lin, 1e-12);
  b.at_most("max |int f d eta| / (sup|f| |eta|)", dual, 1.0 + 1e-12);
  b.at_most("polynomial exactness up to declared degree", quad, 1e-12);
  b.at_most("Dirac sifting", sift, 0.0);
  b.at_most("test member unit mass", mass, 1e-10);
  b.holds("test member mass concentrates near the centre", concentrates);
  return std::move(b).finish(ctx.config);
}

inline CheckResult inv_rfs_model(const Context& ctx) {
  Builder b("INV-RFS", "Models: validation, truncation, superposed normalization, symmetrization, iid sums");
  Rng rng = ctx.rng("INV-RFS");
  bool valid = true, trunc = true;
  for (const auto& e : ctx.models) {
    const auto rep = validate(e.model);
    valid = valid && rep.ok();
    b.details()[e.id] = {{"normalization_residual", rep.normalization_residual},
                         {"K", rep.K.value},
                         {"K_grid_nodes_per_axis", rep.K.grid_nodes_per_axis},
                         {"truncated_mass", rep.truncated_mass},
                         {"failures", rep.failures}};
    const auto xs = random_sites(rng, e.model.space(), e.model.n_max() + 1);
    trunc = trunc && e.model.janossy(xs) == 0.0;
  }
  double sup_norm = 0.0;
  for (std::size_t i = 0; i < ctx.models.size(); ++i)
    for (std::size_t j = i; j < ctx.models.size(); ++j) {
      const auto& a = ctx.models[i].model;
      const auto& c = ctx.models[j].model;
      if (!(a.space() == c.space()) || a.n_max() + c.n_max() > 4) continue;
      const auto m = superpose(a, c);
      sup_norm = std::max(sup_norm, std::abs(set_integral(janossy_set_function(m), ComplexMeasure::reference(),
                                                          m.space()).value - 1.0));
    }
  double proj = 0.0;
  const auto g = symmetrize([](PointTuple xs) { return xs[0][0] + 2.0 * xs[1][0] * xs[2][0] * xs[2][0]; });
  const auto gg = symmetrize(g);
  for (int t = 0; t < ctx.trials().property_trials; ++t) {
    const std::vector<Point> xs{{rng.uniform()}, {rng.uniform()}, {rng.uniform()}};
    proj = std::max(proj, std::abs(gg(xs) - g(xs)));
  }
  double iid = 0.0;
  const std::vector<double> pmf{0.1, 0.2, 0.3, 0.4};
  for (double c : {0.5, 1.0, 2.0}) {
    const auto m = FiniteSetDensity::iid_cluster(BaseSpace::unit_interval(), pmf, ScalarField::constant(c));
    double expect = 0.0;
    for (int n = 0; n < 4; ++n) expect += pmf[n] * std::pow(c, n);
    iid = std::max(iid, relative_error(set_integral(janossy_set_function(m), ComplexMeasure::reference(),
                                                    m.space()).value, expect));
  }
  b.holds("every selected zoo model validates", valid);
  b.holds("janossy above n_max is exactly zero", trunc);
  b.at_most("normalization of superposed pairs", sup_norm, 2e-6);
  b.at_most("symmetrize is a projection", proj, 1e-12);
  b.at_most("iid set integral equals sum rho(n) c^n (relative)", iid, 1e-12);
  return std::move(b).finish(ctx.config);
}

inline CheckResult inv_functionals(const Context& ctx) {
  Builder b("INV-FN", "Functionals: PGFL/PGFM consistency, product law, growth, non-additivity");
  Rng rng = ctx.rng("INV-FN");
  double cons = 0.0, growth = 0.0, prod = 0.0, imag = 0.0;
  for (const auto& e : ctx.models) {
    const auto& s = e.model.space();
    const double K = bound_K(e.model).value;
    for (int t = 0; t < ctx.trials().property_trials; ++t) {
      const auto h = gamma_field(rng, s);
      const Complex g = pgfl_eval(e.model, h).value;
      cons = std::max(cons, std::abs(g - pgfm_eval(e.model, ComplexMeasure::with_density(h))) / std::max(1.0, std::abs(g)));
    }
    for (int t = 0; t < ctx.trials().bound_trials; ++t) {
      const auto eta = random_measure_with_norm(rng, s, rng.uniform(0.0, 3.0), static_cast<MeasureShape>(t % 3));
      growth = std::max(growth, std::abs(pgfm_eval(e.model, eta)) / (K * std::exp(total_variation(eta, s))));
    }
    for (int t = 0; t < 10; ++t)
      imag = std::max(imag, std::abs(pgfm_eval(e.model, random_measure(rng, s, MeasureShape::mixed, true)).imag()));
  }
  if (const auto* a = ctx.model("A"); a && ctx.model("bernoulli")) {
    const auto& bm = ctx.model("bernoulli")->model;
    const auto sum = superpose(a->model, bm);
    for (int t = 0; t < 20; ++t) {
      const auto h = gamma_field(rng, sum.space());
      prod = std::max(prod, std::abs(pgfl_eval(sum, h).value - pgfl_eval(a->model, h).value * pgfl_eval(bm, h).value));
    }
  }
  const auto a = zoo::model_a();
  const double gap = bmf_eval(a, Region::whole(a.space())) - bmf_eval(a, Region({{{0.0}, {0.5}}})) -
                     bmf_eval(a, Region({{{0.5}, {1.0}}}));
  b.at_most("pgfl(h) vs pgfm(h mu) (relative)", cons, 1e-12);
  b.at_most("superposition pgfl product law", prod, 1e-10);
  b.at_most("max |G[eta]| / (K e^|eta|)", growth, 1.0);
  b.at_most("imaginary residual for real inputs", imag, 1e-10);
  b.at_least("belief-mass non-additivity margin", std::abs(gap), 0.01);
  return std::move(b).finish(ctx.config);
}

inline CheckResult inv_derivatives(const Context& ctx) {
  Builder b("INV-DV", "Derivatives: multilinearity, chain rule by composition, limit-method trends");
  Rng rng = ctx.rng("INV-DV");
  double multi = 0.0, chain = 0.0;
  bool trends = true;
  for (const auto& e : ctx.models) {
    const auto& s = e.model.space();
    for (int t = 0; t < 10; ++t) {
      const int m = 1 + t % std::min(2, e.model.n_max());
      std::vector<ComplexMeasure> dirs;
      for (int k = 0; k < m; ++k) dirs.push_back(random_measure(rng, s));
      const auto eta = random_measure(rng, s);
      const Complex base = directional_derivative(e.model, dirs, eta);
      const Complex c = sampling::random_complex(rng, 2.0);
      const auto extra = random_measure(rng, s);
      auto scaled = dirs, summed = dirs, other = dirs;
      scaled[0] = dirs[0].scaled(c);
      summed[0] = dirs[0] + extra;
      other[0] = extra;
      const Complex add = base + directional_derivative(e.model, other, eta);
      multi = std::max({multi,
                        std::abs(directional_derivative(e.model, scaled, eta) - c * base) / std::max(1.0, std::abs(c * base)),
                        std::abs(directional_derivative(e.model, summed, eta) - add) / std::max(1.0, std::abs(add))});
    }
    const auto& model = e.model;
    for (int power : {2, 3}) {
      const Functional phi = [&model, power](const ComplexMeasure& x) { return std::pow(pgfm_eval(model, x), power); };
      const auto eta = random_measure(rng, s, MeasureShape::mixed, true);
      const std::vector<Point> ys{random_point(rng, s)};
      const Complex g = pgfm_eval(model, eta), dg = pgfm_derivative(model, ys, eta).value;
      const auto fd = nested_fd_derivative(phi, std::vector<ComplexMeasure>{dirac(s, ys[0])}, eta);
      chain = std::max(chain, relative_error(fd.value, static_cast<double>(power) * std::pow(g, power - 1) * dg));
    }
    const Point x = centre_site(s);
    const auto half = ScalarField::constant(0.5);
    const auto target = oracle_derivative(model, std::vector<Point>{x}, half);
    for (auto kind : {TestSequenceKind::gaussian, TestSequenceKind::indicator}) {
      LimitSequenceOptions lo;
      lo.kind = kind;
      trends = trends && strictly_decreasing(errors_against(limit_sequence_derivative(model, x, half, lo).table, target), 1e-13);
    }
    const std::vector<Point> site{centre_site(s, 0.45)};
    trends = trends && strictly_decreasing(
                           errors_against(set_derivative_bmf(model, site, Region::empty()).table, model.janossy(site)),
                           1e-13);
  }
  b.at_most("multilinearity (relative)", multi, 1e-12);
  b.at_most("chain rule via nested_fd of t^2, t^3 (relative)", chain, 1e-8);
  b.holds("limit-method errors strictly decrease along schedules", trends);
  return std::move(b).finish(ctx.config);
}

struct CheckSpec {
  std::string id;
  std::function<CheckResult(const Context&)> run;
};

inline std::vector<CheckSpec> registry() {
  return {{"AC01", ac01}, {"AC02", ac02}, {"AC03", ac03}, {"AC04", ac04}, {"AC05", ac05},
          {"AC06", ac06}, {"AC07", ac07}, {"AC08", ac08}, {"AC09", ac09}, {"AC10", ac10},
          {"AC11", ac11}, {"INV-DV", inv_derivatives}, {"INV-FN", inv_functionals},
          {"INV-RFS", inv_rfs_model}, {"INV-SM", inv_space_measure}};
}

inline int thread_count(const SuiteConfig& c) {
  if (c.threads > 0) return c.threads;
  if (const char* env = std::getenv("PGFM_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

inline bool selected(const SuiteConfig& c, const std::string& id) {
  return c.only.empty() || std::find(c.only.begin(), c.only.end(), id) != c.only.end();
}

}  // namespace detail

inline json check_to_json(const CheckResult& c) {
  json metrics = json::array();
  for (const auto& m : c.metrics)
    metrics.push_back({{"name", m.name},
                       {"value", std::isfinite(m.value) ? json(m.value) : json(std::to_string(m.value))},
                       {"relation", m.relation == Relation::at_most ? "<=" : ">="},
                       {"tolerance", m.tolerance},
                       {"passed", m.passed}});
  return json{{"id", c.id}, {"title", c.title}, {"passed", c.passed}, {"metrics", metrics}, {"details", c.details}};
}

/// Secular threshold, belief-mass gap and |h| > 1 witness. Expected
/// failures: reported, never counted as suite failures.
inline json failure_mode_demos(const SuiteConfig& = {}) {
  const auto a = zoo::model_a();
  const auto scan = detail::secular_scan(a);
  const double whole = bmf_eval(a, Region::whole(a.space()));
  const double left = bmf_eval(a, Region({{{0.0}, {0.5}}}));
  const double right = bmf_eval(a, Region({{{0.5}, {1.0}}}));
  const auto h = ScalarField::constant(0.9) + ScalarField::gaussian({0.5}, 0.05, 0.2);
  const auto v = pgfl_eval(a, h);
  return json{{"expected_failures", true},
              {"secular",
               {{"model", "A"},
                {"h", 0.5},
                {"eps", 0.1},
                {"family", "gaussian"},
                {"analytic_lambda_star", scan.analytic},
                {"detected_threshold", scan.transition},
                {"largest_flagged_lambda", scan.largest_flagged},
                {"smallest_clear_lambda", scan.smallest_clear},
                {"witness", scan.witness},
                {"scan", scan.flags}}},
              {"bmf_non_additivity",
               {{"model", "A"},
                {"beta_whole", whole},
                {"beta_0_0.5", left},
                {"beta_0.5_1", right},
                {"gap", whole - left - right}}},
              {"gamma_exit",
               {{"field", io::field_to_json(h)}, {"sup_abs", v.sup_abs}, {"witness", v.witness},
                {"pgfl_value", io::complex_to_json(v.value)}}}};
}

inline json report_to_json(const SuiteReport& r) {
  json checks = json::array();
  int passed = 0;
  for (const auto& c : r.checks) {
    checks.push_back(check_to_json(c));
    passed += c.passed;
  }
  return json{{"suite", "pgfm verification"},
              {"seed", r.seed},
              {"models", r.models},
              {"summary", {{"total", r.checks.size()}, {"passed", passed}, {"failed", r.checks.size() - passed}}},
              {"checks", checks},
              {"demos", r.demos}};
}

inline std::string junit_xml(const SuiteReport& r) {
  auto esc = [](const std::string& s) {
    std::string o;
    for (char ch : s) {
      switch (ch) {
        case '&': o += "&amp;"; break;
        case '<': o += "&lt;"; break;
        case '>': o += "&gt;"; break;
        case '"': o += "&quot;"; break;
        default: o += ch;
      }
    }
    return o;
  };
  int failures = 0;
  for (const auto& c : r.checks) failures += !c.passed;
  std::string x = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  x += "<testsuite name=\"pgfm verification\" tests=\"" + std::to_string(r.checks.size()) + "\" failures=\"" +
       std::to_string(failures) + "\">\n";
  for (const auto& c : r.checks) {
    x += "  <testcase classname=\"pgfm\" name=\"" + esc(c.id + " " + c.title) + "\"";
    if (c.passed) {
      x += "/>\n";
      continue;
    }
    x += ">\n    <failure message=\"";
    for (const auto& m : c.metrics)
      if (!m.passed) x += esc(m.name) + "; ";
    x += "\"/>\n  </testcase>\n";
  }
  return x + "</testsuite>\n";
}

namespace detail {

inline std::vector<CheckResult> run_checks(const SuiteConfig& config, const Context& ctx,
                                           std::map<std::string, double>& seconds) {
  std::vector<CheckSpec> todo;
  for (auto& spec : registry())
    if (selected(config, spec.id)) todo.push_back(spec);
  std::vector<CheckResult> results(todo.size());
  std::vector<double> secs(todo.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i; (i = next++) < todo.size();) {
      const auto t0 = std::chrono::steady_clock::now();
      try {
        results[i] = todo[i].run(ctx);
      } catch (const std::exception& e) {
        Builder b(todo[i].id, "raised an exception");
        b.details() = {{"exception", e.what()}};
        b.holds("completed without exception", false);
        results[i] = std::move(b).finish(config);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        failure = std::current_exception();
      }
      secs[i] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
  };
  const int n = std::min<int>(thread_count(config), static_cast<int>(todo.size()));
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  for (std::size_t i = 0; i < todo.size(); ++i) seconds[todo[i].id] = secs[i];
  std::sort(results.begin(), results.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  return results;
}

}  // namespace detail

/// Runs every selected check; with `determinism_pass` the checks run twice
/// and AC12 compares the two serializations byte for byte.
inline SuiteReport run_suite(const SuiteConfig& config) {
  const auto t0 = std::chrono::steady_clock::now();
  detail::Context ctx{config, {}};
  if (config.models.empty()) {
    ctx.models = zoo::all();
  } else {
    for (const auto& id : config.models) {
      bool found = false;
      for (auto& e : zoo::all())
        if (e.id == id) ctx.models.push_back(e), found = true;
      if (!found) throw std::invalid_argument("unknown model id '" + id + "'");
    }
  }
  SuiteReport rep;
  rep.seed = config.seed;
  for (const auto& e : ctx.models) rep.models.push_back(e.id);
  rep.checks = detail::run_checks(config, ctx, rep.seconds);
  rep.demos = failure_mode_demos(config);
  const double first_pass = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  if (config.determinism_pass && detail::selected(config, "AC12")) {
    std::map<std::string, double> again;
    SuiteReport second = rep;
    second.checks = detail::run_checks(config, ctx, again);
    second.demos = failure_mode_demos(config);
    const bool same = report_to_json(rep).dump() == report_to_json(second).dump();
    detail::Builder b("AC12", "Determinism and runtime");
    b.details() = {{"passes", 2}};
    b.holds("second pass is byte-identical", same);
    b.holds("one full pass finishes within the runtime limit", first_pass < config.runtime_limit_seconds);
    rep.checks.push_back(std::move(b).finish(config));
    std::sort(rep.checks.begin(), rep.checks.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  }
  rep.total_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

}  // namespace pgfm::verification
