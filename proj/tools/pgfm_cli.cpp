#include <CLI11.hpp>

#include <charconv>
#include <cstdio>
#include <iostream>
#include <sstream>

#include "pgfm/pgfm.hpp"

using namespace pgfm;
using io::json;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

double parse_number(const std::string& token, const std::string& flag) {
  std::string t = token;
  t.erase(0, t.find_first_not_of(" \t"));
  t.erase(t.find_last_not_of(" \t") + 1);
  double v = 0.0;
  const auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc{} || end != t.data() + t.size() || !std::isfinite(v))
    throw UsageError(flag + ": '" + token + "' is not a finite number");
  return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, sep);) out.push_back(item);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

std::vector<double> parse_list(const std::string& s, const std::string& flag, bool positive) {
  std::vector<double> v;
  for (const auto& t : split(s, ',')) {
    v.push_back(parse_number(t, flag));
    if (positive && !(v.back() > 0.0)) throw UsageError(flag + ": values must be positive");
  }
  if (v.empty()) throw UsageError(flag + ": empty list");
  return v;
}

/// "x1,x2" in one dimension; "a,b;c,d" with one site per ';' otherwise.
std::vector<Point> parse_sites(const std::string& s, const BaseSpace& space) {
  std::vector<Point> sites;
  if (space.dim() == 1 && s.find(';') == std::string::npos) {
    for (double x : parse_list(s, "--sites", false)) sites.push_back({x});
  } else {
    for (const auto& site : split(s, ';')) {
      auto p = parse_list(site, "--sites", false);
      if (static_cast<int>(p.size()) != space.dim())
        throw UsageError("--sites: site '" + site + "' needs " + std::to_string(space.dim()) + " coordinates");
      sites.push_back(std::move(p));
    }
  }
  if (sites.empty()) throw UsageError("--sites: no sites given");
  for (const auto& p : sites) space.require_contains(p, "--sites");
  return sites;
}

struct Base {
  std::string label;
  ComplexMeasure eta;
  std::optional<ScalarField> h;
};

bool looks_like_field(const json& j) {
  return j.is_number() || (j.is_object() && j.contains("kind") && j["kind"] != "measure");
}

Base parse_base(const std::string& arg, const BaseSpace& space) {
  if (arg == "zero") return {"zero", ComplexMeasure::zero(), ScalarField::constant(0.0)};
  if (arg == "reference") return {"reference", ComplexMeasure::reference(), ScalarField::constant(1.0)};
  const auto j = io::read_json_file(arg);
  if (looks_like_field(j)) {
    auto h = io::parse_field(j, space.dim(), "field", &space);
    return {arg, ComplexMeasure::with_density(h), h};
  }
  auto eta = io::parse_measure(j, space, "measure");
  std::optional<ScalarField> h;
  if (eta.atoms().empty()) h = eta.density() ? *eta.density() : ScalarField::constant(0.0);
  return {arg, std::move(eta), std::move(h)};
}

json load_json_argument(const std::string& arg) {
  const auto first = arg.find_first_not_of(" \t");
  if (first != std::string::npos && (arg[first] == '{' || arg[first] == '[')) {
    try {
      return json::parse(arg);
    } catch (const json::parse_error& e) {
      throw SchemaError("<inline>", std::string("invalid JSON: ") + e.what());
    }
  }
  return io::read_json_file(arg);
}

void emit(const json& j, const std::string& out) {
  if (out.empty())
    std::cout << j.dump(2) << '\n';
  else
    io::write_text_file(out, j.dump(2) + "\n");
}

std::string complex_text(Complex c) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%.15g%+.15gi", c.real(), c.imag());
  return buf;
}

std::string csv_tables(const std::vector<DerivativeReport>& reports) {
  std::string s = "method,parameter,re,im\n";
  char buf[160];
  for (const auto& r : reports)
    for (const auto& row : r.table) {
      std::snprintf(buf, sizeof buf, "%s,%.17g,%.17g,%.17g\n", r.method.c_str(), row.parameter, row.value.real(),
                    row.value.imag());
      s += buf;
    }
  return s;
}

json sites_json(const std::vector<Point>& sites) {
  json a = json::array();
  for (const auto& p : sites) a.push_back(p);
  return a;
}

struct DeriveFlags {
  std::string model = "zoo:A";
  std::string sites;
  std::string at = "zero";
  std::string method = "pgfm";
  std::string methods = "oracle,pgfm,nested_fd";
  std::string lambdas, eps, radii, region;
  std::string family = "gaussian";
  bool extrapolate = true;
  std::string out, csv;
};

const std::vector<std::string> kMethods{"oracle", "pgfm", "nested_fd", "limit_sequence", "secular", "set_derivative"};

struct DeriveInputs {
  FiniteSetDensity model;
  std::vector<Point> sites;
  Base base;
  std::optional<std::vector<double>> lambdas, eps, radii;
  TestSequenceKind family;
  Region region;
};

DeriveInputs prepare(const DeriveFlags& f, const std::vector<std::string>& methods) {
  for (const auto& m : methods)
    if (std::find(kMethods.begin(), kMethods.end(), m) == kMethods.end())
      throw UsageError("--method: unknown method '" + m + "'");
  if (f.sites.empty()) throw UsageError("--sites is required");
  std::optional<std::vector<double>> lambdas, eps, radii;
  if (!f.lambdas.empty()) lambdas = parse_list(f.lambdas, "--lambda-schedule", true);
  if (!f.eps.empty()) eps = parse_list(f.eps, "--eps", true);
  if (!f.radii.empty()) radii = parse_list(f.radii, "--radii", true);
  TestSequenceKind family;
  try {
    family = parse_test_sequence_kind(f.family);
  } catch (const std::exception&) {
    throw UsageError("--family: expected gaussian or indicator");
  }
  auto model = io::load_model(f.model);
  auto sites = parse_sites(f.sites, model.space());
  auto base = parse_base(f.at, model.space());
  Region region;
  if (!f.region.empty()) region = io::parse_region(load_json_argument(f.region), model.space(), "region");
  return {std::move(model), std::move(sites), std::move(base), lambdas, eps, radii, family, std::move(region)};
}

DerivativeReport run_method(const std::string& method, const DeriveInputs& in, bool extrapolate) {
  const auto& space = in.model.space();
  auto need_field = [&] {
    if (!in.base.h) throw UsageError("--method " + method + " needs --at zero, reference or a field without atoms");
    return *in.base.h;
  };
  auto need_single_site = [&] {
    if (in.sites.size() != 1) throw UsageError("--method " + method + " takes exactly one site");
    return in.sites.front();
  };
  if (method == "pgfm") {
    auto r = pgfm_derivative(in.model, in.sites, in.base.eta);
    return r;
  }
  if (method == "oracle") {
    DerivativeReport r;
    r.method = "oracle";
    r.value = oracle_derivative(in.model, in.sites, in.base.eta);
    r.warnings = detail::coincidence_warnings(in.sites);
    return r;
  }
  if (method == "nested_fd") {
    NestedFdOptions opt;
    if (in.eps) opt.eps = *in.eps;
    opt.extrapolate = extrapolate;
    std::vector<ComplexMeasure> dirs;
    for (const auto& y : in.sites) dirs.push_back(dirac(space, y));
    return nested_fd_derivative(in.model, dirs, in.base.eta, opt);
  }
  if (method == "limit_sequence") {
    LimitSequenceOptions opt;
    opt.kind = in.family;
    if (in.lambdas) opt.lambdas = *in.lambdas;
    if (in.eps) opt.eps = *in.eps;
    opt.extrapolate = extrapolate;
    return limit_sequence_derivative(in.model, need_single_site(), need_field(), opt);
  }
  if (method == "secular") {
    SecularOptions opt;
    opt.kind = in.family;
    if (in.lambdas) opt.lambdas = *in.lambdas;
    if (in.eps) {
      if (in.eps->size() != 1) throw UsageError("--eps: secular takes one step");
      opt.eps = in.eps->front();
    }
    return secular_derivative(in.model, need_single_site(), need_field(), opt);
  }
  SetDerivativeOptions opt;
  if (in.radii) opt.radii = *in.radii;
  opt.extrapolate = extrapolate;
  auto r = set_derivative_bmf(in.model, in.sites, in.region, opt);
  if (in.base.label != "zero") r.warnings.push_back("set_derivative ignores --at; evaluated at the region");
  return r;
}

void print_report(const DerivativeReport& r) {
  std::fprintf(stderr, "%-15s %s\n", r.method.c_str(), complex_text(r.value).c_str());
  for (const auto& w : r.warnings) std::fprintf(stderr, "  warning: %s\n", w.c_str());
  for (const auto& v : r.violations)
    std::fprintf(stderr, "  |h| > 1 at lambda %.6g, eps %+.3g (sup %.6g)\n", v.lambda, v.eps, v.sup);
}

int cmd_derive(const DeriveFlags& f) {
  const auto in = prepare(f, {f.method});
  const auto r = run_method(f.method, in, f.extrapolate);
  print_report(r);
  emit(json{{"model", f.model}, {"sites", sites_json(in.sites)}, {"at", in.base.label}, {"report", io::report_to_json(r)}},
       f.out);
  if (!f.csv.empty()) io::write_text_file(f.csv, csv_tables({r}));
  return 0;
}

int cmd_compare(const DeriveFlags& f) {
  const auto methods = split(f.methods, ',');
  if (methods.size() < 2) throw UsageError("--methods: need at least two methods");
  const auto in = prepare(f, methods);
  std::vector<DerivativeReport> reports;
  for (const auto& m : methods) reports.push_back(run_method(m, in, f.extrapolate));
  json per = json::object(), matrix = json::array();
  double worst = 0.0;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    per[methods[i]] = io::report_to_json(reports[i]);
    json row = json::array();
    for (std::size_t k = 0; k < reports.size(); ++k) {
      const double e = relative_error(reports[i].value, reports[k].value);
      row.push_back(e);
      if (i != k) worst = std::max(worst, e);
    }
    matrix.push_back(row);
    print_report(reports[i]);
  }
  std::fprintf(stderr, "max off-diagonal relative residual %.3e\n", worst);
  emit(json{{"model", f.model},
            {"sites", sites_json(in.sites)},
            {"at", in.base.label},
            {"methods", methods},
            {"reports", per},
            {"residuals", matrix},
            {"max_off_diagonal", worst}},
       f.out);
  if (!f.csv.empty()) io::write_text_file(f.csv, csv_tables(reports));
  return 0;
}

struct ModelFlags {
  std::string model = "zoo:A";
  std::string input;
  std::string at;
  std::string out;
};

int cmd_validate(const ModelFlags& f) {
  const auto model = io::load_model(f.input.empty() ? f.model : f.input);
  const auto rep = validate(model);
  std::fprintf(stderr, "normalization residual %.3e\nK = %.15g\n", rep.normalization_residual, rep.K.value);
  for (const auto& fail : rep.failures) std::fprintf(stderr, "FAIL %s\n", fail.c_str());
  emit(json{{"ok", rep.ok()},
            {"normalization", rep.normalization},
            {"normalization_residual", rep.normalization_residual},
            {"symmetry_residual", rep.symmetry_residual},
            {"min_janossy", rep.min_janossy},
            {"j0", rep.j0},
            {"spatial_imag_max", rep.spatial_imag_max},
            {"K", rep.K.value},
            {"K_method", rep.K.method},
            {"K_grid_nodes_per_axis", rep.K.grid_nodes_per_axis},
            {"truncated_mass", rep.truncated_mass},
            {"sampled", rep.sampled},
            {"failures", rep.failures},
            {"model", io::space_to_json(model.space())}},
       f.out);
  return rep.ok() ? 0 : 1;
}

int cmd_eval(const std::string& verb, const ModelFlags& f, bool enforce_gamma) {
  const auto model = io::load_model(f.model);
  const auto& space = model.space();
  if (f.input.empty()) throw UsageError(verb + ": input required");
  json out;
  if (verb == "eval-pgfl") {
    const auto h = f.input == "zero"        ? ScalarField::constant(0.0)
                   : f.input == "reference" ? ScalarField::constant(1.0)
                                            : io::parse_field(load_json_argument(f.input), space.dim(), "field", &space);
    const auto v = pgfl_eval(model, h, enforce_gamma);
    json diag{{"terms", v.terms}, {"sampled", v.sampled}, {"imag_residual", std::abs(v.value.imag())},
              {"gamma_violation", v.gamma_violation}, {"sup_abs", v.sup_abs}};
    if (v.gamma_violation) diag["witness"] = v.witness;
    out = io::value_output(v.value, diag);
  } else if (verb == "eval-pgfm") {
    const auto base = parse_base(f.input, space);
    const auto v = pgfm_eval(model, base.eta);
    out = io::value_output(v, {{"total_variation", total_variation(base.eta, space)},
                               {"imag_residual", std::abs(v.imag())}});
  } else {
    const auto S = io::parse_region(load_json_argument(f.input), space, "region");
    const double v = bmf_eval(model, S);
    out = io::value_output(v, {{"region_volume", S.volume()}});
  }
  std::fprintf(stderr, "%s\n", complex_text(io::parse_value_output(out)).c_str());
  emit(out, f.out);
  return 0;
}

struct FrechetFlags {
  std::string model = "zoo:A";
  std::string at = "zero";
  std::string direction;
  std::string norms;
  int order = 1;
  std::uint64_t seed = 1;
  int samples = 64;
  std::string out, csv;
};

int cmd_frechet(const FrechetFlags& f) {
  std::vector<double> norms;
  if (f.norms.empty())
    for (int k = 0; k < 13; ++k) norms.push_back(std::pow(10.0, -4.0 + 0.25 * k));
  else
    norms = parse_list(f.norms, "--norms", true);
  if (f.order < 1) throw UsageError("--order: must be >= 1");
  if (f.samples < 1) throw UsageError("--samples: must be >= 1");
  const auto model = io::load_model(f.model);
  const auto& space = model.space();
  const auto base = parse_base(f.at, space);
  ComplexMeasure dir;
  if (f.direction.empty()) {
    Rng rng = Rng(f.seed).split("direction");
    dir = sampling::random_measure_with_norm(rng, space, 1.0);
  } else {
    dir = io::parse_measure(load_json_argument(f.direction), space, "direction");
    const double n = total_variation(dir, space);
    if (!(n > 0.0)) throw DomainError("--direction: zero measure");
    dir = dir.scaled(1.0 / n);
  }
  std::vector<double> ratios;
  json rows = json::array();
  std::string csv = "norm,ratio\n";
  for (double n : norms) {
    const double r = frechet_residual_order(model, base.eta, dir.scaled(n), f.order, f.seed, f.samples).value;
    ratios.push_back(r);
    rows.push_back({{"norm", n}, {"ratio", r}});
    char buf[96];
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", n, r);
    csv += buf;
  }
  json slope = nullptr;
  if (norms.size() >= 2 && std::all_of(ratios.begin(), ratios.end(), [](double r) { return r > 0.0; }))
    slope = loglog_slope(norms, ratios);
  std::fprintf(stderr, "order %d, slope %s\n", f.order, slope.is_null() ? "n/a" : std::to_string(slope.get<double>()).c_str());
  emit(json{{"model", f.model}, {"at", base.label}, {"order", f.order}, {"direction", io::measure_to_json(dir)},
            {"table", rows}, {"slope", slope}},
       f.out);
  if (!f.csv.empty()) io::write_text_file(f.csv, csv);
  return 0;
}

struct SuiteFlags {
  std::string config, report, junit;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 0;
  std::vector<std::string> models;
};

int cmd_suite(const SuiteFlags& f) {
  verification::SuiteConfig config;
  if (!f.config.empty()) config = verification::parse_config(io::read_json_file(f.config));
  if (f.seed_set) config.seed = f.seed;
  if (f.threads > 0) config.threads = f.threads;
  if (!f.models.empty()) config.models = f.models;
  const auto rep = verification::run_suite(config);
  for (const auto& c : rep.checks) {
    const auto s = rep.seconds.find(c.id);
    std::fprintf(stderr, "%s %-7s %s", c.passed ? "PASS" : "FAIL", c.id.c_str(), c.title.c_str());
    if (s != rep.seconds.end()) std::fprintf(stderr, "  [%.2fs]", s->second);
    std::fprintf(stderr, "\n");
  }
  std::fprintf(stderr, "total %.2fs\n", rep.total_seconds);
  const auto j = verification::report_to_json(rep);
  const std::string out = !f.report.empty() ? f.report : config.output;
  emit(j, out);
  if (!f.junit.empty()) io::write_text_file(f.junit, verification::junit_xml(rep));
  return rep.all_passed() ? 0 : 1;
}

int cmd_demo(const std::string& out) {
  const auto d = verification::failure_mode_demos();
  std::fprintf(stderr, "secular: |h| > 1 below lambda %.5f (analytic %.5f)\n",
               d["secular"]["detected_threshold"].get<double>(), d["secular"]["analytic_lambda_star"].get<double>());
  std::fprintf(stderr, "belief mass gap on halves: %.6f\n", d["bmf_non_additivity"]["gap"].get<double>());
  std::fprintf(stderr, "gamma exit: sup |h| = %.6g at %.6g\n", d["gamma_exit"]["sup_abs"].get<double>(),
               d["gamma_exit"]["witness"][0].get<double>());
  emit(d, out);
  return 0;
}

std::string witness_text(const Point& w) {
  std::string s = "(";
  for (std::size_t i = 0; i < w.size(); ++i) s += (i ? ", " : "") + std::to_string(w[i]);
  return s + ")";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Probability generating functional measures: evaluation, derivatives, verification"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  ModelFlags mf;
  auto* validate_cmd = app.add_subcommand("validate", "Re-check model invariants, print normalization and K");
  validate_cmd->add_option("model_file", mf.input, "Model JSON file or zoo:ID");
  validate_cmd->add_option("--model", mf.model, "Model JSON file or zoo:ID");
  validate_cmd->add_option("--out", mf.out, "Write JSON here instead of stdout");

  std::map<std::string, CLI::App*> evals;
  bool enforce_gamma = false;
  for (const auto& [verb, what, flag] :
       std::vector<std::tuple<std::string, std::string, std::string>>{
           {"eval-pgfl", "PGFL G[h]", "--field"}, {"eval-pgfm", "PGFM G[eta]", "--at"}, {"eval-bmf", "Belief mass beta(S)", "--region"}}) {
    auto* c = app.add_subcommand(verb, what);
    c->add_option("--model", mf.model, "Model JSON file or zoo:ID");
    c->add_option(flag, mf.input, verb == "eval-pgfm" ? "zero | reference | measure.json | field.json"
                                                     : "JSON file or inline JSON")
        ->required();
    c->add_option("--out", mf.out, "Write JSON here instead of stdout");
    if (verb == "eval-pgfl") c->add_flag("--strict", enforce_gamma, "Reject fields with |h| > 1");
    evals[verb] = c;
  }

  DeriveFlags df;
  auto add_derive_flags = [&df](CLI::App* c) {
    c->add_option("--model", df.model, "Model JSON file or zoo:ID");
    c->add_option("--sites", df.sites, "Sites: x1,x2 in 1-d; a,b;c,d in higher dimension")->required();
    c->add_option("--at", df.at, "zero | reference | measure.json | field.json");
    c->add_option("--lambda-schedule", df.lambdas, "Comma-separated decreasing widths");
    c->add_option("--eps", df.eps, "Comma-separated steps");
    c->add_option("--radii", df.radii, "Comma-separated ball radii (set_derivative)");
    c->add_option("--extrapolate", df.extrapolate, "Richardson extrapolation (true|false)");
    c->add_option("--family", df.family, "Test-sequence family: gaussian | indicator");
    c->add_option("--region", df.region, "Region S for set_derivative (file or inline JSON)");
    c->add_option("--out", df.out, "Write JSON here instead of stdout");
    c->add_option("--csv", df.csv, "Write the schedule tables as CSV");
  };
  auto* derive_cmd = app.add_subcommand("derive", "One derivative by one method");
  add_derive_flags(derive_cmd);
  derive_cmd->add_option("--method", df.method, "oracle | pgfm | nested_fd | limit_sequence | secular | set_derivative");
  auto* compare_cmd = app.add_subcommand("compare", "Residual matrix between derivative methods");
  add_derive_flags(compare_cmd);
  compare_cmd->add_option("--methods", df.methods, "Comma-separated methods");

  FrechetFlags ff;
  auto* frechet_cmd = app.add_subcommand("frechet", "Frechet remainder ratios over a norm schedule");
  frechet_cmd->add_option("--model", ff.model, "Model JSON file or zoo:ID");
  frechet_cmd->add_option("--at", ff.at, "zero | reference | measure.json | field.json");
  frechet_cmd->add_option("--direction", ff.direction, "Direction measure (file or inline JSON); default random");
  frechet_cmd->add_option("--norms", ff.norms, "Comma-separated direction norms");
  frechet_cmd->add_option("--order", ff.order, "Derivative order m");
  frechet_cmd->add_option("--seed", ff.seed, "Seed for sampled directions");
  frechet_cmd->add_option("--samples", ff.samples, "Sampled tuples for order > 1");
  frechet_cmd->add_option("--out", ff.out, "Write JSON here instead of stdout");
  frechet_cmd->add_option("--csv", ff.csv, "Write the table as CSV");

  SuiteFlags sf;
  auto* suite_cmd = app.add_subcommand("suite", "Run the verification suite");
  suite_cmd->add_option("--config", sf.config, "Suite configuration JSON");
  suite_cmd->add_option("--report", sf.report, "Report JSON path (default stdout)");
  suite_cmd->add_option("--junit", sf.junit, "JUnit XML path");
  auto* seed_opt = suite_cmd->add_option("--seed", sf.seed, "Override the configured seed");
  suite_cmd->add_option("--threads", sf.threads, "Worker threads (default PGFM_THREADS or all cores)");
  suite_cmd->add_option("--models", sf.models, "Zoo model ids")->delimiter(',');

  std::string demo_out;
  auto* demo_cmd = app.add_subcommand("demo-failures", "Secular, belief-mass and |h| > 1 failure witnesses");
  demo_cmd->add_option("--out", demo_out, "Write JSON here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  sf.seed_set = seed_opt->count() > 0;

  try {
    if (*validate_cmd) return cmd_validate(mf);
    for (const auto& [verb, c] : evals)
      if (*c) return cmd_eval(verb, mf, enforce_gamma);
    if (*derive_cmd) return cmd_derive(df);
    if (*compare_cmd) return cmd_compare(df);
    if (*frechet_cmd) return cmd_frechet(ff);
    if (*suite_cmd) return cmd_suite(sf);
    if (*demo_cmd) return cmd_demo(demo_out);
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 2;
  } catch (const SchemaError& e) {
    std::fprintf(stderr, "schema error at %s\n", e.what());
    return 3;
  } catch (const DomainError& e) {
    std::fprintf(stderr, "domain error: %s", e.what());
    if (!e.witness().empty()) std::fprintf(stderr, " at %s", witness_text(e.witness()).c_str());
    std::fprintf(stderr, "\n");
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
