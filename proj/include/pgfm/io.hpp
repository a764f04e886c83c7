#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "pgfm/derivatives.hpp"
#include "pgfm/functionals.hpp"
#include "pgfm/model.hpp"
#include "pgfm/zoo.hpp"

namespace pgfm::io {

using json = nlohmann::ordered_json;

namespace detail {

inline std::string at(const std::string& path, const std::string& key) { return path + "." + key; }
inline std::string at(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

inline const json& field(const json& j, const std::string& path, const std::string& key) {
  if (!j.is_object()) throw SchemaError(path, "expected object");
  auto it = j.find(key);
  if (it == j.end()) throw SchemaError(at(path, key), "missing required field");
  return *it;
}

inline const json* optional_field(const json& j, const std::string& key) {
  auto it = j.find(key);
  return it == j.end() || it->is_null() ? nullptr : &*it;
}

inline double number(const json& j, const std::string& path) {
  if (!j.is_number()) throw SchemaError(path, "expected number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw SchemaError(path, "expected finite number");
  return v;
}

inline double positive(const json& j, const std::string& path) {
  const double v = number(j, path);
  if (!(v > 0.0)) throw SchemaError(path, "expected positive number");
  return v;
}

inline int integer(const json& j, const std::string& path, int lo = 0) {
  if (!j.is_number_integer()) throw SchemaError(path, "expected integer");
  const auto v = j.get<long long>();
  if (v < lo || v > 1'000'000'000) throw SchemaError(path, "integer out of range");
  return static_cast<int>(v);
}

inline std::string text(const json& j, const std::string& path) {
  if (!j.is_string()) throw SchemaError(path, "expected string");
  return j.get<std::string>();
}

inline const json& array(const json& j, const std::string& path) {
  if (!j.is_array()) throw SchemaError(path, "expected array");
  return j;
}

inline std::vector<double> numbers(const json& j, const std::string& path) {
  std::vector<double> v;
  const auto& a = array(j, path);
  for (std::size_t i = 0; i < a.size(); ++i) v.push_back(number(a[i], at(path, i)));
  return v;
}

}  // namespace detail

inline json complex_to_json(Complex c) { return json{{"re", c.real()}, {"im", c.imag()}}; }

/// A number, or {re, im} with either part optional.
inline Complex parse_complex(const json& j, const std::string& path) {
  if (j.is_number()) return detail::number(j, path);
  if (!j.is_object()) throw SchemaError(path, "expected number or {re, im}");
  for (const auto& [k, v] : j.items())
    if (k != "re" && k != "im") throw SchemaError(detail::at(path, k), "unknown key");
  double re = 0.0, im = 0.0;
  if (const auto* r = detail::optional_field(j, "re")) re = detail::number(*r, detail::at(path, "re"));
  if (const auto* i = detail::optional_field(j, "im")) im = detail::number(*i, detail::at(path, "im"));
  return {re, im};
}

inline Point parse_point(const json& j, const std::string& path, int dim) {
  if (j.is_number() && dim == 1) return {detail::number(j, path)};
  auto p = detail::numbers(j, path);
  if (static_cast<int>(p.size()) != dim)
    throw SchemaError(path, "expected " + std::to_string(dim) + " coordinates, got " + std::to_string(p.size()));
  return p;
}

inline json point_to_json(const Point& p) { return json(p); }

// ------------------------------------------------------------------ space

inline BaseSpace parse_space(const json& j, const std::string& path = "space") {
  using namespace detail;
  const int dim = integer(field(j, path, "dim"), at(path, "dim"), 1);
  const auto lower = parse_point(field(j, path, "lower"), at(path, "lower"), dim);
  const auto upper = parse_point(field(j, path, "upper"), at(path, "upper"), dim);
  for (int i = 0; i < dim; ++i)
    if (!(upper[i] > lower[i])) throw SchemaError(at(at(path, "upper"), i), "upper must exceed lower");
  QuadratureSpec spec;
  if (const auto* q = optional_field(j, "quadrature")) {
    const auto qp = at(path, "quadrature");
    if (!q->is_object()) throw SchemaError(qp, "expected object");
    if (const auto* k = optional_field(*q, "kind")) {
      const auto kind = text(*k, at(qp, "kind"));
      if (kind == "gauss_legendre")
        spec.kind = QuadratureKind::gauss_legendre;
      else if (kind == "monte_carlo")
        spec.kind = QuadratureKind::monte_carlo;
      else
        throw SchemaError(at(qp, "kind"), "expected \"gauss_legendre\" or \"monte_carlo\"");
    }
    if (const auto* o = optional_field(*q, "order")) spec.order = integer(*o, at(qp, "order"), 1);
    if (const auto* s = optional_field(*q, "seed")) spec.seed = static_cast<std::uint64_t>(integer(*s, at(qp, "seed")));
  }
  return BaseSpace(lower, upper, spec);
}

inline json space_to_json(const BaseSpace& s) {
  return json{{"dim", s.dim()},
              {"lower", s.lower()},
              {"upper", s.upper()},
              {"quadrature",
               {{"kind", s.spec().kind == QuadratureKind::gauss_legendre ? "gauss_legendre" : "monte_carlo"},
                {"order", s.spec().order},
                {"seed", s.spec().seed}}}};
}

// ------------------------------------------------------------------ fields

/// Field expression over points of dimension `dim`. A bare number is a
/// constant field.
inline ScalarField parse_field(const json& j, int dim, const std::string& path, const BaseSpace* space = nullptr) {
  using namespace detail;
  if (j.is_number()) return ScalarField::constant(number(j, path));
  const auto kind = text(field(j, path, "kind"), at(path, "kind"));
  auto amplitude = [&](const char* key, Complex dflt) {
    const auto* a = optional_field(j, key);
    return a ? parse_complex(*a, at(path, key)) : dflt;
  };
  auto children = [&](const char* key) {
    std::vector<ScalarField> out;
    const auto& arr = array(field(j, path, key), at(path, key));
    if (arr.empty()) throw SchemaError(at(path, key), "expected at least one term");
    for (std::size_t i = 0; i < arr.size(); ++i) out.push_back(parse_field(arr[i], dim, at(at(path, key), i), space));
    return out;
  };
  if (kind == "constant") return ScalarField::constant(parse_complex(field(j, path, "value"), at(path, "value")));
  if (kind == "gaussian")
    return ScalarField::gaussian(parse_point(field(j, path, "center"), at(path, "center"), dim),
                                 positive(field(j, path, "width"), at(path, "width")), amplitude("amplitude", 1.0));
  if (kind == "indicator") {
    const auto lo = parse_point(field(j, path, "lower"), at(path, "lower"), dim);
    const auto hi = parse_point(field(j, path, "upper"), at(path, "upper"), dim);
    for (int i = 0; i < dim; ++i)
      if (!(hi[i] >= lo[i])) throw SchemaError(at(at(path, "upper"), i), "upper must not be below lower");
    return ScalarField::indicator(lo, hi, amplitude("amplitude", 1.0));
  }
  if (kind == "polynomial") {
    std::vector<field_node::Monomial> terms;
    const auto tp = at(path, "terms");
    const auto& arr = array(field(j, path, "terms"), tp);
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const auto ip = at(tp, i);
      field_node::Monomial m;
      m.coeff = parse_complex(field(arr[i], ip, "coeff"), at(ip, "coeff"));
      const auto& ex = array(field(arr[i], ip, "exponents"), at(ip, "exponents"));
      if (static_cast<int>(ex.size()) > dim) throw SchemaError(at(ip, "exponents"), "more exponents than coordinates");
      for (std::size_t k = 0; k < ex.size(); ++k) m.exponents.push_back(integer(ex[k], at(at(ip, "exponents"), k)));
      terms.push_back(std::move(m));
    }
    return ScalarField::polynomial(std::move(terms));
  }
  if (kind == "sum") return ScalarField::sum(children("terms"));
  if (kind == "product") return ScalarField::product(children("factors"));
  if (kind == "scale")
    return parse_field(field(j, path, "field"), dim, at(path, "field"), space)
        .scaled(parse_complex(field(j, path, "factor"), at(path, "factor")));
  if (kind == "truncated_gaussian_pdf") {
    if (!space) throw SchemaError(path, "truncated_gaussian_pdf needs the base space");
    return truncated_gaussian_pdf(*space, parse_point(field(j, path, "center"), at(path, "center"), dim),
                                  positive(field(j, path, "width"), at(path, "width")));
  }
  if (kind == "region_indicator") {
    std::vector<std::pair<Point, Point>> boxes;
    const auto bp = at(path, "boxes");
    const auto& arr = array(field(j, path, "boxes"), bp);
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const auto ip = at(bp, i);
      boxes.emplace_back(parse_point(field(arr[i], ip, "lower"), at(ip, "lower"), dim),
                         parse_point(field(arr[i], ip, "upper"), at(ip, "upper"), dim));
    }
    return ScalarField::region_indicator(std::move(boxes));
  }
  throw SchemaError(at(path, "kind"), "unknown field kind \"" + kind + "\"");
}

inline json field_to_json(const ScalarField& f) {
  return std::visit(
      [](const auto& n) -> json {
        using T = std::decay_t<decltype(n)>;
        namespace fn = field_node;
        if constexpr (std::is_same_v<T, fn::Constant>) return {{"kind", "constant"}, {"value", complex_to_json(n.value)}};
        if constexpr (std::is_same_v<T, fn::Gaussian>)
          return {{"kind", "gaussian"},
                  {"center", n.center},
                  {"width", n.width},
                  {"amplitude", complex_to_json(n.amplitude)}};
        if constexpr (std::is_same_v<T, fn::Indicator>)
          return {{"kind", "indicator"},
                  {"lower", n.lower},
                  {"upper", n.upper},
                  {"amplitude", complex_to_json(n.amplitude)}};
        if constexpr (std::is_same_v<T, fn::RegionIndicator>) {
          json boxes = json::array();
          for (const auto& [lo, hi] : n.boxes) boxes.push_back({{"lower", lo}, {"upper", hi}});
          return {{"kind", "region_indicator"}, {"boxes", boxes}};
        }
        if constexpr (std::is_same_v<T, fn::Polynomial>) {
          json terms = json::array();
          for (const auto& m : n.terms) terms.push_back({{"coeff", complex_to_json(m.coeff)}, {"exponents", m.exponents}});
          return {{"kind", "polynomial"}, {"terms", terms}};
        }
        if constexpr (std::is_same_v<T, fn::Sum>) {
          json terms = json::array();
          for (const auto& t : n.terms) terms.push_back(field_to_json(t));
          return {{"kind", "sum"}, {"terms", terms}};
        }
        if constexpr (std::is_same_v<T, fn::Product>) {
          json fs = json::array();
          for (const auto& t : n.factors) fs.push_back(field_to_json(t));
          return {{"kind", "product"}, {"factors", fs}};
        }
        if constexpr (std::is_same_v<T, fn::Scale>)
          return {{"kind", "scale"}, {"factor", complex_to_json(n.factor)}, {"field", field_to_json(*n.field)}};
      },
      f.node());
}

// ------------------------------------------------------------------ measures

inline ComplexMeasure parse_measure(const json& j, const BaseSpace& space, const std::string& path = "measure") {
  using namespace detail;
  if (!j.is_object()) throw SchemaError(path, "expected object");
  for (const auto& [k, v] : j.items())
    if (k != "atoms" && k != "density" && k != "kind") throw SchemaError(at(path, k), "unknown key");
  std::vector<Atom> atoms;
  if (const auto* a = optional_field(j, "atoms")) {
    const auto ap = at(path, "atoms");
    const auto& arr = array(*a, ap);
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const auto ip = at(ap, i);
      Atom atom;
      atom.x = parse_point(field(arr[i], ip, "x"), at(ip, "x"), space.dim());
      if (!space.contains(atom.x)) throw SchemaError(at(ip, "x"), "atom lies outside the base space");
      double re = 0.0, im = 0.0;
      if (const auto* r = optional_field(arr[i], "re")) re = number(*r, at(ip, "re"));
      if (const auto* m = optional_field(arr[i], "im")) im = number(*m, at(ip, "im"));
      atom.weight = {re, im};
      atoms.push_back(std::move(atom));
    }
  }
  std::optional<ScalarField> density;
  if (const auto* d = optional_field(j, "density")) density = parse_field(*d, space.dim(), at(path, "density"), &space);
  return {std::move(atoms), std::move(density)};
}

inline json measure_to_json(const ComplexMeasure& m) {
  json atoms = json::array();
  for (const auto& a : m.atoms()) atoms.push_back({{"x", a.x}, {"re", a.weight.real()}, {"im", a.weight.imag()}});
  json j{{"atoms", atoms}};
  if (m.density()) j["density"] = field_to_json(*m.density());
  return j;
}

// ------------------------------------------------------------------ regions

/// {"boxes": [{"lower": [...], "upper": [...]}, ...]} or the bare array.
inline Region parse_region(const json& j, const BaseSpace& space, const std::string& path = "region") {
  using namespace detail;
  const json& arr = j.is_object() ? field(j, path, "boxes") : j;
  const auto bp = j.is_object() ? at(path, "boxes") : path;
  array(arr, bp);
  std::vector<std::pair<Point, Point>> boxes;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const auto ip = at(bp, i);
    boxes.emplace_back(parse_point(field(arr[i], ip, "lower"), at(ip, "lower"), space.dim()),
                       parse_point(field(arr[i], ip, "upper"), at(ip, "upper"), space.dim()));
  }
  Region r(std::move(boxes));
  try {
    r.validate(space);
  } catch (const std::exception& e) {
    throw SchemaError(path, e.what());
  }
  return r;
}

inline json region_to_json(const Region& r) {
  json boxes = json::array();
  for (const auto& [lo, hi] : r.boxes()) boxes.push_back({{"lower", lo}, {"upper", hi}});
  return json{{"boxes", boxes}};
}

// ------------------------------------------------------------------ models

namespace detail {

inline FiniteSetDensity parse_family(const json& j, const BaseSpace& space, const json* n_max_json,
                                     const std::string& path) {
  const auto kind = text(field(j, path, "kind"), at(path, "kind"));
  auto spatial = [&] { return parse_field(field(j, path, "spatial"), space.dim(), at(path, "spatial"), &space); };
  std::optional<int> n_max;
  if (n_max_json) n_max = integer(*n_max_json, "model.n_max");
  try {
    if (kind == "iid_cluster") {
      if (const auto* pmf = optional_field(j, "pmf")) {
        auto p = numbers(*pmf, at(path, "pmf"));
        if (n_max && *n_max + 1 != static_cast<int>(p.size()))
          throw SchemaError(at(path, "pmf"), "length must be n_max + 1");
        return FiniteSetDensity::iid_cluster(space, std::move(p), spatial());
      }
      if (const auto* rate = optional_field(j, "poisson_rate"))
        return FiniteSetDensity::truncated_poisson(space, number(*rate, at(path, "poisson_rate")), n_max.value_or(4),
                                                   spatial());
      throw SchemaError(path, "iid_cluster needs \"pmf\" or \"poisson_rate\"");
    }
    if (kind == "bernoulli") {
      if (n_max && *n_max != 1) throw SchemaError("model.n_max", "bernoulli models have n_max = 1");
      return FiniteSetDensity::bernoulli(space, number(field(j, path, "existence"), at(path, "existence")), spatial());
    }
    if (kind == "tabulated") {
      const double j0 = number(field(j, path, "j0"), at(path, "j0"));
      const auto& arr = array(field(j, path, "jn"), at(path, "jn"));
      if (n_max && *n_max != static_cast<int>(arr.size())) throw SchemaError(at(path, "jn"), "length must be n_max");
      bool sym = true;
      if (const auto* s = optional_field(j, "symmetrize")) {
        if (!s->is_boolean()) throw SchemaError(at(path, "symmetrize"), "expected boolean");
        sym = s->get<bool>();
      }
      std::vector<TupleFunction> jn;
      for (std::size_t i = 0; i < arr.size(); ++i) {
        const int n = static_cast<int>(i) + 1;
        const auto f = parse_field(arr[i], n * space.dim(), at(at(path, "jn"), i));
        TupleFunction g = [f](PointTuple xs) {
          Point flat;
          for (const auto& x : xs) flat.insert(flat.end(), x.begin(), x.end());
          return f(flat).real();
        };
        jn.push_back(sym ? symmetrize(g) : g);
      }
      return FiniteSetDensity::tabulated(space, j0, std::move(jn));
    }
    if (kind == "superposition") {
      const auto& arr = array(field(j, path, "components"), at(path, "components"));
      if (arr.size() < 2) throw SchemaError(at(path, "components"), "expected at least two components");
      auto acc = parse_family(arr[0], space, nullptr, at(at(path, "components"), 0));
      for (std::size_t i = 1; i < arr.size(); ++i)
        acc = superpose(acc, parse_family(arr[i], space, nullptr, at(at(path, "components"), i)));
      if (n_max && *n_max != acc.n_max()) throw SchemaError("model.n_max", "must equal the sum of component n_max");
      return acc;
    }
  } catch (const std::invalid_argument& e) {
    throw SchemaError(path, e.what());
  }
  throw SchemaError(at(path, "kind"), "unknown family kind \"" + kind + "\"");
}

}  // namespace detail

inline FiniteSetDensity parse_model(const json& j, const std::string& path = "model") {
  using namespace detail;
  const auto space = parse_space(field(j, path, "space"), at(path, "space"));
  return parse_family(field(j, path, "family"), space, optional_field(j, "n_max"), at(path, "family"));
}

inline json family_to_json(const FiniteSetDensity& m) {
  return std::visit(
      [&](const auto& f) -> json {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, family::IidCluster>)
          return {{"kind", "iid_cluster"}, {"pmf", f.pmf}, {"spatial", field_to_json(f.spatial)}};
        if constexpr (std::is_same_v<T, family::Bernoulli>)
          return {{"kind", "bernoulli"}, {"existence", f.existence}, {"spatial", field_to_json(f.spatial)}};
        if constexpr (std::is_same_v<T, family::Tabulated>)
          throw std::invalid_argument("tabulated callables cannot be serialized");
        if constexpr (std::is_same_v<T, family::Superposition>)
          return {{"kind", "superposition"}, {"components", json::array({family_to_json(*f.a), family_to_json(*f.b)})}};
      },
      m.family());
}

/// Serializable for every family except tabulated callables.
inline json model_to_json(const FiniteSetDensity& m) {
  return json{{"space", space_to_json(m.space())}, {"n_max", m.n_max()}, {"family", family_to_json(m)}};
}

// ------------------------------------------------------------------ files

inline json read_json_file(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw SchemaError(file, "cannot open file");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError(file, std::string("invalid JSON: ") + e.what());
  }
}

/// "zoo:ID" or a path to a model JSON file.
inline FiniteSetDensity load_model(const std::string& ref) {
  if (ref.rfind("zoo:", 0) == 0) return zoo::by_id(ref.substr(4));
  return parse_model(read_json_file(ref));
}

inline void write_text_file(const std::string& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + file);
  out << text;
  if (!out) throw std::runtime_error("write failed for " + file);
}

// ------------------------------------------------------------------ reports

inline json table_to_json(const ConvergenceTable& t) {
  json rows = json::array();
  for (const auto& r : t) rows.push_back({{"parameter", r.parameter}, {"value", complex_to_json(r.value)}});
  return rows;
}

inline ConvergenceTable parse_table(const json& j, const std::string& path) {
  using namespace detail;
  ConvergenceTable t;
  const auto& arr = array(j, path);
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const auto ip = at(path, i);
    t.push_back({number(field(arr[i], ip, "parameter"), at(ip, "parameter")),
                 parse_complex(field(arr[i], ip, "value"), at(ip, "value"))});
  }
  return t;
}

inline json report_to_json(const DerivativeReport& r) {
  json j{{"method", r.method}, {"value", complex_to_json(r.value)}, {"table", table_to_json(r.table)}};
  j["extrapolated"] = r.extrapolated ? complex_to_json(*r.extrapolated) : json(nullptr);
  j["commutation_residual"] = r.commutation_residual ? json(*r.commutation_residual) : json(nullptr);
  j["truncated"] = r.truncated;
  j["divergent"] = r.divergent;
  json v = json::array();
  for (const auto& d : r.violations) v.push_back({{"eps", d.eps}, {"lambda", d.lambda}, {"sup", d.sup}, {"witness", d.witness}});
  j["violations"] = v;
  j["warnings"] = r.warnings;
  return j;
}

inline DerivativeReport parse_report(const json& j, const std::string& path = "report") {
  using namespace detail;
  DerivativeReport r;
  r.method = text(field(j, path, "method"), at(path, "method"));
  r.value = parse_complex(field(j, path, "value"), at(path, "value"));
  r.table = parse_table(field(j, path, "table"), at(path, "table"));
  if (const auto* e = optional_field(j, "extrapolated")) r.extrapolated = parse_complex(*e, at(path, "extrapolated"));
  if (const auto* c = optional_field(j, "commutation_residual"))
    r.commutation_residual = number(*c, at(path, "commutation_residual"));
  auto flag = [&](const char* key) {
    const auto& b = field(j, path, key);
    if (!b.is_boolean()) throw SchemaError(at(path, key), "expected boolean");
    return b.get<bool>();
  };
  r.truncated = flag("truncated");
  r.divergent = flag("divergent");
  const auto vp = at(path, "violations");
  const auto& vs = array(field(j, path, "violations"), vp);
  for (std::size_t i = 0; i < vs.size(); ++i) {
    const auto ip = at(vp, i);
    r.violations.push_back({number(field(vs[i], ip, "eps"), at(ip, "eps")),
                            number(field(vs[i], ip, "lambda"), at(ip, "lambda")),
                            number(field(vs[i], ip, "sup"), at(ip, "sup")),
                            numbers(field(vs[i], ip, "witness"), at(ip, "witness"))});
  }
  const auto& ws = array(field(j, path, "warnings"), at(path, "warnings"));
  for (std::size_t i = 0; i < ws.size(); ++i) r.warnings.push_back(text(ws[i], at(at(path, "warnings"), i)));
  return r;
}

/// {value: {re, im}, diagnostics: {...}}
inline json value_output(Complex v, json diagnostics) {
  return json{{"value", complex_to_json(v)}, {"diagnostics", std::move(diagnostics)}};
}

inline Complex parse_value_output(const json& j, const std::string& path = "output") {
  const auto& d = detail::field(j, path, "diagnostics");
  if (!d.is_object()) throw SchemaError(detail::at(path, "diagnostics"), "expected object");
  return parse_complex(detail::field(j, path, "value"), detail::at(path, "value"));
}

}  // namespace pgfm::io
