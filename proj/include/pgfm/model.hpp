#pragma once

#include <bit>
#include <functional>
#include <memory>
#include <numeric>
#include <string>
#include <variant>
#include <vector>

#include "pgfm/core.hpp"
#include "pgfm/field.hpp"
#include "pgfm/measure.hpp"
#include "pgfm/rng.hpp"

namespace pgfm {

/// Budget and seed for product integrals over X^n. When the number of terms
/// of an exact enumeration would exceed `budget`, a seeded Monte Carlo
/// estimate with `budget` samples is used instead.
struct IntegrationOptions {
  std::size_t budget = 4'000'000;
  std::uint64_t seed = 0x5EEDULL;
};

/// Callable on X^n.
using TupleFunction = std::function<double(PointTuple)>;

/// Average of g over all n! orderings of its arguments.
inline TupleFunction symmetrize(TupleFunction g) {
  return [g = std::move(g)](PointTuple xs) {
    std::vector<std::size_t> perm(xs.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<Point> buf(xs.size());
    double s = 0.0;
    std::size_t count = 0;
    do {
      for (std::size_t i = 0; i < perm.size(); ++i) buf[i] = xs[perm[i]];
      s += g(buf);
      ++count;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return s / static_cast<double>(count);
  };
}

/// Closed subset of the base space given as a union of boxes with pairwise
/// disjoint interiors.
class Region {
 public:
  Region() = default;
  explicit Region(std::vector<std::pair<Point, Point>> boxes) : boxes_(std::move(boxes)) {}

  static Region empty() { return {}; }
  static Region whole(const BaseSpace& s) { return Region({{s.lower(), s.upper()}}); }

  const std::vector<std::pair<Point, Point>>& boxes() const { return boxes_; }
  bool is_empty() const { return boxes_.empty(); }

  void validate(const BaseSpace& space) const {
    for (std::size_t b = 0; b < boxes_.size(); ++b) {
      const auto& [lo, hi] = boxes_[b];
      if (static_cast<int>(lo.size()) != space.dim() || lo.size() != hi.size())
        throw DomainError("region box " + std::to_string(b) + ": dimension mismatch");
      for (int i = 0; i < space.dim(); ++i)
        if (!(hi[i] >= lo[i])) throw DomainError("region box " + std::to_string(b) + ": upper below lower", lo);
      space.require_contains(lo, "region box " + std::to_string(b));
      space.require_contains(hi, "region box " + std::to_string(b));
      for (std::size_t c = 0; c < b; ++c)
        if (overlap_volume(boxes_[b], boxes_[c]) > 0.0)
          throw DomainError("region boxes " + std::to_string(c) + " and " + std::to_string(b) + " overlap", lo);
    }
  }

  bool contains(const Point& x) const {
    for (const auto& [lo, hi] : boxes_) {
      bool in = true;
      for (std::size_t i = 0; i < lo.size(); ++i) in = in && x[i] >= lo[i] && x[i] <= hi[i];
      if (in) return true;
    }
    return false;
  }

  double volume() const {
    double v = 0.0;
    for (const auto& [lo, hi] : boxes_) {
      double b = 1.0;
      for (std::size_t i = 0; i < lo.size(); ++i) b *= hi[i] - lo[i];
      v += b;
    }
    return v;
  }

  Region united(const Region& o) const {
    auto b = boxes_;
    b.insert(b.end(), o.boxes_.begin(), o.boxes_.end());
    return Region(std::move(b));
  }

  ScalarField indicator() const { return ScalarField::region_indicator(boxes_); }

  static double overlap_volume(const std::pair<Point, Point>& a, const std::pair<Point, Point>& b) {
    double v = 1.0;
    for (std::size_t i = 0; i < a.first.size(); ++i) {
      const double w = std::min(a.second[i], b.second[i]) - std::max(a.first[i], b.first[i]);
      if (w <= 0.0) return 0.0;
      v *= w;
    }
    return v;
  }

 private:
  std::vector<std::pair<Point, Point>> boxes_;
};

class FiniteSetDensity;

namespace family {

/// j_n(x_1..x_n) = n! rho(n) prod f(x_i)
struct IidCluster {
  std::vector<double> pmf;
  ScalarField spatial;
  double truncated_mass = 0.0;
};

/// j_0 = 1 - r, j_1(x) = r f(x)
struct Bernoulli {
  double existence;
  ScalarField spatial;
};

struct Tabulated {
  double j0;
  std::vector<TupleFunction> jn;  // jn[k] is j_{k+1}
};

struct Superposition {
  std::shared_ptr<const FiniteSetDensity> a, b;
};

}  // namespace family

struct KBound {
  double value = 0.0;
  int grid_nodes_per_axis = 0;
  /// "sampled" when every cardinality was maximized over the grid, "convolution-bound"
  /// when a superposition fell back to the subset-sum upper bound.
  std::string method = "sampled";
};

/// Finite point process described by its truncated Janossy family
/// {j_0, ..., j_{n_max}}; j_n = 0 for n > n_max.
class FiniteSetDensity {
 public:
  using Family = std::variant<family::IidCluster, family::Bernoulli, family::Tabulated, family::Superposition>;

  static FiniteSetDensity iid_cluster(const BaseSpace& space, std::vector<double> pmf, ScalarField spatial) {
    if (pmf.empty()) throw std::invalid_argument("iid_cluster: empty cardinality pmf");
    double total = 0.0;
    for (std::size_t n = 0; n < pmf.size(); ++n) {
      if (!(pmf[n] >= 0.0)) throw std::invalid_argument("iid_cluster: pmf[" + std::to_string(n) + "] is negative");
      total += pmf[n];
    }
    if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("iid_cluster: pmf does not sum to 1");
    const int n_max = static_cast<int>(pmf.size()) - 1;
    return FiniteSetDensity(space, n_max, family::IidCluster{std::move(pmf), std::move(spatial), 0.0});
  }

  /// Poisson cardinality law truncated at n_max and renormalized; the
  /// discarded tail mass is kept as metadata.
  static FiniteSetDensity truncated_poisson(const BaseSpace& space, double rate, int n_max, ScalarField spatial) {
    if (!(rate >= 0.0) || n_max < 0) throw std::invalid_argument("truncated_poisson: invalid rate or n_max");
    std::vector<double> pmf(n_max + 1);
    double term = std::exp(-rate), kept = 0.0;
    for (int n = 0; n <= n_max; ++n) {
      pmf[n] = term;
      kept += term;
      term *= rate / (n + 1);
    }
    for (auto& p : pmf) p /= kept;
    return FiniteSetDensity(space, n_max, family::IidCluster{std::move(pmf), std::move(spatial), 1.0 - kept});
  }

  static FiniteSetDensity bernoulli(const BaseSpace& space, double existence, ScalarField spatial) {
    if (!(existence >= 0.0 && existence <= 1.0)) throw std::invalid_argument("bernoulli: r must lie in [0, 1]");
    return FiniteSetDensity(space, 1, family::Bernoulli{existence, std::move(spatial)});
  }

  /// Explicit callables; jn[k] is j_{k+1}. Symmetry is checked by validation,
  /// not enforced; wrap with symmetrize() if needed.
  static FiniteSetDensity tabulated(const BaseSpace& space, double j0, std::vector<TupleFunction> jn) {
    const int n_max = static_cast<int>(jn.size());
    return FiniteSetDensity(space, n_max, family::Tabulated{j0, std::move(jn)});
  }

  const BaseSpace& space() const { return *space_; }
  int n_max() const { return n_max_; }
  const Family& family() const { return *family_; }

  std::string kind() const {
    return std::visit(
        [](const auto& f) -> std::string {
          using T = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<T, family::IidCluster>) return "iid_cluster";
          if constexpr (std::is_same_v<T, family::Bernoulli>) return "bernoulli";
          if constexpr (std::is_same_v<T, family::Tabulated>) return "tabulated";
          if constexpr (std::is_same_v<T, family::Superposition>) return "superposition";
        },
        *family_);
  }

  double truncated_mass() const {
    if (const auto* f = std::get_if<family::IidCluster>(family_.get())) return f->truncated_mass;
    if (const auto* f = std::get_if<family::Superposition>(family_.get()))
      return 1.0 - (1.0 - f->a->truncated_mass()) * (1.0 - f->b->truncated_mass());
    return 0.0;
  }

  /// j_n at the tuple; zero above n_max.
  double janossy(PointTuple xs) const {
    for (const auto& x : xs) space_->require_contains(x, "janossy");
    return janossy_unchecked(xs);
  }

  double janossy_unchecked(PointTuple xs) const {
    const int n = static_cast<int>(xs.size());
    if (n > n_max_) return 0.0;
    return std::visit([&](const auto& f) { return eval(f, xs); }, *family_);
  }

  /// n-fold iterated integral of j_n against slots[0] x ... x slots[n-1].
  Complex iterated_integral(std::span<const DiscreteMeasure* const> slots, const IntegrationOptions& opt = {}) const {
    if (static_cast<int>(slots.size()) > n_max_) return 0.0;
    return std::visit([&](const auto& f) { return integral(f, slots, opt); }, *family_);
  }

  /// Largest j_n over grid^n (or an upper bound for superpositions beyond budget).
  double sup_janossy(int n, const std::vector<Point>& grid, std::size_t budget, bool* exact = nullptr) const {
    if (exact) *exact = true;
    if (n > n_max_) return 0.0;
    return std::visit([&](const auto& f) { return sup(f, n, grid, budget, exact); }, *family_);
  }

  /// Candidate maximizers contributed by the spatial components.
  void collect_candidates(std::vector<Point>& out) const {
    std::visit(
        [&](const auto& f) {
          using T = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<T, family::IidCluster> || std::is_same_v<T, family::Bernoulli>)
            f.spatial.collect_candidates(*space_, out);
          if constexpr (std::is_same_v<T, family::Superposition>) {
            f.a->collect_candidates(out);
            f.b->collect_candidates(out);
          }
        },
        *family_);
  }

  friend FiniteSetDensity superpose(const FiniteSetDensity& a, const FiniteSetDensity& b);

 private:
  FiniteSetDensity(const BaseSpace& space, int n_max, Family fam)
      : space_(std::make_shared<const BaseSpace>(space)),
        n_max_(n_max),
        family_(std::make_shared<const Family>(std::move(fam))) {}

  double eval(const family::IidCluster& f, PointTuple xs) const {
    const int n = static_cast<int>(xs.size());
    double v = factorial(n) * f.pmf[n];
    for (const auto& x : xs) v *= f.spatial(x).real();
    return v;
  }
  double eval(const family::Bernoulli& f, PointTuple xs) const {
    return xs.empty() ? 1.0 - f.existence : f.existence * f.spatial(xs[0]).real();
  }
  double eval(const family::Tabulated& f, PointTuple xs) const {
    return xs.empty() ? f.j0 : f.jn[xs.size() - 1](xs);
  }
  double eval(const family::Superposition& f, PointTuple xs) const {
    const std::size_t n = xs.size();
    std::vector<Point> part(n), rest(n);
    double s = 0.0;
    for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
      const int k = std::popcount(mask);
      if (k > f.a->n_max() || static_cast<int>(n) - k > f.b->n_max()) continue;
      std::size_t kp = 0, kr = 0;
      for (std::size_t i = 0; i < n; ++i) ((mask >> i) & 1U ? part[kp++] : rest[kr++]) = xs[i];
      s += f.a->janossy_unchecked(PointTuple(part.data(), kp)) * f.b->janossy_unchecked(PointTuple(rest.data(), kr));
    }
    return s;
  }

  static Complex integral(const family::IidCluster& f, std::span<const DiscreteMeasure* const> slots,
                          const IntegrationOptions&) {
    const int n = static_cast<int>(slots.size());
    Complex v = factorial(n) * f.pmf[n];
    for (const auto* s : slots) v *= s->integrate(f.spatial);
    return v;
  }
  static Complex integral(const family::Bernoulli& f, std::span<const DiscreteMeasure* const> slots,
                          const IntegrationOptions&) {
    if (slots.empty()) return 1.0 - f.existence;
    return f.existence * slots[0]->integrate(f.spatial);
  }
  Complex integral(const family::Tabulated&, std::span<const DiscreteMeasure* const> slots,
                   const IntegrationOptions& opt) const {
    const std::size_t n = slots.size();
    if (n == 0) return janossy_unchecked({});
    double terms = 1.0;
    for (const auto* s : slots) terms *= static_cast<double>(s->size());
    if (terms == 0.0) return 0.0;
    std::vector<Point> tuple(n);
    if (terms <= static_cast<double>(opt.budget)) {
      std::vector<std::size_t> idx(n, 0);
      Complex total = 0.0;
      while (true) {
        Complex w = 1.0;
        for (std::size_t i = 0; i < n; ++i) {
          tuple[i] = slots[i]->points[idx[i]];
          w *= slots[i]->weights[idx[i]];
        }
        total += w * janossy_unchecked(tuple);
        std::size_t k = 0;
        while (k < n && ++idx[k] == slots[k]->size()) idx[k++] = 0;
        if (k == n) break;
      }
      return total;
    }
    Rng rng = Rng(opt.seed).split(n);
    Complex total = 0.0;
    for (std::size_t s = 0; s < opt.budget; ++s) {
      Complex w = 1.0;
      for (std::size_t i = 0; i < n; ++i) {
        const auto k = rng.index(slots[i]->size());
        tuple[i] = slots[i]->points[k];
        w *= slots[i]->weights[k];
      }
      total += w * janossy_unchecked(tuple);
    }
    return total * (terms / static_cast<double>(opt.budget));
  }
  static Complex integral(const family::Superposition& f, std::span<const DiscreteMeasure* const> slots,
                          const IntegrationOptions& opt) {
    const std::size_t n = slots.size();
    std::vector<const DiscreteMeasure*> part, rest;
    Complex s = 0.0;
    for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
      const int k = std::popcount(mask);
      if (k > f.a->n_max() || static_cast<int>(n) - k > f.b->n_max()) continue;
      part.clear();
      rest.clear();
      for (std::size_t i = 0; i < n; ++i) ((mask >> i) & 1U ? part : rest).push_back(slots[i]);
      s += f.a->iterated_integral(part, opt) * f.b->iterated_integral(rest, opt);
    }
    return s;
  }

  static double max_spatial(const ScalarField& f, const std::vector<Point>& grid) {
    double m = 0.0;
    for (const auto& p : grid) m = std::max(m, f(p).real());
    return m;
  }
  static double sup(const family::IidCluster& f, int n, const std::vector<Point>& grid, std::size_t, bool*) {
    return factorial(n) * f.pmf[n] * std::pow(max_spatial(f.spatial, grid), n);
  }
  static double sup(const family::Bernoulli& f, int n, const std::vector<Point>& grid, std::size_t, bool*) {
    return n == 0 ? 1.0 - f.existence : f.existence * max_spatial(f.spatial, grid);
  }
  double brute_sup(int n, const std::vector<Point>& grid) const {
    if (n == 0) return janossy_unchecked({});
    std::vector<std::size_t> idx(n, 0);
    std::vector<Point> tuple(n);
    double best = 0.0;
    while (true) {
      for (int i = 0; i < n; ++i) tuple[i] = grid[idx[i]];
      best = std::max(best, janossy_unchecked(tuple));
      // Nondecreasing index tuples: symmetric densities need no other orderings.
      int k = n - 1;
      while (k >= 0 && idx[k] + 1 == grid.size()) --k;
      if (k < 0) break;
      ++idx[k];
      for (int j = k + 1; j < n; ++j) idx[j] = idx[k];
    }
    return best;
  }
  static double tuple_count(std::size_t g, int n) { return binomial(static_cast<int>(g) + n - 1, n); }
  double sup(const family::Tabulated&, int n, const std::vector<Point>& grid, std::size_t budget, bool*) const {
    if (tuple_count(grid.size(), n) <= static_cast<double>(budget)) return brute_sup(n, grid);
    std::size_t stride = 2;
    while (tuple_count(grid.size() / stride, n) > static_cast<double>(budget)) ++stride;
    std::vector<Point> coarse;
    for (std::size_t i = 0; i < grid.size(); i += stride) coarse.push_back(grid[i]);
    return brute_sup(n, coarse);
  }
  double sup(const family::Superposition& f, int n, const std::vector<Point>& grid, std::size_t budget,
             bool* exact) const {
    if (tuple_count(grid.size(), n) * std::pow(2.0, n) <= static_cast<double>(budget)) return brute_sup(n, grid);
    if (exact) *exact = false;
    double s = 0.0;
    for (int k = 0; k <= n; ++k)
      s += binomial(n, k) * f.a->sup_janossy(k, grid, budget) * f.b->sup_janossy(n - k, grid, budget);
    return s;
  }

  std::shared_ptr<const BaseSpace> space_;
  int n_max_;
  std::shared_ptr<const Family> family_;
};

/// Union of two independent processes: j_n(X) = sum over 2-colourings of X of
/// j^a(part) j^b(complement).
inline FiniteSetDensity superpose(const FiniteSetDensity& a, const FiniteSetDensity& b) {
  if (!(a.space() == b.space())) throw std::invalid_argument("superpose: base spaces differ");
  return FiniteSetDensity(a.space(), a.n_max() + b.n_max(),
                          family::Superposition{std::make_shared<const FiniteSetDensity>(a),
                                                std::make_shared<const FiniteSetDensity>(b)});
}

/// Sampled uniform bound K = max_n sup j_n over the base rule refined 4x per
/// axis, the base nodes, and the spatial components' candidate maximizers.
inline KBound bound_K(const FiniteSetDensity& model, std::size_t budget = 2'000'000) {
  const auto& space = model.space();
  const auto fine = space.refined_rule(4);
  std::vector<Point> grid = fine.nodes;
  grid.insert(grid.end(), space.rule().nodes.begin(), space.rule().nodes.end());
  model.collect_candidates(grid);
  KBound k;
  k.grid_nodes_per_axis = static_cast<int>(std::lround(std::pow(static_cast<double>(fine.size()), 1.0 / space.dim())));
  for (int n = 0; n <= model.n_max(); ++n) {
    bool exact = true;
    k.value = std::max(k.value, model.sup_janossy(n, grid, budget, &exact));
    if (!exact) k.method = "convolution-bound";
  }
  return k;
}

}  // namespace pgfm
