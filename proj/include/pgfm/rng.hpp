#pragma once

#include <cstdint>
#include <string_view>

namespace pgfm {

/// Splittable seeded generator (SplitMix64). Child streams are derived from
/// the parent seed and a name, so adding a new consumer never shifts the
/// values another consumer sees.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform on [0, 1), 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  std::uint64_t index(std::uint64_t n) { return n == 0 ? 0 : next() % n; }

  Rng split(std::string_view name) const {
    std::uint64_t h = 0xCBF29CE484222325ULL;  // FNV-1a
    for (char c : name) {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001B3ULL;
    }
    Rng mixer(state_ ^ h);
    return Rng(mixer.next());
  }

  Rng split(std::uint64_t k) const {
    Rng mixer(state_ + 0xD1B54A32D192ED03ULL * (k + 1));
    return Rng(mixer.next());
  }

 private:
  std::uint64_t state_;
};

}  // namespace pgfm
