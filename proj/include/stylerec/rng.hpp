#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace stylerec {

// Deterministic random source. mt19937_64 output is pinned by the standard;
// the double/index conversions below avoid std::*_distribution, whose
// algorithms vary between standard libraries. Streams are therefore
// bit-reproducible across platforms for a fixed seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1).
  double next_double() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform in [0, n). n must be > 0.
  std::size_t next_index(std::size_t n) {
    std::size_t i = static_cast<std::size_t>(next_double() * static_cast<double>(n));
    return i >= n ? n - 1 : i;
  }

  // Standard normal via Box-Muller (always consumes two draws).
  double next_gaussian() {
    double u1 = next_double(), u2 = next_double();
    while (u1 <= 0.0) u1 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i)
      std::swap(v[i - 1], v[next_index(i)]);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace stylerec
