#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace dean {

// Seeded RNG with hand-rolled draws. std::uniform_int_distribution and
// std::shuffle produce implementation-defined sequences, which would break
// cross-platform reproducibility of splits, exports, and bootstrap
// intervals.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // n must be > 0. Modulo bias is negligible for the sample sizes used here.
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(next() % n); }

  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = below(i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace dean
