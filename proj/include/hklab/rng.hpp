#pragma once

#include <cstdint>
#include <random>

namespace hklab {

// Bit-exact across standard libraries (std distributions are not).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed), seed_(seed) {}

  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::uint64_t below(std::uint64_t n) { return eng_() % n; }
  std::uint64_t seed() const { return seed_; }

 private:
  std::mt19937_64 eng_;
  std::uint64_t seed_;
};

}  // namespace hklab
