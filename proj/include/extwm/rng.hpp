#pragma once

// Seeded generator for ensembles. std::mt19937_64 is fully specified by the
// standard, but the std distributions are not, so doubles are formed by hand
// from the top 53 bits: u = (x >> 11) * 2^-53, which lies in [0, 1).

#include <cstdint>
#include <random>

namespace extwm {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace extwm
