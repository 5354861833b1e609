#pragma once

#include <cstdint>
#include <random>

namespace curvematch {

// Uniform draws built from raw mt19937_64 output.  The standard library's
// distributions are implementation-defined, which would break byte-level
// reproducibility of seeded runs.
struct Rng {
  std::mt19937_64 eng;
  explicit Rng(std::uint64_t seed) : eng(seed) {}

  double unit() { return (eng() >> 11) * 0x1.0p-53; }  // [0, 1)
  double uniform(double a, double b) { return a + (b - a) * unit(); }
  int index(int n) { return (int)(eng() % (std::uint64_t)n); }
};

}  // namespace curvematch
