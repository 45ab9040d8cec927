#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace tenexp {

// xoshiro256** seeded through splitmix64. Normal deviates use the polar
// Box-Muller method so streams are identical across platforms and standard
// library implementations.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0);

  std::uint64_t operator()();
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  double uniform();  // [0, 1)
  std::uint64_t uniform_index(std::uint64_t n);  // [0, n)
  double normal(double mean = 0.0, double stddev = 1.0);

 private:
  std::array<std::uint64_t, 4> s_{};
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace tenexp
