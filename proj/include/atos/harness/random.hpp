#pragma once

#include <cstdint>
#include <optional>
#include <random>

#include "atos/core.hpp"

namespace atos {

// Seeded stream built on std::mt19937_64. Uniforms take the top 53 bits;
// Gaussians use the Box-Muller transform so streams do not depend on the
// standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  double uniform();  // [0, 1)
  double normal();
  std::uint64_t below(std::uint64_t n);  // uniform in [0, n)
  Vector normal_vector(Index n);

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

// Rows a_1 = z_1, a_i = z_i + corr * a_{i-1} with standard Gaussian z_i.
Matrix gen_autoregressive_design(Index n, Index p, double corr, std::uint64_t seed);

}  // namespace atos
