#include "atos/harness/random.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace atos {

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::normal() {
  if (spare_) {
    const double v = *spare_;
    spare_.reset();
    return v;
  }
  double u1 = uniform();
  while (u1 == 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  return r * std::cos(theta);
}

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("Rng::below: empty range");
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t v;
  do v = engine_(); while (v >= limit);
  return v % n;
}

Vector Rng::normal_vector(Index n) {
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = normal();
  return v;
}

Matrix gen_autoregressive_design(Index n, Index p, double corr, std::uint64_t seed) {
  if (n < 1 || p < 1) throw std::invalid_argument("design dimensions must be positive");
  if (!(corr >= 0.0 && corr < 1.0)) throw std::invalid_argument("corr must lie in [0, 1)");
  Rng rng(seed);
  Matrix A(n, p);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < p; ++j) {
      const double z = rng.normal();
      A(i, j) = i == 0 ? z : z + corr * A(i - 1, j);
    }
  }
  return A;
}

}  // namespace atos
