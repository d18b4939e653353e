#pragma once

#include <cstdint>
#include <optional>
#include <vector>

namespace atos {

// One row of a convergence trace. Counters are cumulative.
struct TraceRecord {
  std::uint64_t iter = 0;
  std::int64_t wall_ns = 0;
  double step_size = 0.0;
  std::uint64_t n_grad = 0;
  std::uint64_t n_func = 0;
  std::uint64_t n_prox = 0;
  double primal = 0.0;
  double residual = 0.0;
  std::optional<double> subopt;
};

using Trace = std::vector<TraceRecord>;

}  // namespace atos
