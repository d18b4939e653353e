#pragma once

#include <string>

#include "atos/harness/bench.hpp"

namespace atos {

// Suboptimality against time (or iteration when wall times are absent) on a
// log-scaled y axis, one panel per problem and one polyline per solver.
std::string emit_svg_plot(const RunArtifact& run);

}  // namespace atos
