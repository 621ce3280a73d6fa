#pragma once

#include <string>

#include "marlns/harness.hpp"

namespace marlns {

// Two-panel SVG: the learning curve (eval metric vs env steps) on top and
// the per-iteration sampling/updating time breakdown below.
void write_run_svg(const RunMetrics& metrics, const std::string& path);

}  // namespace marlns
