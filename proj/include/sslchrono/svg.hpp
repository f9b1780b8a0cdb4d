#pragma once

#include <string>

#include "sslchrono/eval.hpp"

// Dependency-free SVG line chart of the adaptation sweep: log-scaled x axis
// with one tick per adaptation size, AUC on y, one polyline per objective.
// The random-backbone baseline, when present, is drawn as a dashed path.

namespace sslchrono {

std::string render_sweep_chart(const SweepResult& result);

void write_sweep_chart(const std::string& path, const SweepResult& result);

}  // namespace sslchrono
