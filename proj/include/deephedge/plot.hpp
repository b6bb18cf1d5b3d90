#pragma once

#include <span>
#include <string>

#include "deephedge/evaluator.hpp"

namespace deephedge {

/// Bar chart with one <rect class="bar"> per histogram bin.
std::string histogram_svg(const Histogram& histogram, const std::string& title = "Hedging error");

/// Polyline of `values` against index. The raw values are also stored in the
/// path's data-values attribute so the figure can be checked numerically.
std::string line_svg(std::span<const double> values, const std::string& title);

}  // namespace deephedge
