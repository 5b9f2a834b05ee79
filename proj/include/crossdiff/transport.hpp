#pragma once

#include <functional>
#include <span>

namespace crossdiff {

/// Minimum-cost transport between supplies and demands of equal total,
/// solved exactly by successive shortest paths with potentials. cost(i, j)
/// is the unit cost from supply i to demand j and must be nonnegative.
double min_cost_transport(std::span<const double> supply, std::span<const double> demand,
                          const std::function<double(std::size_t, std::size_t)>& cost);

}  // namespace crossdiff
