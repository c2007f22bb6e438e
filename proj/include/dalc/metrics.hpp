#pragma once

#include <span>

namespace dalc {

// Observed values at or below this floor make the relative error undefined;
// they are a data error, not something to skip silently.
inline constexpr double kObservedFloor = 1e-6;

// Mean of |observed - predicted| / observed over all points.
// Throws DomainError on length mismatch or empty input, DataError naming
// the index when an observed value sits below the floor.
double compute_aare(std::span<const double> observed,
                    std::span<const double> predicted);

}  // namespace dalc
