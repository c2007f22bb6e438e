#include "dalc/metrics.hpp"

#include <cmath>
#include <string>

#include "dalc/errors.hpp"

namespace dalc {

double compute_aare(std::span<const double> observed,
                    std::span<const double> predicted) {
  if (observed.size() != predicted.size())
    throw DomainError("aare: observed and predicted lengths differ (" +
                      std::to_string(observed.size()) + " vs " +
                      std::to_string(predicted.size()) + ")");
  if (observed.empty()) throw DomainError("aare: empty input");
  double sum = 0.0;
  for (size_t i = 0; i < observed.size(); ++i) {
    if (!(observed[i] > kObservedFloor))
      throw DataError("aare: observed value at index " + std::to_string(i) +
                      " is at or below the " + std::to_string(kObservedFloor) +
                      " floor");
    sum += std::abs(observed[i] - predicted[i]) / observed[i];
  }
  return sum / static_cast<double>(observed.size());
}

}  // namespace dalc
