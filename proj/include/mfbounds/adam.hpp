#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace mfb {

struct AdamState {
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::int64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  explicit AdamState(std::size_t size = 0) : first_moment(size, 0.0), second_moment(size, 0.0) {}
};

/// One bias-corrected Adam update in place.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state, double lr);

/// Step-decay schedule: `base` until `decay_start`, then `base * decay` (0-based iteration).
struct LearningRateSchedule {
  double base = 1e-3;
  double decay = 0.1;
  std::int64_t decay_start = 20'000;

  double at(std::int64_t iteration) const { return iteration < decay_start ? base : base * decay; }
};

}  // namespace mfb
