#pragma once

#include <string>

#include "loadcast/error.hpp"

namespace loadcast {

/// Linear decay from `start` at epoch 0 to `end` at epoch epochs-1.
struct LearningRateSchedule {
  double start = 0.015;
  double end = 0.001;
  std::size_t epochs = 300;

  double operator()(std::size_t epoch) const {
    if (epoch >= epochs)
      throw Error("lr schedule: epoch " + std::to_string(epoch) + " outside [0, " +
                  std::to_string(epochs) + ")");
    if (epochs == 1)
      return start;
    const double frac = static_cast<double>(epoch) / static_cast<double>(epochs - 1);
    return start + (end - start) * frac;
  }
};

inline double lr_schedule(std::size_t epoch) { return LearningRateSchedule{}(epoch); }

} // namespace loadcast
