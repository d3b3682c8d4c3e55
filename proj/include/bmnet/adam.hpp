#pragma once

#include <cstddef>
#include <vector>

#include "bmnet/tape.hpp"

namespace bmnet::numerics {

struct AdamOptions {
  double base_lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::vector<std::size_t> milestones{1000, 1500};  // epochs, 0-based
  double decay = 0.1;
};

// base_lr * decay^(number of milestones <= epoch)
double scheduled_lr(const AdamOptions& options, std::size_t epoch);

struct AdamState {
  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;
  std::size_t step = 0;
};

AdamState make_adam_state(const ParamStore& params);

// One bias-corrected Adam update at learning rate `lr`.
void adam_step(ParamStore& params, const GradStore& grads, AdamState& state,
               const AdamOptions& options, double lr);

}  // namespace bmnet::numerics
