#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rescnn/tensor.hpp"

namespace rescnn {

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t step = 0;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
};

// One bias-corrected Adam update over `params`, using each tensor's grad
// slot (a missing grad counts as zero). Moment buffers are created on the
// first call and must keep matching the parameter sizes afterwards.
void adam_step(std::span<Tensor* const> params, AdamState& state, double learning_rate);

}  // namespace rescnn
