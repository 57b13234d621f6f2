#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "stemsim/encoder/encoder.h"

namespace stemsim::trainer {

struct AdamHyper {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Moments are sized on the first step.
struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;
};

// Bias-corrected Adam. Throws dimension_mismatch on shape disagreement and
// invalid_argument on non-finite gradients, leaving params and state untouched.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               const AdamHyper& hyper);

void optimizer_step(encoder::EncoderParams& params, const encoder::ParamGrads& grads,
                    AdamState& state, const AdamHyper& hyper);

}  // namespace stemsim::trainer
