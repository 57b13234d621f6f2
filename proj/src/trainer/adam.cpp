#include "stemsim/trainer/adam.h"

#include <cmath>

#include "stemsim/error.h"

namespace stemsim::trainer {

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               const AdamHyper& hyper) {
  if (params.size() != grads.size()) {
    throw Error(ErrorKind::dimension_mismatch, "optimizer: gradient size differs from parameters");
  }
  if (state.step > 0 && state.m.size() != params.size()) {
    throw Error(ErrorKind::dimension_mismatch, "optimizer: state size differs from parameters");
  }
  for (double g : grads) {
    if (!std::isfinite(g)) throw Error(ErrorKind::invalid_argument, "optimizer: non-finite gradient");
  }
  if (state.m.size() != params.size()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(hyper.beta1, t);
  const double c2 = 1.0 - std::pow(hyper.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = hyper.beta1 * state.m[i] + (1.0 - hyper.beta1) * grads[i];
    state.v[i] = hyper.beta2 * state.v[i] + (1.0 - hyper.beta2) * grads[i] * grads[i];
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    params[i] -= hyper.learning_rate * m_hat / (std::sqrt(v_hat) + hyper.eps);
  }
}

void optimizer_step(encoder::EncoderParams& params, const encoder::ParamGrads& grads,
                    AdamState& state, const AdamHyper& hyper) {
  if (!params.same_layout(grads)) {
    throw Error(ErrorKind::dimension_mismatch, "optimizer: gradient layout differs from parameters");
  }
  adam_step(params.data(), grads.data(), state, hyper);
}

}  // namespace stemsim::trainer
