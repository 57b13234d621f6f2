#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <span>

#include "stemsim/encoder/encoder.h"

namespace stemsim::test {

inline constexpr double kFdStep = 1e-3;
inline constexpr double kGradTolerance = 1e-3;
// Gradients smaller than this are compared in absolute terms.
inline constexpr double kGradFloor = 1e-7;

inline double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) /
         std::max({std::abs(analytic), std::abs(numeric), kGradFloor});
}

struct GradCheck {
  double max_rel = 0.0;
  std::size_t worst = 0;
  std::size_t checked = 0;
};

// Central differences of `loss(params)` against `analytic`, over every parameter.
template <class Loss>
GradCheck check_gradient(encoder::EncoderParams& params, std::span<const double> analytic,
                         Loss&& loss, double step = kFdStep) {
  GradCheck out;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double orig = params.data()[i];
    params.data()[i] = orig + step;
    const double up = loss(params);
    params.data()[i] = orig - step;
    const double down = loss(params);
    params.data()[i] = orig;
    const double rel = relative_error(analytic[i], (up - down) / (2.0 * step));
    if (rel > out.max_rel) {
      out.max_rel = rel;
      out.worst = i;
    }
    ++out.checked;
  }
  return out;
}

// Zero biases put every dead receptive field exactly on a ReLU kink, where
// central differences are one-sided. Nonzero biases move the check point off it.
inline void jitter_biases(encoder::EncoderParams& params, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 0.1);
  auto data = params.data();
  for (const auto& t : params.tensors()) {
    if (t.shape.size() != 1) continue;
    for (std::size_t i = 0; i < t.size; ++i) data[t.offset + i] = n(rng);
  }
}

// True when every ReLU in both passes is on the same side of zero.
inline bool same_relu_pattern(const encoder::ForwardCache& a, const encoder::ForwardCache& b) {
  for (std::size_t i = 0; i < a.activations.size(); ++i) {
    if (((a.activations[i].array() > 0.0) != (b.activations[i].array() > 0.0)).any()) return false;
  }
  return true;
}

struct EncoderGradCheck {
  GradCheck result;
  bool kink_free = true;  // no +-step perturbation flipped a ReLU
};

// Checks d(c . f(x))/d(params) for one input. Central differences are only a
// derivative estimate when the stencil stays on one side of every ReLU kink,
// which kink_free reports.
inline EncoderGradCheck check_encoder_gradient(encoder::EncoderParams& params,
                                               const Eigen::MatrixXf& x, const Eigen::VectorXd& c,
                                               double step = kFdStep) {
  encoder::ForwardCache base;
  encoder::forward(params, x, base);
  const auto grads = encoder::backward(base, c);
  EncoderGradCheck out;
  encoder::ForwardCache probe;
  auto loss = [&](const encoder::EncoderParams& q) {
    encoder::forward(q, x, probe);
    if (!same_relu_pattern(base, probe)) out.kink_free = false;
    return c.dot(probe.embedding);
  };
  out.result = check_gradient(params, grads.data(), loss, step);
  return out;
}

inline encoder::EncoderArch reduced_arch() {
  encoder::EncoderArch a;
  a.input_height = 13;
  a.input_width = 15;
  a.blocks = {{3, 3, 3, 2, 2}, {4, 3, 3, 2, 2}};
  a.embedding_dim = 8;
  return a;
}

}  // namespace stemsim::test
