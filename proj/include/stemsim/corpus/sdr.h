#pragma once

#include <span>

namespace stemsim::corpus {

inline constexpr double kSdrCapDb = 200.0;

// Scale-invariant SDR in dB. The estimate is projected onto the reference;
// returns kSdrCapDb when the residual energy is below 1e-20 of the target's.
double compute_sdr(std::span<const double> reference, std::span<const double> estimate);
double compute_sdr(std::span<const float> reference, std::span<const float> estimate);

}  // namespace stemsim::corpus
