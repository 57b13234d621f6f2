#include "stemsim/corpus/sdr.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "stemsim/error.h"

namespace stemsim::corpus {

double compute_sdr(std::span<const double> reference, std::span<const double> estimate) {
  if (reference.size() != estimate.size()) {
    throw Error(ErrorKind::dimension_mismatch, "SDR inputs differ in length");
  }
  double ref_energy = 0.0, cross = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    ref_energy += reference[i] * reference[i];
    cross += reference[i] * estimate[i];
  }
  if (!(ref_energy > 0.0)) throw Error(ErrorKind::degenerate, "SDR reference is all zero");

  const double scale = cross / ref_energy;
  double target = 0.0, residual = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const double t = scale * reference[i];
    const double r = estimate[i] - t;
    target += t * t;
    residual += r * r;
  }
  if (residual <= 1e-20 * target) return kSdrCapDb;
  if (target == 0.0) return -kSdrCapDb;
  return std::min(kSdrCapDb, 10.0 * std::log10(target / residual));
}

double compute_sdr(std::span<const float> reference, std::span<const float> estimate) {
  std::vector<double> r(reference.begin(), reference.end());
  std::vector<double> e(estimate.begin(), estimate.end());
  return compute_sdr(std::span<const double>(r), std::span<const double>(e));
}

}  // namespace stemsim::corpus
