#include <cmath>
#include <vector>

#include "stemsim/error.h"
#include "stemsim/features/mel.h"

namespace stemsim::features {

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

namespace {

// n_mels + 2 edge points: filter i spans points i .. i + 2 and peaks at i + 1.
std::vector<double> mel_edges(const FeatureConfig& cfg, int sample_rate) {
  const double lo = hz_to_mel(cfg.fmin);
  const double hi = hz_to_mel(cfg.resolved_fmax(sample_rate));
  std::vector<double> edges(cfg.n_mels + 2);
  for (int i = 0; i < cfg.n_mels + 2; ++i) {
    edges[i] = mel_to_hz(lo + (hi - lo) * i / (cfg.n_mels + 1));
  }
  return edges;
}

}  // namespace

std::vector<double> mel_center_frequencies(const FeatureConfig& cfg, int sample_rate) {
  cfg.validate(sample_rate);
  auto edges = mel_edges(cfg, sample_rate);
  return {edges.begin() + 1, edges.end() - 1};
}

Eigen::MatrixXd mel_filterbank(const FeatureConfig& cfg, int sample_rate) {
  cfg.validate(sample_rate);
  const auto edges = mel_edges(cfg, sample_rate);
  const int bins = cfg.n_bins();
  Eigen::MatrixXd fb = Eigen::MatrixXd::Zero(cfg.n_mels, bins);
  for (int m = 0; m < cfg.n_mels; ++m) {
    const double left = edges[m], center = edges[m + 1], right = edges[m + 2];
    for (int k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / cfg.n_fft;
      const double rise = (f - left) / (center - left);
      const double fall = (right - f) / (right - center);
      fb(m, k) = std::max(0.0, std::min(rise, fall));
    }
    if (!(fb.row(m).maxCoeff() > 0.0)) {
      throw Error(ErrorKind::invalid_argument,
                  "features.n_mels: " + std::to_string(cfg.n_mels) +
                      " filters are too narrow for n_fft " + std::to_string(cfg.n_fft) +
                      " (filter " + std::to_string(m) + " covers no FFT bin)");
    }
  }
  return fb;
}

}  // namespace stemsim::features
