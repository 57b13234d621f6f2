#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>

#include <Eigen/Dense>

#include "stemsim/corpus/track.h"
#include "stemsim/role.h"

namespace stemsim::features {

namespace detail {
class PowerFft;
}

struct FeatureConfig {
  int n_fft = 2048;
  int hop = 512;
  int n_mels = 128;
  double fmin = 20.0;
  std::optional<double> fmax;  // nullopt = Nyquist
  double log_floor = 1e-10;

  double resolved_fmax(int sample_rate) const { return fmax.value_or(sample_rate / 2.0); }
  int n_bins() const { return n_fft / 2 + 1; }
  // Throws invalid_argument naming the offending field.
  void validate(int sample_rate) const;
};

// 1 + floor((length - n_fft) / hop), or 0 when the signal is shorter than one frame.
std::size_t frame_count(std::size_t length, const FeatureConfig& cfg);

// Log-mel matrix, n_mels x n_frames, with the segment's identity carried through.
struct MelSpectrogram {
  Eigen::MatrixXf values;
  std::string track_id;
  Role instrument = Role::mix;
  int segment_index = 0;

  Eigen::Index n_mels() const { return values.rows(); }
  Eigen::Index n_frames() const { return values.cols(); }
};

// |DFT|^2 of periodic-Hann-windowed frames at stride hop, no padding.
// Returns (n_fft/2 + 1) x n_frames.
Eigen::MatrixXd stft_power(std::span<const float> samples, const FeatureConfig& cfg);

double hz_to_mel(double hz);
double mel_to_hz(double mel);

// Center frequencies of the n_mels triangles in Hz, equally spaced in HTK mel.
std::vector<double> mel_center_frequencies(const FeatureConfig& cfg, int sample_rate);

// Triangular HTK filters, n_mels x (n_fft/2 + 1). Throws when a filter
// would cover no FFT bin.
Eigen::MatrixXd mel_filterbank(const FeatureConfig& cfg, int sample_rate);

// Holds the window, FFT plan and filterbank for one configuration. One
// instance is not safe for concurrent use; give each thread its own.
class LogMelExtractor {
 public:
  LogMelExtractor(const FeatureConfig& cfg, int sample_rate);
  ~LogMelExtractor();
  LogMelExtractor(LogMelExtractor&&) noexcept;
  LogMelExtractor& operator=(LogMelExtractor&&) noexcept;

  Eigen::MatrixXd power(std::span<const float> samples) const;
  Eigen::MatrixXf log_mel(std::span<const float> samples) const;
  MelSpectrogram operator()(const corpus::Segment& segment) const;

  const FeatureConfig& config() const { return cfg_; }
  int sample_rate() const { return sample_rate_; }
  const Eigen::MatrixXd& filterbank() const { return filterbank_; }

 private:
  FeatureConfig cfg_;
  int sample_rate_;
  Eigen::MatrixXd filterbank_;
  std::unique_ptr<detail::PowerFft> fft_;
};

// log(filterbank * stft_power + eps), elementwise.
MelSpectrogram log_mel(const corpus::Segment& segment, const FeatureConfig& cfg);

}  // namespace stemsim::features
