#include <cmath>
#include <numbers>
#include <vector>

#include <fftw3.h>

#include "stemsim/error.h"
#include "stemsim/features/mel.h"

namespace stemsim::features {

void FeatureConfig::validate(int sample_rate) const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw Error(ErrorKind::invalid_argument, "features." + field + ": " + why);
  };
  if (sample_rate <= 0) fail("sample_rate", "must be positive");
  if (n_fft < 2) fail("n_fft", "must be at least 2");
  if (hop <= 0 || hop > n_fft) fail("hop", "must satisfy 0 < hop <= n_fft");
  if (n_mels < 1) fail("n_mels", "must be at least 1");
  const double top = resolved_fmax(sample_rate);
  if (!(fmin >= 0.0)) fail("fmin", "must be nonnegative");
  if (!(top > fmin)) fail("fmax", "must exceed fmin");
  if (top > sample_rate / 2.0 + 1e-9) fail("fmax", "must not exceed the Nyquist frequency");
  if (!(log_floor > 0.0)) fail("log_floor", "must be positive");
}

std::size_t frame_count(std::size_t length, const FeatureConfig& cfg) {
  const auto n_fft = static_cast<std::size_t>(cfg.n_fft);
  if (length < n_fft) return 0;
  return 1 + (length - n_fft) / static_cast<std::size_t>(cfg.hop);
}

namespace detail {

class PowerFft {
 public:
  explicit PowerFft(int n) : n_(n) {
    in_ = fftw_alloc_real(n);
    out_ = fftw_alloc_complex(n / 2 + 1);
    // FFTW_ESTIMATE picks the plan without timing runs, so results do not
    // depend on machine load.
    plan_ = fftw_plan_dft_r2c_1d(n, in_, out_, FFTW_ESTIMATE);
    window_.resize(n);
    for (int i = 0; i < n; ++i) {
      window_[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / n);
    }
  }
  ~PowerFft() {
    fftw_destroy_plan(plan_);
    fftw_free(in_);
    fftw_free(out_);
  }
  PowerFft(const PowerFft&) = delete;
  PowerFft& operator=(const PowerFft&) = delete;

  // Writes |X_k|^2 of the windowed frame into column `dst`.
  void power_column(const float* frame, Eigen::Ref<Eigen::VectorXd> dst) {
    for (int i = 0; i < n_; ++i) in_[i] = window_[i] * frame[i];
    fftw_execute(plan_);
    for (int k = 0; k <= n_ / 2; ++k) dst[k] = out_[k][0] * out_[k][0] + out_[k][1] * out_[k][1];
  }

 private:
  int n_;
  double* in_ = nullptr;
  fftw_complex* out_ = nullptr;
  fftw_plan plan_ = nullptr;
  std::vector<double> window_;
};

}  // namespace detail

LogMelExtractor::LogMelExtractor(const FeatureConfig& cfg, int sample_rate)
    : cfg_(cfg), sample_rate_(sample_rate), filterbank_(mel_filterbank(cfg, sample_rate)),
      fft_(std::make_unique<detail::PowerFft>(cfg.n_fft)) {}

LogMelExtractor::~LogMelExtractor() = default;
LogMelExtractor::LogMelExtractor(LogMelExtractor&&) noexcept = default;
LogMelExtractor& LogMelExtractor::operator=(LogMelExtractor&&) noexcept = default;

Eigen::MatrixXd LogMelExtractor::power(std::span<const float> samples) const {
  if (samples.size() < static_cast<std::size_t>(cfg_.n_fft)) {
    throw Error(ErrorKind::invalid_argument, "signal of " + std::to_string(samples.size()) +
                                                 " samples is shorter than n_fft");
  }
  const auto frames = static_cast<Eigen::Index>(frame_count(samples.size(), cfg_));
  Eigen::MatrixXd out(cfg_.n_bins(), frames);
  for (Eigen::Index f = 0; f < frames; ++f) {
    fft_->power_column(samples.data() + f * cfg_.hop, out.col(f));
  }
  return out;
}

Eigen::MatrixXf LogMelExtractor::log_mel(std::span<const float> samples) const {
  Eigen::MatrixXd mel = filterbank_ * power(samples);
  const double eps = cfg_.log_floor;
  return mel.unaryExpr([eps](double v) { return std::log(v + eps); }).cast<float>();
}

MelSpectrogram LogMelExtractor::operator()(const corpus::Segment& segment) const {
  if (segment.sample_rate != sample_rate_) {
    throw Error(ErrorKind::sample_rate_mismatch, "segment sample rate differs from extractor's");
  }
  MelSpectrogram m;
  m.values = log_mel(segment.samples);
  m.track_id = segment.track_id;
  m.instrument = segment.instrument;
  m.segment_index = segment.segment_index;
  return m;
}

Eigen::MatrixXd stft_power(std::span<const float> samples, const FeatureConfig& cfg) {
  if (cfg.n_fft < 2 || cfg.hop <= 0 || cfg.hop > cfg.n_fft) {
    throw Error(ErrorKind::invalid_argument, "invalid n_fft/hop");
  }
  if (samples.size() < static_cast<std::size_t>(cfg.n_fft)) {
    throw Error(ErrorKind::invalid_argument, "signal is shorter than n_fft");
  }
  detail::PowerFft fft(cfg.n_fft);
  const auto frames = static_cast<Eigen::Index>(frame_count(samples.size(), cfg));
  Eigen::MatrixXd out(cfg.n_bins(), frames);
  for (Eigen::Index f = 0; f < frames; ++f) fft.power_column(samples.data() + f * cfg.hop, out.col(f));
  return out;
}

MelSpectrogram log_mel(const corpus::Segment& segment, const FeatureConfig& cfg) {
  return LogMelExtractor(cfg, segment.sample_rate)(segment);
}

}  // namespace stemsim::features
