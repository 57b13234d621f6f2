#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "stemsim/corpus/track.h"
#include "stemsim/error.h"
#include "stemsim/features/cache.h"
#include "stemsim/features/mel.h"
#include "support.h"

using namespace stemsim;
using namespace stemsim::features;

namespace {

// Direct O(N^2) DFT of one periodic-Hann-windowed frame.
std::vector<double> dft_power(const float* frame, int n) {
  std::vector<double> out(n / 2 + 1);
  for (int k = 0; k <= n / 2; ++k) {
    std::complex<double> acc = 0.0;
    for (int i = 0; i < n; ++i) {
      const double w = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / n);
      acc += w * frame[i] * std::polar(1.0, -2.0 * std::numbers::pi * k * i / n);
    }
    out[k] = std::norm(acc);
  }
  return out;
}

std::vector<float> sine(std::size_t n, double freq, int sr, double amp = 0.5) {
  std::vector<float> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = static_cast<float>(amp * std::sin(2.0 * std::numbers::pi * freq * i / sr));
  return x;
}

FeatureConfig small_config() {
  FeatureConfig c;
  c.n_fft = 256;
  c.hop = 64;
  c.n_mels = 20;
  return c;
}

}  // namespace

TEST_CASE("frame count matches the closed form") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> nfft(2, 4096), len(0, 20000);
  for (int t = 0; t < 2000; ++t) {
    FeatureConfig c;
    c.n_fft = nfft(rng);
    c.hop = std::uniform_int_distribution<int>(1, c.n_fft)(rng);
    const auto n = static_cast<std::size_t>(len(rng));
    const std::size_t expected = n < static_cast<std::size_t>(c.n_fft) ? 0 : 1 + (n - c.n_fft) / c.hop;
    CHECK(frame_count(n, c) == expected);
  }
}

TEST_CASE("stft power of a bin-centred sine matches a direct DFT") {
  const int sr = 8000;
  auto cfg = small_config();
  const double freq = 20.0 * sr / cfg.n_fft;  // exactly bin 20
  auto x = sine(1024, freq, sr);
  auto p = stft_power(x, cfg);
  REQUIRE(p.rows() == cfg.n_bins());
  REQUIRE(p.cols() == static_cast<Eigen::Index>(frame_count(x.size(), cfg)));
  for (Eigen::Index f = 0; f < p.cols(); ++f) {
    auto ref = dft_power(x.data() + f * cfg.hop, cfg.n_fft);
    double peak = 0.0;
    for (double v : ref) peak = std::max(peak, v);
    for (int k = 0; k < cfg.n_bins(); ++k) {
      const double err = std::abs(p(k, f) - ref[k]);
      // Relative to the bin itself where it carries energy, to the peak otherwise.
      CHECK(err <= 1e-6 * std::max(ref[k], 1e-6 * peak));
    }
    // Hann main lobe: bins 19..21 hold all the energy.
    CHECK(p(20, f) > 1e3 * p(25, f));
  }
}

TEST_CASE("stft power of noise matches a direct DFT") {
  std::mt19937_64 rng(4);
  std::normal_distribution<float> n(0.0f, 0.2f);
  std::vector<float> x(700);
  for (auto& v : x) v = n(rng);
  FeatureConfig cfg = small_config();
  cfg.n_fft = 200;  // not a power of two
  cfg.hop = 150;
  auto p = stft_power(x, cfg);
  for (Eigen::Index f = 0; f < p.cols(); ++f) {
    auto ref = dft_power(x.data() + f * cfg.hop, cfg.n_fft);
    for (int k = 0; k < cfg.n_bins(); ++k) CHECK(std::abs(p(k, f) - ref[k]) <= 1e-9 * (1.0 + ref[k]));
  }
}

TEST_CASE("HTK mel scale") {
  CHECK(hz_to_mel(0.0) == 0.0);
  CHECK(hz_to_mel(700.0) == doctest::Approx(2595.0 * std::log10(2.0)));
  for (double hz : {20.0, 440.0, 1000.0, 11025.0, 22050.0}) CHECK(mel_to_hz(hz_to_mel(hz)) == doctest::Approx(hz).epsilon(1e-12));
}

TEST_CASE("filterbank shape, range and response to a flat spectrum") {
  for (int sr : {16000, 22050, 44100}) {
    FeatureConfig cfg;
    auto fb = mel_filterbank(cfg, sr);
    CHECK(fb.rows() == cfg.n_mels);
    CHECK(fb.cols() == cfg.n_bins());
    CHECK(fb.minCoeff() >= 0.0);
    CHECK(fb.maxCoeff() <= 1.0);
    Eigen::VectorXd flat = Eigen::VectorXd::Ones(cfg.n_bins());
    Eigen::VectorXd r = fb * flat;
    CHECK(r.minCoeff() > 0.0);
    auto centers = mel_center_frequencies(cfg, sr);
    REQUIRE(centers.size() == static_cast<std::size_t>(cfg.n_mels));
    for (std::size_t i = 1; i < centers.size(); ++i) {
      CHECK(hz_to_mel(centers[i]) - hz_to_mel(centers[i - 1]) ==
            doctest::Approx(hz_to_mel(centers[1]) - hz_to_mel(centers[0])));
    }
  }
}

TEST_CASE("too many mel bands for the FFT size is rejected by name") {
  FeatureConfig cfg;
  cfg.n_fft = 256;
  cfg.hop = 128;
  cfg.n_mels = 128;
  try {
    mel_filterbank(cfg, 44100);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::invalid_argument);
    CHECK(std::string(e.what()).find("features.n_mels") != std::string::npos);
  }
  cfg = FeatureConfig{};
  cfg.hop = 0;
  CHECK_THROWS_WITH_AS(cfg.validate(44100), doctest::Contains("features.hop"), Error);
  cfg = FeatureConfig{};
  cfg.fmax = 30000.0;
  CHECK_THROWS_WITH_AS(cfg.validate(44100), doctest::Contains("features.fmax"), Error);
}

TEST_CASE("log-mel equals log(filterbank * power + eps)") {
  const int sr = 8000;
  auto cfg = small_config();
  std::mt19937_64 rng(8);
  std::normal_distribution<float> n(0.0f, 0.1f);
  std::vector<float> x(2000);
  for (auto& v : x) v = n(rng);
  LogMelExtractor ex(cfg, sr);
  Eigen::MatrixXf got = ex.log_mel(x);
  Eigen::MatrixXd want = (mel_filterbank(cfg, sr) * stft_power(x, cfg)).array() + cfg.log_floor;
  want = want.array().log();
  REQUIRE(got.rows() == cfg.n_mels);
  CHECK((got.cast<double>() - want).cwiseAbs().maxCoeff() < 1e-5);

  std::vector<float> silence(2000, 0.0f);
  Eigen::MatrixXf floor = ex.log_mel(silence);
  CHECK(floor.maxCoeff() == static_cast<float>(std::log(cfg.log_floor)));
}

TEST_CASE("louder input raises every log-mel entry above the floor") {
  const int sr = 8000;
  auto cfg = small_config();
  std::mt19937_64 rng(9);
  std::normal_distribution<float> n(0.0f, 0.05f);
  std::vector<float> x(3000), y(3000);
  for (auto& v : x) v = n(rng);
  LogMelExtractor ex(cfg, sr);
  for (double alpha : {1.1, 2.0, 10.0}) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = static_cast<float>(alpha * x[i]);
    Eigen::MatrixXf a = ex.log_mel(x), b = ex.log_mel(y);
    const float floor = static_cast<float>(std::log(cfg.log_floor));
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      if (a.data()[i] > floor + 1.0f) CHECK(b.data()[i] > a.data()[i]);
    }
  }
}

TEST_CASE("extractor carries segment identity and checks the sample rate") {
  corpus::Segment seg;
  seg.track_id = "T07";
  seg.instrument = Role::piano;
  seg.segment_index = 12;
  seg.sample_rate = 8000;
  seg.samples = sine(1000, 440.0, 8000);
  auto cfg = small_config();
  auto m = log_mel(seg, cfg);
  CHECK(m.track_id == "T07");
  CHECK(m.instrument == Role::piano);
  CHECK(m.segment_index == 12);
  CHECK(m.n_mels() == cfg.n_mels);
  CHECK(m.n_frames() == static_cast<Eigen::Index>(frame_count(1000, cfg)));
  LogMelExtractor ex(cfg, 16000);
  CHECK_THROWS_AS(ex(seg), Error);
}

TEST_CASE("feature cache round trip is bit exact and keyed by config") {
  auto dir = test::scratch_dir("cache");
  corpus::SegmentationConfig seg;
  FeatureConfig cfg;
  const auto h = feature_config_hash(cfg, 44100, seg);
  FeatureConfig other = cfg;
  other.hop = 256;
  CHECK(feature_config_hash(other, 44100, seg) != h);
  CHECK(feature_config_hash(cfg, 22050, seg) != h);
  auto seg2 = seg;
  seg2.overlap_fraction = 0.25;
  CHECK(feature_config_hash(cfg, 44100, seg2) != h);
  CHECK(feature_config_hash(cfg, 44100, seg) == h);

  FeatureCache cache(dir, h);
  std::mt19937_64 rng(1);
  MelSpectrogram m{test::random_image(7, 5, rng), "T01", Role::bass, 3};
  CHECK_FALSE(cache.load("T01", Role::bass, 3).has_value());
  cache.store(m);
  auto back = cache.load("T01", Role::bass, 3);
  REQUIRE(back.has_value());
  CHECK(*back == m.values);
  CHECK_FALSE(cache.load("T01", Role::drums, 3).has_value());
  CHECK_FALSE(FeatureCache(dir, h + 1).load("T01", Role::bass, 3).has_value());

  std::ofstream(dir / "broken.bin", std::ios::binary) << "abc";
  CHECK_THROWS_AS(read_feature_file(dir / "broken.bin"), Error);
}
