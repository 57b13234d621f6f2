#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>

#include "stemsim/corpus/manifest.h"
#include "stemsim/corpus/sdr.h"
#include "stemsim/corpus/synth.h"
#include "stemsim/corpus/track.h"
#include "stemsim/corpus/wav.h"
#include "stemsim/error.h"
#include "support.h"

using namespace stemsim;
using namespace stemsim::corpus;
namespace fs = std::filesystem;

namespace {

void put_u32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void put_u16(std::vector<std::uint8_t>& b, std::uint16_t v) {
  b.push_back(static_cast<std::uint8_t>(v));
  b.push_back(static_cast<std::uint8_t>(v >> 8));
}
void put_tag(std::vector<std::uint8_t>& b, const char* tag) { b.insert(b.end(), tag, tag + 4); }

// Hand-built stereo file: extensible fmt chunk wrapping PCM16, plus an
// odd-sized junk chunk that must be skipped with its pad byte.
std::vector<std::uint8_t> extensible_stereo(const std::vector<std::int16_t>& interleaved) {
  std::vector<std::uint8_t> body;
  put_tag(body, "WAVE");
  put_tag(body, "fmt ");
  put_u32(body, 40);
  put_u16(body, 0xFFFE);
  put_u16(body, 2);
  put_u32(body, 8000);
  put_u32(body, 8000 * 4);
  put_u16(body, 4);
  put_u16(body, 16);
  put_u16(body, 22);
  put_u16(body, 16);
  put_u32(body, 3);
  put_u16(body, 1);  // KSDATAFORMAT_SUBTYPE_PCM GUID, first two bytes
  const std::uint8_t rest[14] = {0x00, 0x00, 0x00, 0x00, 0x10, 0x00, 0x80, 0x00,
                                 0x00, 0xAA, 0x00, 0x38, 0x9B, 0x71};
  body.insert(body.end(), rest, rest + 14);
  put_tag(body, "junk");
  put_u32(body, 3);
  body.insert(body.end(), {1, 2, 3, 0});
  put_tag(body, "data");
  put_u32(body, static_cast<std::uint32_t>(interleaved.size() * 2));
  for (auto s : interleaved) put_u16(body, static_cast<std::uint16_t>(s));
  std::vector<std::uint8_t> out;
  put_tag(out, "RIFF");
  put_u32(out, static_cast<std::uint32_t>(body.size()));
  out.insert(out.end(), body.begin(), body.end());
  return out;
}

std::vector<float> noise(std::size_t n, double amp, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, amp);
  std::vector<float> v(n);
  for (auto& x : v) x = static_cast<float>(d(rng));
  return v;
}

}  // namespace

TEST_CASE("wav16 round trip stays within one quantization step") {
  auto dir = test::scratch_dir("wav16");
  std::vector<float> x = {0.0f, 0.5f, -0.5f, 1.0f, -1.0f, 0.123f, 2.0f};
  write_wav16(dir / "a.wav", x, 22050);
  auto wav = read_wav(dir / "a.wav");
  CHECK(wav.sample_rate == 22050);
  CHECK(wav.channels == 1);
  REQUIRE(wav.samples.size() == x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const float want = std::clamp(x[i], -1.0f, 1.0f);
    CHECK(std::abs(wav.samples[i] - want) <= 1.0f / 32768.0f + 1e-6f);
  }
}

TEST_CASE("float wav round trip is exact") {
  auto dir = test::scratch_dir("wavf");
  auto x = noise(1001, 0.3, 5);
  write_wav_float(dir / "f.wav", x, 44100);
  auto wav = read_wav(dir / "f.wav");
  CHECK(wav.samples == x);
}

TEST_CASE("extensible stereo PCM with odd chunk downmixes by channel mean") {
  auto bytes = extensible_stereo({16384, -16384, 32767, 32767, -32768, 0});
  auto wav = parse_wav(bytes);
  CHECK(wav.channels == 2);
  CHECK(wav.sample_rate == 8000);
  REQUIRE(wav.frames() == 3);
  auto mono = downmix(wav);
  CHECK(mono[0] == doctest::Approx(0.0));
  CHECK(mono[1] == doctest::Approx(32767.0 / 32768.0));
  CHECK(mono[2] == doctest::Approx(-0.5));
}

TEST_CASE("malformed wav is a format error") {
  std::vector<std::uint8_t> junk = {'R', 'I', 'F', 'F', 0, 0, 0, 0, 'W', 'A', 'V', 'E'};
  try {
    parse_wav(junk);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::format);
  }
  CHECK_THROWS_AS(read_wav("/nonexistent/x.wav"), Error);
}

TEST_CASE("load_track rejects a sample-rate mismatch") {
  auto dir = test::scratch_dir("sr");
  write_wav16(dir / "a.wav", noise(100, 0.1, 1), 22050);
  try {
    load_track(dir / "a.wav", 44100);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::sample_rate_mismatch);
  }
}

TEST_CASE("segmentation matches the closed form over random durations and overlaps") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> dur(0.5, 12.0), ov(0.0, 0.95), sec(0.1, 3.0);
  const int rates[] = {8000, 16000, 22050, 44100};
  for (int trial = 0; trial < 300; ++trial) {
    SegmentationConfig cfg;
    cfg.segment_seconds = sec(rng);
    cfg.overlap_fraction = ov(rng);
    cfg.silence_threshold = 0.0;
    const int sr = rates[trial % 4];
    const auto n = static_cast<std::size_t>(dur(rng) * sr);
    const auto len = static_cast<std::size_t>(std::llround(cfg.segment_seconds * sr));
    const auto hop = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(cfg.segment_seconds * (1 - cfg.overlap_fraction) * sr)));
    TrackAudio audio{"t", Role::drums, sr, std::vector<float>(n, 0.25f)};
    if (n < len) {
      CHECK_THROWS_AS(segment_track(audio, cfg), Error);
      continue;
    }
    const std::size_t expected = (n - len) / hop + 1;
    auto segs = segment_track(audio, cfg);
    REQUIRE(segs.size() == expected);
    for (std::size_t k = 0; k < segs.size(); ++k) {
      CHECK(segs[k].offset == k * hop);
      CHECK(segs[k].segment_index == static_cast<int>(k));
      CHECK(segs[k].samples.size() == len);
      CHECK(segs[k].offset + len <= n);
    }
  }
}

TEST_CASE("silent windows are skipped and do not consume the cap") {
  const int sr = 1000;
  std::vector<float> x(20000, 0.0f);
  // Windows of 3000 at hop 1500: windows 0..3 end by 7500 and stay silent.
  for (std::size_t i = 7500; i < x.size(); ++i) x[i] = (i % 2) ? 0.2f : -0.2f;
  TrackAudio audio{"t", Role::bass, sr, x};
  SegmentationConfig cfg;
  cfg.max_segments = 5;
  auto segs = segment_track(audio, cfg);
  REQUIRE(segs.size() == 5);
  for (std::size_t k = 0; k < segs.size(); ++k) {
    CHECK(rms(segs[k].samples) >= cfg.silence_threshold);
    CHECK(segs[k].segment_index == static_cast<int>(k) + 4);
  }
  cfg.max_segments = 100;
  const std::size_t loud = (20000 - 3000) / 1500 + 1 - 4;
  CHECK(segment_track(audio, cfg).size() == loud);
  CHECK(first_active_offset(x, 3000, 1500, 1e-4) == 6000);

  TrackAudio silent{"s", Role::bass, sr, std::vector<float>(10000, 0.0f)};
  try {
    segment_track(silent, cfg);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::empty_result);
  }
}

TEST_CASE("synth stems are deterministic and differ across roles and tracks") {
  auto a = synth_stem(Role::bass, 3, 11, 4.0, 22050);
  auto b = synth_stem(Role::bass, 3, 11, 4.0, 22050);
  CHECK(a == b);
  CHECK(a.size() == 4 * 22050u);
  CHECK(a != synth_stem(Role::bass, 4, 11, 4.0, 22050));
  CHECK(a != synth_stem(Role::bass, 3, 12, 4.0, 22050));
  CHECK(a != synth_stem(Role::piano, 3, 11, 4.0, 22050));
  for (Role r : kStemRoles) {
    auto s = synth_stem(r, 0, 1, 4.0, 22050);
    float peak = 0.0f;
    for (float v : s) peak = std::max(peak, std::abs(v));
    CHECK(peak <= 0.3f + 1e-6f);
    CHECK(rms(s) > 1e-3);
  }
  auto mix = mix_stems({{0.7f, -0.2f}, {0.5f, -0.9f}});
  CHECK(mix == std::vector<float>{1.0f, -1.0f});
}

TEST_CASE("synth_corpus writes identical bytes for identical inputs") {
  SynthSpec spec{2, 2, 6.0, 8000, 3.0};
  auto d1 = test::scratch_dir("synth1");
  auto d2 = test::scratch_dir("synth2");
  auto m1 = synth_corpus(spec, 99, d1);
  synth_corpus(spec, 99, d2);
  REQUIRE(m1.tracks.size() == 4);
  CHECK(m1.tracks_with(Split::train, Role::drums).size() == 2);
  CHECK(m1.complete_roles(Split::test).size() == 5);
  for (const auto& t : m1.tracks) {
    for (const auto& [role, path] : t.stems) {
      CHECK(test::file_bytes(m1.resolve(path)) == test::file_bytes(d2 / path));
      CHECK(read_wav(m1.resolve(path)).sample_rate == 8000);
    }
  }
  CHECK(test::file_bytes(d1 / "manifest.json") == test::file_bytes(d2 / "manifest.json"));
  m1.validate(true);
}

TEST_CASE("manifest round trip, validation and Slakh layout") {
  auto dir = test::scratch_dir("manifest");
  auto m = synth_corpus(SynthSpec{2, 1, 6.0, 8000, 3.0}, 3, dir);
  auto loaded = load_manifest(dir / "manifest.json");
  CHECK(loaded.sample_rate == 8000);
  CHECK(manifest_to_json(loaded) == manifest_to_json(m));
  CHECK(loaded.track("T01").split == Split::train);
  CHECK_THROWS_AS(loaded.track("nope"), Error);

  auto dup = loaded;
  dup.tracks.push_back(dup.tracks.front());
  CHECK_THROWS_AS(dup.validate(false), Error);

  auto slakh = load_slakh_layout(dir, 8000);
  CHECK(slakh.tracks.size() == 3);
  CHECK(slakh.tracks_with(Split::test, Role::guitar).size() == 1);

  auto flat = test::scratch_dir("flat");
  fs::create_directories(flat / "Track01");
  write_wav16(flat / "Track01" / "bass.wav", noise(100, 0.1, 2), 8000);
  auto f = load_slakh_layout(flat, 8000);
  REQUIRE(f.tracks.size() == 1);
  CHECK(f.tracks[0].split == Split::test);
}

TEST_CASE("SDR of a constructed 10 dB estimate") {
  auto s = noise(44100, 0.3, 21);
  auto n = noise(44100, 0.3, 22);
  std::vector<double> ref(s.begin(), s.end()), raw(n.begin(), n.end());
  // Orthogonalize the noise against the reference, then set its energy to 1/10.
  double ss = 0, sn = 0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    ss += ref[i] * ref[i];
    sn += ref[i] * raw[i];
  }
  double nn = 0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    raw[i] -= sn / ss * ref[i];
    nn += raw[i] * raw[i];
  }
  const double g = std::sqrt(ss / (10.0 * nn));
  std::vector<double> est(ref.size()), noisy(ref.size());
  for (std::size_t i = 0; i < ref.size(); ++i) est[i] = ref[i] + g * raw[i];
  CHECK(std::abs(compute_sdr(std::span<const double>(ref), std::span<const double>(est)) - 10.0) < 1e-9);

  // Independent, non-orthogonalized noise at the same energy ratio.
  double e = 0;
  for (float v : n) e += double(v) * v;
  const double g2 = std::sqrt(ss / (10.0 * e));
  for (std::size_t i = 0; i < ref.size(); ++i) noisy[i] = ref[i] + g2 * n[i];
  CHECK(std::abs(compute_sdr(std::span<const double>(ref), std::span<const double>(noisy)) - 10.0) < 0.2);
}

TEST_CASE("SDR is scale invariant and falls as noise grows") {
  auto s = noise(20000, 0.2, 31);
  auto n = noise(20000, 0.2, 32);
  std::vector<double> ref(s.begin(), s.end()), est(s.size());
  for (std::size_t i = 0; i < est.size(); ++i) est[i] = ref[i] + 0.3 * n[i];
  const double base = compute_sdr(std::span<const double>(ref), std::span<const double>(est));
  for (double alpha : {0.5, 2.0}) {
    std::vector<double> scaled(est);
    for (auto& v : scaled) v *= alpha;
    CHECK(compute_sdr(std::span<const double>(ref), std::span<const double>(scaled)) == base);
  }
  std::vector<double> ten(est);
  for (auto& v : ten) v *= 10.0;
  CHECK(std::abs(compute_sdr(std::span<const double>(ref), std::span<const double>(ten)) - base) < 1e-9);

  double prev = 1e9;
  for (double level : {0.01, 0.05, 0.1, 0.5, 1.0, 3.0}) {
    for (std::size_t i = 0; i < est.size(); ++i) est[i] = ref[i] + level * n[i];
    const double v = compute_sdr(std::span<const double>(ref), std::span<const double>(est));
    CHECK(v < prev);
    prev = v;
  }
  CHECK(compute_sdr(std::span<const double>(ref), std::span<const double>(ref)) == kSdrCapDb);
  std::vector<double> zeros(ref.size(), 0.0), shorter(10, 1.0);
  CHECK_THROWS_AS(compute_sdr(std::span<const double>(zeros), std::span<const double>(ref)), Error);
  CHECK_THROWS_AS(compute_sdr(std::span<const double>(ref), std::span<const double>(shorter)), Error);
}
