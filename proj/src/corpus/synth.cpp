#include "stemsim/corpus/synth.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdio>
#include <numbers>
#include <random>

#include "stemsim/corpus/wav.h"
#include "stemsim/error.h"

namespace stemsim::corpus {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

class Rand {
 public:
  Rand(std::uint64_t seed, int track_index, Role role) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xFFFFFFFFu),
                      static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(track_index),
                      static_cast<std::uint32_t>(role) + 0x51u};
    engine_.seed(seq);
  }

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }
  bool chance(double p) { return uniform(0.0, 1.0) < p; }
  double noise() { return uniform(-1.0, 1.0); }

 private:
  std::mt19937_64 engine_;
};

double midi_hz(double note) { return 440.0 * std::pow(2.0, (note - 69.0) / 12.0); }

// Adds a sum of exponentially decaying partials starting at `start`. Uses
// phasor recurrences; rendering stops once the slowest envelope is inaudible.
struct Partial {
  double freq;
  double amp;
  double decay_s;
};

void add_partials(std::vector<double>& buf, std::size_t start, double max_len_s,
                  std::span<const Partial> partials, int sr, double attack_s = 0.004) {
  double longest = 0.0;
  for (const auto& p : partials) longest = std::max(longest, p.decay_s);
  const auto len = static_cast<std::size_t>(std::min(max_len_s, 7.0 * longest) * sr);
  const std::size_t end = std::min(buf.size(), start + len);
  const auto attack = static_cast<std::size_t>(attack_s * sr) + 1;
  for (const auto& p : partials) {
    if (p.freq >= 0.45 * sr || p.amp == 0.0) continue;
    const std::complex<double> rot = std::polar(1.0, kTwoPi * p.freq / sr);
    const double fall = std::exp(-1.0 / (p.decay_s * sr));
    std::complex<double> phase(1.0, 0.0);
    double env = p.amp;
    for (std::size_t i = start; i < end; ++i) {
      const std::size_t k = i - start;
      const double ramp = k < attack ? static_cast<double>(k) / attack : 1.0;
      buf[i] += env * ramp * phase.imag();
      phase *= rot;
      env *= fall;
    }
  }
}

// One-pole filtered noise burst with exponential decay.
void add_noise_hit(std::vector<double>& buf, std::size_t start, double decay_s, double lp_coef,
                   double hp_coef, double amp, Rand& rng, int sr) {
  const auto len = static_cast<std::size_t>(6.0 * decay_s * sr);
  const std::size_t end = std::min(buf.size(), start + len);
  const double fall = std::exp(-1.0 / (decay_s * sr));
  double env = amp, lp = 0.0, hp_prev_in = 0.0, hp = 0.0;
  for (std::size_t i = start; i < end; ++i) {
    const double n = rng.noise();
    lp += lp_coef * (n - lp);
    hp = hp_coef * (hp + lp - hp_prev_in);
    hp_prev_in = lp;
    buf[i] += env * hp;
    env *= fall;
  }
}

void add_kick(std::vector<double>& buf, std::size_t start, double f_hi, double f_lo,
              double sweep_s, double decay_s, double amp, int sr) {
  const auto len = static_cast<std::size_t>(6.0 * decay_s * sr);
  const std::size_t end = std::min(buf.size(), start + len);
  double phase = 0.0, env = amp;
  const double fall = std::exp(-1.0 / (decay_s * sr));
  for (std::size_t i = start; i < end; ++i) {
    const double t = static_cast<double>(i - start) / sr;
    const double f = f_lo + (f_hi - f_lo) * std::exp(-t / sweep_s);
    phase += kTwoPi * f / sr;
    buf[i] += env * std::sin(phase);
    env *= fall;
  }
}

std::vector<double> render_drums(Rand& rng, std::size_t n, int sr) {
  std::vector<double> buf(n, 0.0);
  const double bpm = rng.uniform(80.0, 150.0);
  const double step_s = 60.0 / bpm / 4.0;
  std::array<bool, 16> kick{}, snare{}, hat{};
  const double hat_density = rng.uniform(0.3, 0.95);
  for (int s = 0; s < 16; ++s) {
    kick[s] = s == 0 || rng.chance(s % 4 == 0 ? 0.45 : 0.15);
    snare[s] = rng.chance(s % 8 == 4 ? 0.85 : 0.08);
    hat[s] = rng.chance(s % 2 == 0 ? hat_density : hat_density * 0.6);
  }
  const double kick_hi = rng.uniform(90.0, 180.0), kick_lo = rng.uniform(38.0, 62.0);
  const double kick_sweep = rng.uniform(0.01, 0.05), kick_decay = rng.uniform(0.06, 0.22);
  const double snare_decay = rng.uniform(0.04, 0.18), snare_tone = rng.uniform(140.0, 320.0);
  const double snare_lp = rng.uniform(0.2, 0.8), snare_hp = rng.uniform(0.5, 0.95);
  const double hat_decay = rng.uniform(0.008, 0.06), hat_lp = rng.uniform(0.5, 1.0);
  const double hat_hp = rng.uniform(0.05, 0.4);
  const double kick_gain = rng.uniform(0.5, 1.0), snare_gain = rng.uniform(0.3, 0.9);
  const double hat_gain = rng.uniform(0.1, 0.5);
  // Small per-hit loudness jitter keeps segments of a track from being identical.
  for (std::size_t k = 0;; ++k) {
    const auto start = static_cast<std::size_t>(std::llround(k * step_s * sr));
    if (start >= n) break;
    const int s = static_cast<int>(k % 16);
    const double jitter = rng.uniform(0.85, 1.0);
    if (kick[s]) add_kick(buf, start, kick_hi, kick_lo, kick_sweep, kick_decay, kick_gain * jitter, sr);
    if (snare[s]) {
      add_noise_hit(buf, start, snare_decay, snare_lp, snare_hp, snare_gain * jitter, rng, sr);
      const std::array<Partial, 1> tone{{{snare_tone, 0.3 * snare_gain * jitter, snare_decay * 0.5}}};
      add_partials(buf, start, 1.0, tone, sr, 0.001);
    }
    if (hat[s]) add_noise_hit(buf, start, hat_decay, hat_lp, hat_hp, hat_gain * jitter, rng, sr);
  }
  return buf;
}

std::vector<double> render_bass(Rand& rng, std::size_t n, int sr) {
  std::vector<double> buf(n, 0.0);
  const double bpm = rng.uniform(70.0, 140.0);
  const double note_s = 60.0 / bpm * (rng.chance(0.5) ? 0.5 : 1.0);
  static constexpr std::array<int, 7> kScale = {0, 2, 3, 5, 7, 8, 10};
  const int root = rng.integer(28, 40);
  std::array<int, 8> seq{};
  for (auto& note : seq) {
    note = root + kScale[rng.integer(0, 6)];
    if (rng.chance(0.3)) note += 12;
  }
  const double tilt = rng.uniform(0.6, 2.6);
  const double decay = rng.uniform(0.15, 0.9);
  const int n_harm = rng.integer(3, 7);
  std::array<double, 8> odd_even{};
  for (int h = 0; h < 8; ++h) odd_even[h] = (h % 2 == 0) ? 1.0 : rng.uniform(0.2, 1.0);
  for (std::size_t k = 0;; ++k) {
    const auto start = static_cast<std::size_t>(std::llround(k * note_s * sr));
    if (start >= n) break;
    const double f0 = midi_hz(seq[k % seq.size()]);
    std::vector<Partial> partials;
    for (int h = 1; h <= n_harm; ++h) {
      partials.push_back({f0 * h, odd_even[h - 1] / std::pow(h, tilt), decay / (1.0 + 0.3 * h)});
    }
    add_partials(buf, start, note_s * 1.05, partials, sr, 0.006);
  }
  return buf;
}

std::vector<double> render_piano(Rand& rng, std::size_t n, int sr) {
  std::vector<double> buf(n, 0.0);
  const double chord_s = rng.uniform(0.7, 2.0);
  const int n_chords = rng.integer(2, 4);
  std::vector<std::vector<int>> chords;
  for (int c = 0; c < n_chords; ++c) {
    const int root = rng.integer(48, 64);
    const bool minor = rng.chance(0.5);
    std::vector<int> notes = {root, root + (minor ? 3 : 4), root + 7};
    if (rng.chance(0.4)) notes.push_back(root + (minor ? 10 : 11));
    chords.push_back(std::move(notes));
  }
  const double inharm = rng.uniform(1e-4, 1.2e-3);
  const double decay = rng.uniform(0.4, 1.6);
  const double bright = rng.uniform(0.8, 2.2);
  const int n_part = rng.integer(4, 8);
  for (std::size_t k = 0;; ++k) {
    const auto start = static_cast<std::size_t>(std::llround(k * chord_s * sr));
    if (start >= n) break;
    std::vector<Partial> partials;
    for (int note : chords[k % chords.size()]) {
      const double f0 = midi_hz(note);
      for (int h = 1; h <= n_part; ++h) {
        const double f = h * f0 * std::sqrt(1.0 + inharm * h * h);
        partials.push_back({f, 1.0 / std::pow(h, bright), decay / (1.0 + 0.5 * (h - 1))});
      }
    }
    add_partials(buf, start, chord_s + 0.5, partials, sr, 0.003);
  }
  return buf;
}

std::vector<double> render_guitar(Rand& rng, std::size_t n, int sr) {
  std::vector<double> buf(n, 0.0);
  const double pluck_s = rng.uniform(0.18, 0.5);
  static constexpr std::array<int, 5> kPentatonic = {0, 3, 5, 7, 10};
  const int root = rng.integer(50, 62);
  const int n_notes = rng.integer(4, 8);
  std::vector<int> seq;
  for (int i = 0; i < n_notes; ++i) {
    const int degree = kPentatonic[rng.integer(0, 4)];
    seq.push_back(root + degree + 12 * rng.integer(0, 1));
  }
  const double position = rng.uniform(0.08, 0.45);
  const double decay = rng.uniform(0.2, 0.9);
  const double damping = rng.uniform(0.1, 0.6);
  for (std::size_t k = 0;; ++k) {
    const auto start = static_cast<std::size_t>(std::llround(k * pluck_s * sr));
    if (start >= n) break;
    const double f0 = midi_hz(seq[k % seq.size()]);
    std::vector<Partial> partials;
    for (int h = 1; h <= 8; ++h) {
      const double amp = std::abs(std::sin(h * std::numbers::pi * position)) / (h * h) * 4.0;
      partials.push_back({f0 * h, amp, decay / (1.0 + damping * (h - 1))});
    }
    add_partials(buf, start, 1.5, partials, sr, 0.002);
  }
  return buf;
}

std::vector<float> to_stem(const std::vector<double>& buf, Rand& rng) {
  double peak = 0.0;
  for (double v : buf) peak = std::max(peak, std::abs(v));
  const double gain = peak > 0.0 ? 0.3 * rng.uniform(0.7, 1.0) / peak : 0.0;
  std::vector<float> out(buf.size());
  for (std::size_t i = 0; i < buf.size(); ++i) out[i] = static_cast<float>(buf[i] * gain);
  return out;
}

}  // namespace

std::vector<float> synth_stem(Role role, int track_index, std::uint64_t seed, double duration_s,
                              int sample_rate) {
  Rand rng(seed, track_index, role);
  const auto n = static_cast<std::size_t>(std::llround(duration_s * sample_rate));
  switch (role) {
    case Role::drums: return to_stem(render_drums(rng, n, sample_rate), rng);
    case Role::bass: return to_stem(render_bass(rng, n, sample_rate), rng);
    case Role::piano: return to_stem(render_piano(rng, n, sample_rate), rng);
    case Role::guitar: return to_stem(render_guitar(rng, n, sample_rate), rng);
    case Role::mix: break;
  }
  throw Error(ErrorKind::invalid_argument, "synth_stem renders stems only; mix is a sum");
}

std::vector<float> mix_stems(const std::vector<std::vector<float>>& stems) {
  if (stems.empty()) return {};
  std::vector<float> mix(stems.front().size(), 0.0f);
  for (std::size_t i = 0; i < mix.size(); ++i) {
    double acc = 0.0;
    for (const auto& s : stems) acc += s[i];
    mix[i] = static_cast<float>(std::clamp(acc, -1.0, 1.0));
  }
  return mix;
}

CorpusManifest synth_corpus(const SynthSpec& spec, std::uint64_t seed,
                            const std::filesystem::path& out_dir) {
  if (spec.n_train_tracks < 1 || spec.n_test_tracks < 1) {
    throw Error(ErrorKind::invalid_argument, "synth_corpus needs at least one train and one test track");
  }
  if (spec.sample_rate <= 0) throw Error(ErrorKind::invalid_argument, "sample_rate must be positive");
  if (!(spec.duration_s >= 2.0 * spec.segment_seconds)) {
    throw Error(ErrorKind::invalid_argument, "duration must be at least two segments long");
  }

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec || !std::filesystem::is_directory(out_dir)) {
    throw Error(ErrorKind::io, "cannot create output directory '" + out_dir.string() + "'");
  }

  const int total = spec.n_train_tracks + spec.n_test_tracks;
  const int width = total > 100 ? 3 : 2;
  CorpusManifest manifest;
  manifest.root = out_dir;
  manifest.sample_rate = spec.sample_rate;

  for (int t = 0; t < total; ++t) {
    char id[16];
    std::snprintf(id, sizeof id, "T%0*d", width, t);
    TrackEntry entry;
    entry.id = id;
    entry.split = t < spec.n_train_tracks ? Split::train : Split::test;
    const std::filesystem::path rel = std::filesystem::path(std::string(split_name(entry.split))) / entry.id;
    std::filesystem::create_directories(out_dir / rel, ec);
    if (ec) throw Error(ErrorKind::io, "cannot create '" + (out_dir / rel).string() + "'");

    std::vector<std::vector<float>> stems;
    for (Role r : kStemRoles) {
      stems.push_back(synth_stem(r, t, seed, spec.duration_s, spec.sample_rate));
      const auto file = rel / (std::string(role_name(r)) + ".wav");
      write_wav16(out_dir / file, stems.back(), spec.sample_rate);
      entry.stems[r] = file;
    }
    const auto mix_file = rel / "mix.wav";
    write_wav16(out_dir / mix_file, mix_stems(stems), spec.sample_rate);
    entry.stems[Role::mix] = mix_file;
    manifest.tracks.push_back(std::move(entry));
  }
  save_manifest(manifest, out_dir / "manifest.json");
  return manifest;
}

}  // namespace stemsim::corpus
