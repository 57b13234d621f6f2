#include "stemsim/corpus/track.h"

#include <cmath>
#include <numeric>

#include "stemsim/corpus/wav.h"
#include "stemsim/error.h"
#include "stemsim/role.h"

namespace stemsim {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::io: return "io";
    case ErrorKind::format: return "format";
    case ErrorKind::sample_rate_mismatch: return "sample_rate_mismatch";
    case ErrorKind::empty_result: return "empty_result";
    case ErrorKind::invalid_argument: return "invalid_argument";
    case ErrorKind::dimension_mismatch: return "dimension_mismatch";
    case ErrorKind::precondition: return "precondition";
    case ErrorKind::not_found: return "not_found";
    case ErrorKind::degenerate: return "degenerate";
    case ErrorKind::construction_failure: return "construction_failure";
    case ErrorKind::config: return "config";
  }
  return "unknown";
}

std::string_view role_name(Role role) {
  switch (role) {
    case Role::mix: return "mix";
    case Role::drums: return "drums";
    case Role::bass: return "bass";
    case Role::piano: return "piano";
    case Role::guitar: return "guitar";
  }
  return "unknown";
}

std::optional<Role> parse_role(std::string_view name) {
  for (Role r : kAllRoles) {
    if (role_name(r) == name) return r;
  }
  return std::nullopt;
}

Role role_from_name(std::string_view name) {
  if (auto r = parse_role(name)) return *r;
  throw Error(ErrorKind::invalid_argument, "unknown instrument role '" + std::string(name) + "'");
}

}  // namespace stemsim

namespace stemsim::corpus {

void SegmentationConfig::validate() const {
  if (!(segment_seconds > 0.0) || !std::isfinite(segment_seconds)) {
    throw Error(ErrorKind::invalid_argument, "segment_seconds must be positive");
  }
  if (!(overlap_fraction >= 0.0 && overlap_fraction < 1.0)) {
    throw Error(ErrorKind::invalid_argument, "overlap_fraction must lie in [0, 1)");
  }
  if (!(silence_threshold >= 0.0)) {
    throw Error(ErrorKind::invalid_argument, "silence_threshold must be nonnegative");
  }
}

std::size_t SegmentationConfig::segment_length(int sample_rate) const {
  return static_cast<std::size_t>(std::llround(segment_seconds * sample_rate));
}

std::size_t SegmentationConfig::hop_length(int sample_rate) const {
  auto hop = static_cast<std::size_t>(
      std::llround(segment_seconds * (1.0 - overlap_fraction) * sample_rate));
  return hop == 0 ? 1 : hop;
}

double rms(std::span<const float> samples) {
  if (samples.empty()) return 0.0;
  double acc = 0.0;
  for (float s : samples) acc += static_cast<double>(s) * s;
  return std::sqrt(acc / static_cast<double>(samples.size()));
}

TrackAudio load_track(const std::filesystem::path& path, int expected_sr, std::string track_id,
                      Role instrument) {
  WavData wav = read_wav(path);
  if (wav.sample_rate != expected_sr) {
    throw Error(ErrorKind::sample_rate_mismatch,
                path.string() + ": sample rate " + std::to_string(wav.sample_rate) +
                    " Hz, expected " + std::to_string(expected_sr) + " Hz");
  }
  TrackAudio audio;
  audio.track_id = std::move(track_id);
  audio.instrument = instrument;
  audio.sample_rate = wav.sample_rate;
  audio.samples = downmix(wav);
  if (audio.samples.empty()) {
    throw Error(ErrorKind::format, path.string() + ": no audio samples");
  }
  return audio;
}

std::vector<Segment> segment_track(const TrackAudio& audio, const SegmentationConfig& cfg) {
  cfg.validate();
  const std::size_t len = cfg.segment_length(audio.sample_rate);
  const std::size_t hop = cfg.hop_length(audio.sample_rate);
  if (len == 0 || audio.samples.size() < len) {
    throw Error(ErrorKind::empty_result,
                "track '" + audio.track_id + "' is shorter than one segment");
  }

  std::vector<Segment> out;
  std::span<const float> all(audio.samples);
  int window_index = 0;
  for (std::size_t offset = 0; offset + len <= all.size(); offset += hop, ++window_index) {
    if (cfg.max_segments && out.size() >= *cfg.max_segments) break;
    auto window = all.subspan(offset, len);
    if (rms(window) < cfg.silence_threshold) continue;
    Segment seg;
    seg.track_id = audio.track_id;
    seg.instrument = audio.instrument;
    seg.segment_index = window_index;
    seg.sample_rate = audio.sample_rate;
    seg.offset = offset;
    seg.samples.assign(window.begin(), window.end());
    out.push_back(std::move(seg));
  }
  if (out.empty()) {
    throw Error(ErrorKind::empty_result,
                "track '" + audio.track_id + "' has no non-silent segments");
  }
  return out;
}

std::size_t first_active_offset(std::span<const float> samples, std::size_t window,
                                std::size_t step, double silence_threshold) {
  if (samples.size() <= window || step == 0) return 0;
  for (std::size_t offset = 0; offset + window <= samples.size(); offset += step) {
    if (rms(samples.subspan(offset, window)) >= silence_threshold) return offset;
  }
  return 0;
}

}  // namespace stemsim::corpus
