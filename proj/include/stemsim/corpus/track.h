#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stemsim/role.h"

namespace stemsim::corpus {

inline constexpr int kDefaultSampleRate = 44100;

// One stem of one musical piece.
struct TrackAudio {
  std::string track_id;
  Role instrument = Role::mix;
  int sample_rate = kDefaultSampleRate;
  std::vector<float> samples;
};

struct Segment {
  std::string track_id;
  Role instrument = Role::mix;
  // Position in the window grid of the track, counting skipped silent windows.
  int segment_index = 0;
  int sample_rate = kDefaultSampleRate;
  std::size_t offset = 0;
  std::vector<float> samples;
};

struct SegmentationConfig {
  double segment_seconds = 3.0;
  double overlap_fraction = 0.5;
  std::optional<std::size_t> max_segments;  // nullopt = unlimited
  double silence_threshold = 1e-4;

  void validate() const;
  std::size_t segment_length(int sample_rate) const;
  std::size_t hop_length(int sample_rate) const;

  static SegmentationConfig training() {
    SegmentationConfig c;
    c.max_segments = 40;
    return c;
  }
  static SegmentationConfig test() { return SegmentationConfig{}; }
};

double rms(std::span<const float> samples);

// Loads a WAV stem, downmixing stereo by channel mean. Throws on a
// sample-rate mismatch since no resampler is provided.
TrackAudio load_track(const std::filesystem::path& path, int expected_sr,
                      std::string track_id = {}, Role instrument = Role::mix);

// Full windows at offsets 0, hop, 2*hop, ... in time order. Silent windows are
// skipped without counting toward max_segments; trailing partial windows are
// dropped. Throws empty_result if nothing survives.
std::vector<Segment> segment_track(const TrackAudio& audio, const SegmentationConfig& cfg);

// Earliest offset (multiple of step) whose window has RMS >= threshold; 0 when
// none qualifies or the signal is no longer than the window.
std::size_t first_active_offset(std::span<const float> samples, std::size_t window,
                                std::size_t step, double silence_threshold);

}  // namespace stemsim::corpus
