#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace stemsim::corpus {

// Decoded RIFF/WAVE contents. Samples are interleaved and scaled to [-1, 1].
struct WavData {
  int sample_rate = 0;
  int channels = 0;
  std::vector<float> samples;

  std::size_t frames() const { return channels > 0 ? samples.size() / channels : 0; }
};

// Reads 16-bit PCM or 32-bit IEEE float WAV files, including the
// WAVE_FORMAT_EXTENSIBLE wrapper around either.
WavData read_wav(const std::filesystem::path& path);
WavData parse_wav(std::span<const std::uint8_t> bytes, const std::string& origin = "<memory>");

// Channel mean, clamped to [-1, 1]. Non-finite samples become 0.
std::vector<float> downmix(const WavData& wav);

// Writes mono 16-bit PCM. Input is clamped to [-1, 1] and rounded.
void write_wav16(const std::filesystem::path& path, std::span<const float> samples,
                 int sample_rate);
std::vector<std::uint8_t> encode_wav16(std::span<const float> samples, int sample_rate);

// Writes mono 32-bit IEEE float.
void write_wav_float(const std::filesystem::path& path, std::span<const float> samples,
                     int sample_rate);

}  // namespace stemsim::corpus
