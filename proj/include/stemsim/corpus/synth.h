#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "stemsim/corpus/manifest.h"
#include "stemsim/role.h"

namespace stemsim::corpus {

struct SynthSpec {
  int n_train_tracks = 20;
  int n_test_tracks = 8;
  double duration_s = 70.0;
  int sample_rate = 44100;
  // Lower bound on duration_s is twice this.
  double segment_seconds = 3.0;
};

// Procedural multi-stem corpus. Each instrument of each track draws its own
// rhythm, pitch and timbre parameters from an independent stream, so the
// similarity structure of one role carries no information about another.
// Writes out_dir/{train,test}/<id>/<role>.wav plus out_dir/manifest.json.
CorpusManifest synth_corpus(const SynthSpec& spec, std::uint64_t seed,
                            const std::filesystem::path& out_dir);

// Renders one stem without touching the filesystem. track_index orders train
// tracks first, then test tracks.
std::vector<float> synth_stem(Role role, int track_index, std::uint64_t seed,
                              double duration_s, int sample_rate);

// Clipped sum of the four stems.
std::vector<float> mix_stems(const std::vector<std::vector<float>>& stems);

}  // namespace stemsim::corpus
