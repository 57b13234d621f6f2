#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "stemsim/corpus/manifest.h"
#include "stemsim/corpus/track.h"
#include "stemsim/features/mel.h"
#include "stemsim/role.h"

namespace stemsim::trainer {

// Log-mel spectrograms of every kept segment of one role and split, ordered
// by manifest track order then segment index.
struct FeatureSet {
  Role role = Role::mix;
  std::vector<features::MelSpectrogram> items;
};

// Loads, segments and featurizes. With cache_dir set, cached matrices are
// reused and missing ones written.
FeatureSet build_feature_set(const corpus::CorpusManifest& manifest, Role role,
                             corpus::Split split, const corpus::SegmentationConfig& seg,
                             const features::FeatureConfig& feat,
                             const std::optional<std::filesystem::path>& cache_dir = std::nullopt);

}  // namespace stemsim::trainer
