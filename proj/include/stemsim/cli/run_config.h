#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include <json.hpp>

#include "stemsim/corpus/track.h"
#include "stemsim/encoder/encoder.h"
#include "stemsim/features/mel.h"
#include "stemsim/role.h"
#include "stemsim/trainer/train.h"

namespace stemsim::cli {

struct EvalOptions {
  std::size_t k = 5;
  std::size_t top_n = 5;
};

// Everything a run needs, as one JSON document. Relative paths resolve
// against the working directory.
struct RunConfig {
  std::filesystem::path manifest;
  std::filesystem::path output_dir;
  corpus::SegmentationConfig train_segmentation = corpus::SegmentationConfig::training();
  corpus::SegmentationConfig test_segmentation = corpus::SegmentationConfig::test();
  features::FeatureConfig features;
  std::vector<encoder::ConvBlockSpec> blocks = encoder::EncoderArch::standard(1, 1).blocks;
  int embedding_dim = 128;
  trainer::TrainConfig train;
  EvalOptions eval;
  std::vector<Role> roles{kAllRoles.begin(), kAllRoles.end()};

  // Smaller front end and network sized for a single CPU core: 64 mels at
  // hop 1024, four blocks of 8/16/32/32 channels, 30 epochs, 2 trials.
  static RunConfig desk();

  // Input size follows from the features and segment length.
  encoder::EncoderArch arch(int sample_rate) const;
  // Throws Error(config) naming the field.
  void validate(int sample_rate) const;

  nlohmann::json to_json() const;
  // Missing fields keep their defaults; unknown fields are rejected.
  static RunConfig from_json(const nlohmann::json& j);
};

RunConfig load_run_config(const std::filesystem::path& path);
void save_run_config(const RunConfig& cfg, const std::filesystem::path& path);

}  // namespace stemsim::cli
