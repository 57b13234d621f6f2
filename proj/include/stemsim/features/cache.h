#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <Eigen/Dense>

#include "stemsim/corpus/track.h"
#include "stemsim/features/mel.h"

namespace stemsim::features {

// FNV-1a over every parameter that changes the cached values or the meaning
// of a segment index.
std::uint64_t feature_config_hash(const FeatureConfig& cfg, int sample_rate,
                                  const corpus::SegmentationConfig& seg);

// Binary layout: uint32 rows, uint32 cols (little endian), then rows*cols
// float32 entries in row-major order.
void write_feature_file(const std::filesystem::path& path, const Eigen::MatrixXf& values);
Eigen::MatrixXf read_feature_file(const std::filesystem::path& path);

// One file per (track, role, segment_index, config hash).
class FeatureCache {
 public:
  FeatureCache(std::filesystem::path dir, std::uint64_t config_hash);

  std::filesystem::path path_for(const std::string& track_id, Role role, int segment_index) const;
  std::optional<Eigen::MatrixXf> load(const std::string& track_id, Role role,
                                      int segment_index) const;
  void store(const MelSpectrogram& mel) const;

 private:
  std::filesystem::path dir_;
  std::uint64_t hash_;
};

}  // namespace stemsim::features
