#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stemsim/encoder/encoder.h"
#include "stemsim/features/mel.h"
#include "stemsim/role.h"
#include "stemsim/trainer/train.h"

namespace stemsim::eval {

struct IndexEntry {
  std::string track_id;
  int segment_index = 0;
  Eigen::VectorXd embedding;
};

struct EmbeddingIndex {
  Role role = Role::mix;
  int trial = 0;
  std::vector<IndexEntry> entries;

  std::size_t size() const { return entries.size(); }
  std::optional<std::size_t> find(const std::string& track_id, int segment_index) const;
  // Distinct track ids in lexicographic order.
  std::vector<std::string> track_ids() const;
};

// Throws invalid_argument if a segment belongs to a different role, and
// dimension_mismatch if its shape does not fit the encoder, or on a
// duplicate (track, segment) key.
EmbeddingIndex embed_corpus(const encoder::EncoderParams& params, Role role, int trial,
                            std::span<const features::MelSpectrogram> segments);
EmbeddingIndex embed_corpus(const trainer::TrainedModel& model,
                            std::span<const features::MelSpectrogram> segments);

// Header: track_id,segment_index,e0..e{dim-1}. Values printed round-trip exact.
void write_embeddings_csv(const std::filesystem::path& path, const EmbeddingIndex& index);
EmbeddingIndex read_embeddings_csv(const std::filesystem::path& path, Role role = Role::mix,
                                   int trial = 0);

// "SSEMB001", uint32 count, uint32 dim, then per entry: uint32 id length, id
// bytes, int32 segment index, dim float64 values. Little endian.
void write_embeddings_bin(const std::filesystem::path& path, const EmbeddingIndex& index);
EmbeddingIndex read_embeddings_bin(const std::filesystem::path& path, Role role = Role::mix,
                                   int trial = 0);

}  // namespace stemsim::eval
