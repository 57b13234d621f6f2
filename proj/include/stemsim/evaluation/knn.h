#pragma once

#include <string>

#include "stemsim/evaluation/index.h"

namespace stemsim::eval {

inline constexpr std::size_t kDefaultK = 5;

// Leave-one-out majority vote among the k nearest entries by cosine distance.
// Neighbors are ordered by (distance, track id, segment index). Vote ties go
// to the smallest summed neighbor distance, then to the smallest id.
std::string knn_predict(const EmbeddingIndex& index, const std::string& track_id,
                        int segment_index, std::size_t k = kDefaultK);
std::string knn_predict_at(const EmbeddingIndex& index, std::size_t query, std::size_t k = kDefaultK);

// Fraction of entries whose prediction equals their own track id.
double knn_accuracy(const EmbeddingIndex& index, std::size_t k = kDefaultK);

}  // namespace stemsim::eval
