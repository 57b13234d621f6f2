#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "stemsim/evaluation/index.h"
#include "stemsim/role.h"

namespace stemsim::eval {

// Centroid-to-centroid cosine distances over an ordered track list.
struct DistanceMatrix {
  std::vector<std::string> ids;
  Eigen::MatrixXd values;
  Role role = Role::mix;
  int trials_averaged = 1;

  std::size_t size() const { return ids.size(); }
  std::size_t position(const std::string& id) const;  // throws not_found
};

// Plain mean of the track's embeddings; not renormalized.
Eigen::VectorXd centroid(const EmbeddingIndex& index, const std::string& track_id);

// Entry (i, j) = cosine distance of centroids i and j. Computed once per pair
// and mirrored; zero diagonal. A zero centroid raises degenerate.
DistanceMatrix distance_matrix(std::vector<std::string> ids,
                               std::span<const Eigen::VectorXd> centroids);

// Centroids of every track in the index, in lexicographic id order.
DistanceMatrix centroid_distance_matrix(const EmbeddingIndex& index);

// Elementwise mean; all inputs must share the id order.
DistanceMatrix average_matrices(std::span<const DistanceMatrix> matrices);

// Other tracks by ascending distance, ties by id, at most top_n of them.
std::vector<std::pair<std::string, double>> query_similar(const DistanceMatrix& m,
                                                          const std::string& track_id,
                                                          std::size_t top_n);

// First row and column hold track ids; the corner cell reads "track_id".
void write_distance_csv(const std::filesystem::path& path, const DistanceMatrix& m);
DistanceMatrix read_distance_csv(const std::filesystem::path& path, Role role = Role::mix);

// Binary PGM heatmap, cell_px pixels per entry. Gray level is proportional to
// distance over the matrix maximum, so darker means more similar.
void write_distance_pgm(const std::filesystem::path& path, const DistanceMatrix& m,
                        int cell_px = 16);

}  // namespace stemsim::eval
