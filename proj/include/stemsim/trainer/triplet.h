#pragma once

#include <cstddef>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace stemsim::trainer {

// 1 - <a, b> / (|a| |b|), clamped to [0, 2]. Throws degenerate on a zero vector.
double cosine_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

struct DistanceGrad {
  Eigen::VectorXd wrt_a;
  Eigen::VectorXd wrt_b;
};
DistanceGrad cosine_distance_grad(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

// max(d_ap - d_an + margin, 0).
double triplet_loss(double d_ap, double d_an, double margin);

// (dL/d d_ap, dL/d d_an): (1, -1) while the hinge is active, (0, 0) otherwise,
// including at the boundary.
std::pair<double, double> triplet_loss_grad(double d_ap, double d_an, double margin);

// Indices into a flat segment list.
struct Triplet {
  std::size_t anchor = 0;
  std::size_t positive = 0;
  std::size_t negative = 0;
};

// Training segments grouped by track identity.
class SegmentIndex {
 public:
  struct Key {
    std::string track_id;
    int segment_index = 0;
  };

  // keys[i] describes flat segment i. Throws on duplicate keys.
  explicit SegmentIndex(const std::vector<Key>& keys);

  std::size_t size() const { return track_of_.size(); }
  std::size_t n_tracks() const { return groups_.size(); }
  std::size_t track_of(std::size_t segment) const { return track_of_.at(segment); }
  const std::vector<std::size_t>& group(std::size_t track) const { return groups_.at(track); }
  const std::string& track_id(std::size_t track) const { return track_ids_.at(track); }

  // Throws precondition unless there are >= 2 tracks with >= 2 segments each.
  void check_sampleable() const;

 private:
  std::vector<std::string> track_ids_;
  std::vector<std::vector<std::size_t>> groups_;
  std::vector<std::size_t> track_of_;
  // Segments ordered by track, and where each track's run starts.
  std::vector<std::size_t> by_track_;
  std::vector<std::size_t> run_start_;

  friend std::vector<Triplet> sample_triplet_batch(const SegmentIndex&, std::size_t,
                                                   std::mt19937_64&);
};

// Anchor uniform over all segments, positive uniform over the rest of the
// anchor's track, negative uniform over every segment of the other tracks.
std::vector<Triplet> sample_triplet_batch(const SegmentIndex& index, std::size_t batch_size,
                                          std::mt19937_64& rng);

}  // namespace stemsim::trainer
