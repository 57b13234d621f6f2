#include "stemsim/trainer/triplet.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "stemsim/error.h"

namespace stemsim::trainer {

double cosine_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) throw Error(ErrorKind::dimension_mismatch, "cosine_distance: length mismatch");
  const double na = a.norm(), nb = b.norm();
  if (!(na > 0.0) || !(nb > 0.0)) throw Error(ErrorKind::degenerate, "cosine_distance: zero-norm input");
  return std::clamp(1.0 - a.dot(b) / (na * nb), 0.0, 2.0);
}

DistanceGrad cosine_distance_grad(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double na = a.norm(), nb = b.norm();
  if (!(na > 0.0) || !(nb > 0.0)) throw Error(ErrorKind::degenerate, "cosine_distance: zero-norm input");
  const double cos = a.dot(b) / (na * nb);
  return {-(b / (na * nb) - cos * a / (na * na)), -(a / (na * nb) - cos * b / (nb * nb))};
}

double triplet_loss(double d_ap, double d_an, double margin) {
  return std::max(d_ap - d_an + margin, 0.0);
}

std::pair<double, double> triplet_loss_grad(double d_ap, double d_an, double margin) {
  if (d_ap - d_an + margin > 0.0) return {1.0, -1.0};
  return {0.0, 0.0};
}

SegmentIndex::SegmentIndex(const std::vector<Key>& keys) {
  std::map<std::string, std::size_t> track_slot;
  std::set<std::pair<std::string, int>> seen;
  track_of_.reserve(keys.size());
  for (std::size_t i = 0; i < keys.size(); ++i) {
    if (!seen.emplace(keys[i].track_id, keys[i].segment_index).second) {
      throw Error(ErrorKind::invalid_argument, "duplicate segment " + keys[i].track_id + "#" +
                                                   std::to_string(keys[i].segment_index));
    }
    auto [it, inserted] = track_slot.emplace(keys[i].track_id, groups_.size());
    if (inserted) {
      groups_.emplace_back();
      track_ids_.push_back(keys[i].track_id);
    }
    groups_[it->second].push_back(i);
    track_of_.push_back(it->second);
  }
  for (const auto& g : groups_) {
    run_start_.push_back(by_track_.size());
    by_track_.insert(by_track_.end(), g.begin(), g.end());
  }
}

void SegmentIndex::check_sampleable() const {
  if (groups_.size() < 2) {
    throw Error(ErrorKind::precondition, "triplet sampling needs at least two tracks");
  }
  for (std::size_t t = 0; t < groups_.size(); ++t) {
    if (groups_[t].size() < 2) {
      throw Error(ErrorKind::precondition,
                  "track '" + track_ids_[t] + "' has fewer than two segments");
    }
  }
}

std::vector<Triplet> sample_triplet_batch(const SegmentIndex& index, std::size_t batch_size,
                                          std::mt19937_64& rng) {
  index.check_sampleable();
  const std::size_t n = index.size();
  std::vector<Triplet> batch;
  batch.reserve(batch_size);
  for (std::size_t i = 0; i < batch_size; ++i) {
    Triplet t;
    t.anchor = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
    const std::size_t track = index.track_of_[t.anchor];
    const auto& group = index.groups_[track];

    const auto self = static_cast<std::size_t>(
        std::find(group.begin(), group.end(), t.anchor) - group.begin());
    std::size_t p = std::uniform_int_distribution<std::size_t>(0, group.size() - 2)(rng);
    if (p >= self) ++p;
    t.positive = group[p];

    // Position among the by-track ordering with the anchor's run cut out.
    std::size_t q = std::uniform_int_distribution<std::size_t>(0, n - group.size() - 1)(rng);
    if (q >= index.run_start_[track]) q += group.size();
    t.negative = index.by_track_[q];
    batch.push_back(t);
  }
  return batch;
}

}  // namespace stemsim::trainer
