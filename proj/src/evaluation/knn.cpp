#include "stemsim/evaluation/knn.h"

#include <algorithm>
#include <map>
#include <numeric>

#include "stemsim/error.h"
#include "stemsim/trainer/triplet.h"

namespace stemsim::eval {

namespace {

struct Neighbor {
  double distance;
  std::size_t entry;
};

std::string vote(const EmbeddingIndex& index, std::span<const Neighbor> nearest) {
  struct Tally {
    std::size_t count = 0;
    double total = 0.0;
  };
  std::map<std::string, Tally> tally;
  for (const auto& n : nearest) {
    auto& t = tally[index.entries[n.entry].track_id];
    ++t.count;
    t.total += n.distance;
  }
  // std::map iterates ids in ascending order, so strict comparisons keep the
  // smallest id among exact ties.
  const std::string* best = nullptr;
  Tally best_tally;
  for (const auto& [id, t] : tally) {
    if (!best || t.count > best_tally.count ||
        (t.count == best_tally.count && t.total < best_tally.total)) {
      best = &id;
      best_tally = t;
    }
  }
  return *best;
}

}  // namespace

std::string knn_predict_at(const EmbeddingIndex& index, std::size_t query, std::size_t k) {
  if (k == 0) throw Error(ErrorKind::invalid_argument, "k must be at least 1");
  if (index.size() <= k) {
    throw Error(ErrorKind::precondition, "kNN needs more than k entries in the index");
  }
  if (query >= index.size()) throw Error(ErrorKind::not_found, "query entry out of range");

  const auto& q = index.entries[query].embedding;
  std::vector<Neighbor> cand;
  cand.reserve(index.size() - 1);
  for (std::size_t j = 0; j < index.size(); ++j) {
    if (j == query) continue;
    cand.push_back({trainer::cosine_distance(q, index.entries[j].embedding), j});
  }
  auto closer = [&](const Neighbor& a, const Neighbor& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    const auto& ea = index.entries[a.entry];
    const auto& eb = index.entries[b.entry];
    if (ea.track_id != eb.track_id) return ea.track_id < eb.track_id;
    return ea.segment_index < eb.segment_index;
  };
  std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end(), closer);
  return vote(index, std::span<const Neighbor>(cand.data(), k));
}

std::string knn_predict(const EmbeddingIndex& index, const std::string& track_id,
                        int segment_index, std::size_t k) {
  auto pos = index.find(track_id, segment_index);
  if (!pos) {
    throw Error(ErrorKind::not_found,
                "no entry " + track_id + "#" + std::to_string(segment_index) + " in the index");
  }
  return knn_predict_at(index, *pos, k);
}

double knn_accuracy(const EmbeddingIndex& index, std::size_t k) {
  if (index.size() <= k) {
    throw Error(ErrorKind::precondition, "kNN needs more than k entries in the index");
  }
  std::size_t hits = 0;
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (knn_predict_at(index, i, k) == index.entries[i].track_id) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(index.size());
}

}  // namespace stemsim::eval
