#include "stemsim/evaluation/listening.h"

#include <algorithm>

#include "stemsim/error.h"

namespace stemsim::eval {

std::vector<std::string> top_two(const DistanceMatrix& m, const std::string& track_id) {
  std::vector<std::string> out;
  for (auto& [id, _] : query_similar(m, track_id, 2)) out.push_back(id);
  return out;
}

std::vector<AudioSet> build_listening_sets(const DistanceMatrix& focused,
                                           std::span<const DistanceMatrix> contrast,
                                           std::mt19937_64& rng, std::size_t n_sets,
                                           std::size_t max_attempts) {
  if (contrast.empty()) throw Error(ErrorKind::invalid_argument, "no contrast metric given");
  if (focused.size() < 4) throw Error(ErrorKind::precondition, "listening sets need at least 4 tracks");
  for (const auto& c : contrast) {
    if (c.ids != focused.ids) {
      throw Error(ErrorKind::dimension_mismatch, "contrast matrix covers a different track list");
    }
  }

  std::vector<AudioSet> sets;
  while (sets.size() < n_sets) {
    bool built = false;
    for (std::size_t attempt = 0; attempt < max_attempts && !built; ++attempt) {
      const auto& anchor = focused.ids[std::uniform_int_distribution<std::size_t>(0, focused.size() - 1)(rng)];
      const auto& other = contrast[std::uniform_int_distribution<std::size_t>(0, contrast.size() - 1)(rng)];
      const auto pos_pool = top_two(focused, anchor);
      const auto neg_pool = top_two(other, anchor);
      const bool overlap = std::any_of(pos_pool.begin(), pos_pool.end(), [&](const std::string& p) {
        return std::find(neg_pool.begin(), neg_pool.end(), p) != neg_pool.end();
      });
      if (overlap) continue;
      AudioSet s;
      s.anchor = anchor;
      s.positive = pos_pool[std::uniform_int_distribution<std::size_t>(0, pos_pool.size() - 1)(rng)];
      s.negative = neg_pool[std::uniform_int_distribution<std::size_t>(0, neg_pool.size() - 1)(rng)];
      s.presented_role = focused.role;
      s.contrast_role = other.role;
      sets.push_back(std::move(s));
      built = true;
    }
    if (!built) {
      throw Error(ErrorKind::construction_failure,
                  "could not draw a valid listening set in " + std::to_string(max_attempts) +
                      " attempts: candidate pools always overlap");
    }
  }
  return sets;
}

}  // namespace stemsim::eval
