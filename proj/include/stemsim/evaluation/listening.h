#pragma once

#include <random>
#include <span>
#include <string>
#include <vector>

#include "stemsim/evaluation/distance_matrix.h"
#include "stemsim/role.h"

namespace stemsim::eval {

struct AudioSet {
  std::string anchor;
  std::string positive;
  std::string negative;
  Role presented_role = Role::mix;  // role whose metric is evaluated and whose audio is played
  Role contrast_role = Role::mix;   // role whose metric supplied the negative
};

// The two nearest other tracks, ties by id.
std::vector<std::string> top_two(const DistanceMatrix& m, const std::string& track_id);

// Each set: a uniform anchor, a positive drawn from the anchor's top two in
// `focused`, and a negative drawn from its top two in one contrast matrix
// (picked uniformly per draw). A draw whose two candidate pairs intersect is
// rejected and redrawn; after max_attempts rejections in a row the builder
// fails with construction_failure.
std::vector<AudioSet> build_listening_sets(const DistanceMatrix& focused,
                                           std::span<const DistanceMatrix> contrast,
                                           std::mt19937_64& rng, std::size_t n_sets,
                                           std::size_t max_attempts = 1000);

}  // namespace stemsim::eval
