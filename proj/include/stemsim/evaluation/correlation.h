#pragma once

#include <span>
#include <vector>

#include "stemsim/evaluation/distance_matrix.h"

namespace stemsim::eval {

// Pearson correlation. Throws degenerate when either input has zero variance.
double pearson(std::span<const double> x, std::span<const double> y);

// 1-based ranks; tied values share the mean of the ranks they span.
std::vector<double> average_ranks(std::span<const double> values);

// Strict upper triangle in row-major order, n(n-1)/2 values.
std::vector<double> upper_triangle(const DistanceMatrix& m);

// Pearson correlation of the two upper triangles. Needs n >= 3.
double pearson_upper(const DistanceMatrix& a, const DistanceMatrix& b);

// Per column, Spearman correlation of the off-diagonal entries (average ranks
// for ties); then the mean over all columns. Needs n >= 3 and no constant
// column in either matrix.
double spearman_avg(const DistanceMatrix& a, const DistanceMatrix& b);

}  // namespace stemsim::eval
