#include "stemsim/evaluation/correlation.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "stemsim/error.h"

namespace stemsim::eval {

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw Error(ErrorKind::dimension_mismatch, "pearson needs two equal-length inputs of size >= 2");
  }
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) throw Error(ErrorKind::degenerate, "zero variance in correlation input");
  // sqrt(s * s) == s in IEEE arithmetic, so identical inputs give exactly 1.
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

std::vector<double> upper_triangle(const DistanceMatrix& m) {
  std::vector<double> out;
  const auto n = m.values.rows();
  out.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) out.push_back(m.values(i, j));
  }
  return out;
}

namespace {

void check_pair(const DistanceMatrix& a, const DistanceMatrix& b) {
  if (a.values.rows() != b.values.rows() || a.values.cols() != b.values.cols() ||
      a.values.rows() != a.values.cols()) {
    throw Error(ErrorKind::dimension_mismatch, "distance matrices differ in shape");
  }
  if (a.values.rows() < 3) throw Error(ErrorKind::precondition, "correlation needs at least 3 tracks");
}

}  // namespace

double pearson_upper(const DistanceMatrix& a, const DistanceMatrix& b) {
  check_pair(a, b);
  return pearson(upper_triangle(a), upper_triangle(b));
}

double spearman_avg(const DistanceMatrix& a, const DistanceMatrix& b) {
  check_pair(a, b);
  const auto n = a.values.rows();
  double total = 0.0;
  std::vector<double> ca, cb;
  for (Eigen::Index j = 0; j < n; ++j) {
    ca.clear();
    cb.clear();
    for (Eigen::Index i = 0; i < n; ++i) {
      if (i == j) continue;
      ca.push_back(a.values(i, j));
      cb.push_back(b.values(i, j));
    }
    try {
      total += pearson(average_ranks(ca), average_ranks(cb));
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::degenerate) throw;
      throw Error(ErrorKind::degenerate, "column " + std::to_string(j) + " is constant");
    }
  }
  return total / static_cast<double>(n);
}

}  // namespace stemsim::eval
