#include "stemsim/evaluation/distance_matrix.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "stemsim/error.h"

namespace stemsim::eval {

std::size_t DistanceMatrix::position(const std::string& id) const {
  auto it = std::find(ids.begin(), ids.end(), id);
  if (it == ids.end()) throw Error(ErrorKind::not_found, "unknown track '" + id + "'");
  return static_cast<std::size_t>(it - ids.begin());
}

Eigen::VectorXd centroid(const EmbeddingIndex& index, const std::string& track_id) {
  Eigen::VectorXd sum;
  std::size_t n = 0;
  for (const auto& e : index.entries) {
    if (e.track_id != track_id) continue;
    if (n == 0) {
      sum = e.embedding;
    } else {
      sum += e.embedding;
    }
    ++n;
  }
  if (n == 0) throw Error(ErrorKind::not_found, "unknown track '" + track_id + "'");
  return sum / static_cast<double>(n);
}

DistanceMatrix distance_matrix(std::vector<std::string> ids,
                               std::span<const Eigen::VectorXd> centroids) {
  if (ids.size() != centroids.size()) {
    throw Error(ErrorKind::dimension_mismatch, "one id per centroid required");
  }
  const auto n = static_cast<Eigen::Index>(ids.size());
  std::vector<double> norms(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    norms[i] = centroids[i].norm();
    if (!(norms[i] > 1e-12)) {
      throw Error(ErrorKind::degenerate, "centroid of track '" + ids[i] + "' is zero");
    }
  }
  DistanceMatrix m;
  m.ids = std::move(ids);
  m.values = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double cos = centroids[i].dot(centroids[j]) / (norms[i] * norms[j]);
      const double d = std::clamp(1.0 - cos, 0.0, 2.0);
      m.values(i, j) = d;
      m.values(j, i) = d;
    }
  }
  return m;
}

DistanceMatrix centroid_distance_matrix(const EmbeddingIndex& index) {
  auto ids = index.track_ids();
  std::vector<Eigen::VectorXd> cs;
  for (const auto& id : ids) cs.push_back(centroid(index, id));
  auto m = distance_matrix(std::move(ids), cs);
  m.role = index.role;
  return m;
}

DistanceMatrix average_matrices(std::span<const DistanceMatrix> matrices) {
  if (matrices.empty()) throw Error(ErrorKind::invalid_argument, "nothing to average");
  DistanceMatrix out = matrices.front();
  out.trials_averaged = 0;
  out.values.setZero();
  for (const auto& m : matrices) {
    if (m.ids != out.ids) throw Error(ErrorKind::dimension_mismatch, "matrices cover different tracks");
    out.values += m.values;
    out.trials_averaged += m.trials_averaged;
  }
  out.values /= static_cast<double>(matrices.size());
  return out;
}

std::vector<std::pair<std::string, double>> query_similar(const DistanceMatrix& m,
                                                          const std::string& track_id,
                                                          std::size_t top_n) {
  const std::size_t q = m.position(track_id);
  std::vector<std::pair<std::string, double>> others;
  for (std::size_t j = 0; j < m.size(); ++j) {
    if (j != q) others.emplace_back(m.ids[j], m.values(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(j)));
  }
  std::sort(others.begin(), others.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second < b.second;
    return a.first < b.first;
  });
  if (others.size() > top_n) others.resize(top_n);
  return others;
}

void write_distance_csv(const std::filesystem::path& path, const DistanceMatrix& m) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw Error(ErrorKind::io, "cannot write '" + path.string() + "'");
  os << "track_id";
  for (const auto& id : m.ids) os << ',' << id;
  os << '\n';
  char buf[40];
  for (std::size_t i = 0; i < m.size(); ++i) {
    os << m.ids[i];
    for (std::size_t j = 0; j < m.size(); ++j) {
      std::snprintf(buf, sizeof buf, ",%.17g", m.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
      os << buf;
    }
    os << '\n';
  }
}

DistanceMatrix read_distance_csv(const std::filesystem::path& path, Role role) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorKind::io, "cannot open '" + path.string() + "'");
  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    return cells;
  };
  std::string line;
  std::getline(is, line);
  auto head = split(line);
  if (head.empty()) throw Error(ErrorKind::format, path.string() + ": empty header");
  DistanceMatrix m;
  m.role = role;
  m.ids.assign(head.begin() + 1, head.end());
  const auto n = static_cast<Eigen::Index>(m.ids.size());
  m.values = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!std::getline(is, line)) throw Error(ErrorKind::format, path.string() + ": missing rows");
    auto cells = split(line);
    if (static_cast<Eigen::Index>(cells.size()) != n + 1 || cells[0] != m.ids[i]) {
      throw Error(ErrorKind::format, path.string() + ": malformed row " + std::to_string(i + 1));
    }
    for (Eigen::Index j = 0; j < n; ++j) m.values(i, j) = std::stod(cells[j + 1]);
  }
  return m;
}

void write_distance_pgm(const std::filesystem::path& path, const DistanceMatrix& m, int cell_px) {
  if (cell_px < 1) throw Error(ErrorKind::invalid_argument, "cell_px must be positive");
  const auto n = static_cast<int>(m.size());
  const int side = n * cell_px;
  const double peak = n > 0 ? m.values.maxCoeff() : 0.0;
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error(ErrorKind::io, "cannot write '" + path.string() + "'");
  os << "P5\n" << side << ' ' << side << "\n255\n";
  std::vector<unsigned char> row(static_cast<std::size_t>(side));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double v = peak > 0.0 ? m.values(i, j) / peak : 0.0;
      const auto gray = static_cast<unsigned char>(std::lround(255.0 * std::clamp(v, 0.0, 1.0)));
      std::fill_n(row.begin() + j * cell_px, cell_px, gray);
    }
    for (int r = 0; r < cell_px; ++r) os.write(reinterpret_cast<const char*>(row.data()), side);
  }
}

}  // namespace stemsim::eval
