#include "stemsim/evaluation/index.h"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "stemsim/error.h"

namespace stemsim::eval {

std::optional<std::size_t> EmbeddingIndex::find(const std::string& track_id,
                                                int segment_index) const {
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].track_id == track_id && entries[i].segment_index == segment_index) return i;
  }
  return std::nullopt;
}

std::vector<std::string> EmbeddingIndex::track_ids() const {
  std::set<std::string> ids;
  for (const auto& e : entries) ids.insert(e.track_id);
  return {ids.begin(), ids.end()};
}

EmbeddingIndex embed_corpus(const encoder::EncoderParams& params, Role role, int trial,
                            std::span<const features::MelSpectrogram> segments) {
  EmbeddingIndex index;
  index.role = role;
  index.trial = trial;
  index.entries.reserve(segments.size());
  std::set<std::pair<std::string, int>> seen;
  encoder::ForwardCache cache;
  for (const auto& seg : segments) {
    if (seg.instrument != role) {
      throw Error(ErrorKind::invalid_argument,
                  "segment of role " + std::string(role_name(seg.instrument)) +
                      " given to a " + std::string(role_name(role)) + " model");
    }
    if (!seen.emplace(seg.track_id, seg.segment_index).second) {
      throw Error(ErrorKind::invalid_argument, "duplicate segment key " + seg.track_id + "#" +
                                                   std::to_string(seg.segment_index));
    }
    encoder::forward(params, seg.values, cache);
    index.entries.push_back({seg.track_id, seg.segment_index, cache.embedding});
  }
  return index;
}

EmbeddingIndex embed_corpus(const trainer::TrainedModel& model,
                            std::span<const features::MelSpectrogram> segments) {
  return embed_corpus(model.params, model.role, model.trial, segments);
}

void write_embeddings_csv(const std::filesystem::path& path, const EmbeddingIndex& index) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw Error(ErrorKind::io, "cannot write '" + path.string() + "'");
  const Eigen::Index dim = index.entries.empty() ? 0 : index.entries.front().embedding.size();
  os << "track_id,segment_index";
  for (Eigen::Index d = 0; d < dim; ++d) os << ",e" << d;
  os << '\n';
  char buf[40];
  for (const auto& e : index.entries) {
    os << e.track_id << ',' << e.segment_index;
    for (Eigen::Index d = 0; d < e.embedding.size(); ++d) {
      std::snprintf(buf, sizeof buf, ",%.17g", e.embedding[d]);
      os << buf;
    }
    os << '\n';
  }
}

EmbeddingIndex read_embeddings_csv(const std::filesystem::path& path, Role role, int trial) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorKind::io, "cannot open '" + path.string() + "'");
  EmbeddingIndex index;
  index.role = role;
  index.trial = trial;
  std::string line;
  std::getline(is, line);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    IndexEntry e;
    std::getline(ss, e.track_id, ',');
    std::getline(ss, cell, ',');
    e.segment_index = std::stoi(cell);
    std::vector<double> vals;
    while (std::getline(ss, cell, ',')) vals.push_back(std::stod(cell));
    e.embedding = Eigen::Map<Eigen::VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size()));
    index.entries.push_back(std::move(e));
  }
  return index;
}

namespace {

void put_u32(std::ostream& os, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

void put_f64(std::ostream& os, double d) {
  const auto v = std::bit_cast<std::uint64_t>(d);
  unsigned char b[8];
  for (int k = 0; k < 8; ++k) b[k] = static_cast<unsigned char>(v >> (8 * k));
  os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4] = {};
  is.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

double get_f64(std::istream& is) {
  unsigned char b[8] = {};
  is.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(b[k]) << (8 * k);
  return std::bit_cast<double>(v);
}

constexpr char kMagic[8] = {'S', 'S', 'E', 'M', 'B', '0', '0', '1'};

}  // namespace

void write_embeddings_bin(const std::filesystem::path& path, const EmbeddingIndex& index) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error(ErrorKind::io, "cannot write '" + path.string() + "'");
  const auto dim = index.entries.empty() ? 0u : static_cast<std::uint32_t>(index.entries.front().embedding.size());
  os.write(kMagic, 8);
  put_u32(os, static_cast<std::uint32_t>(index.entries.size()));
  put_u32(os, dim);
  for (const auto& e : index.entries) {
    if (static_cast<std::uint32_t>(e.embedding.size()) != dim) {
      throw Error(ErrorKind::dimension_mismatch, "embeddings of unequal length");
    }
    put_u32(os, static_cast<std::uint32_t>(e.track_id.size()));
    os.write(e.track_id.data(), static_cast<std::streamsize>(e.track_id.size()));
    put_u32(os, static_cast<std::uint32_t>(e.segment_index));
    for (Eigen::Index d = 0; d < e.embedding.size(); ++d) put_f64(os, e.embedding[d]);
  }
}

EmbeddingIndex read_embeddings_bin(const std::filesystem::path& path, Role role, int trial) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorKind::io, "cannot open '" + path.string() + "'");
  char magic[8] = {};
  is.read(magic, 8);
  if (std::memcmp(magic, kMagic, 8) != 0) throw Error(ErrorKind::format, path.string() + ": bad magic");
  EmbeddingIndex index;
  index.role = role;
  index.trial = trial;
  const std::uint32_t count = get_u32(is);
  const std::uint32_t dim = get_u32(is);
  for (std::uint32_t i = 0; i < count && is; ++i) {
    IndexEntry e;
    e.track_id.resize(get_u32(is));
    is.read(e.track_id.data(), static_cast<std::streamsize>(e.track_id.size()));
    e.segment_index = static_cast<std::int32_t>(get_u32(is));
    e.embedding.resize(dim);
    for (std::uint32_t d = 0; d < dim; ++d) e.embedding[d] = get_f64(is);
    index.entries.push_back(std::move(e));
  }
  if (!is) throw Error(ErrorKind::format, path.string() + ": truncated");
  return index;
}

}  // namespace stemsim::eval
