#include "stemsim/features/cache.h"

#include <bit>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "stemsim/error.h"

namespace stemsim::features {

namespace {

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

void put_u32(std::ostream& os, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4] = {};
  is.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

std::uint64_t feature_config_hash(const FeatureConfig& cfg, int sample_rate,
                                  const corpus::SegmentationConfig& seg) {
  std::ostringstream key;
  key.precision(17);
  key << "n_fft=" << cfg.n_fft << ";hop=" << cfg.hop << ";n_mels=" << cfg.n_mels
      << ";fmin=" << cfg.fmin << ";fmax=" << cfg.resolved_fmax(sample_rate)
      << ";log_floor=" << cfg.log_floor << ";sr=" << sample_rate
      << ";segment_seconds=" << seg.segment_seconds << ";overlap=" << seg.overlap_fraction;
  return fnv1a(key.str());
}

void write_feature_file(const std::filesystem::path& path, const Eigen::MatrixXf& values) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error(ErrorKind::io, "cannot write feature file '" + path.string() + "'");
  put_u32(os, static_cast<std::uint32_t>(values.rows()));
  put_u32(os, static_cast<std::uint32_t>(values.cols()));
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
      put_u32(os, std::bit_cast<std::uint32_t>(values(r, c)));
    }
  }
  if (!os) throw Error(ErrorKind::io, "write failed for '" + path.string() + "'");
}

Eigen::MatrixXf read_feature_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorKind::io, "cannot open feature file '" + path.string() + "'");
  const std::uint32_t rows = get_u32(is);
  const std::uint32_t cols = get_u32(is);
  if (!is) throw Error(ErrorKind::format, path.string() + ": truncated header");
  Eigen::MatrixXf values(rows, cols);
  for (std::uint32_t r = 0; r < rows; ++r) {
    for (std::uint32_t c = 0; c < cols; ++c) values(r, c) = std::bit_cast<float>(get_u32(is));
  }
  if (!is) throw Error(ErrorKind::format, path.string() + ": truncated body");
  return values;
}

FeatureCache::FeatureCache(std::filesystem::path dir, std::uint64_t config_hash)
    : dir_(std::move(dir)), hash_(config_hash) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw Error(ErrorKind::io, "cannot create cache directory '" + dir_.string() + "'");
}

std::filesystem::path FeatureCache::path_for(const std::string& track_id, Role role,
                                             int segment_index) const {
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(hash_));
  return dir_ / (track_id + "_" + std::string(role_name(role)) + "_" +
                 std::to_string(segment_index) + "_" + hash + ".bin");
}

std::optional<Eigen::MatrixXf> FeatureCache::load(const std::string& track_id, Role role,
                                                  int segment_index) const {
  auto p = path_for(track_id, role, segment_index);
  if (!std::filesystem::exists(p)) return std::nullopt;
  return read_feature_file(p);
}

void FeatureCache::store(const MelSpectrogram& mel) const {
  write_feature_file(path_for(mel.track_id, mel.instrument, mel.segment_index), mel.values);
}

}  // namespace stemsim::features
