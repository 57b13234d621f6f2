#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "stemsim/role.h"

namespace stemsim::corpus {

enum class Split { train, test };

std::string_view split_name(Split split);

struct TrackEntry {
  std::string id;
  Split split = Split::train;
  // Paths as written in the manifest; relative paths resolve against the root.
  std::map<Role, std::filesystem::path> stems;
};

struct CorpusManifest {
  std::filesystem::path root;
  int sample_rate = 44100;
  std::vector<TrackEntry> tracks;

  std::filesystem::path resolve(const std::filesystem::path& p) const {
    return p.is_absolute() ? p : root / p;
  }
  // Tracks of one split that carry the given role, in manifest order.
  std::vector<const TrackEntry*> tracks_with(Split split, Role role) const;
  // Roles present for every track of the split.
  std::vector<Role> complete_roles(Split split) const;
  const TrackEntry& track(const std::string& id) const;

  // Unique ids, disjoint splits and (optionally) existing files.
  void validate(bool check_files = true) const;
};

// {"sample_rate": int, "tracks": [{"id", "split", "stems": {role: path}}]}.
// The root becomes the manifest's directory.
CorpusManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const CorpusManifest& manifest, const std::filesystem::path& path);
std::string manifest_to_json(const CorpusManifest& manifest);

// root/{train,test}/<track>/<role>.wav. When neither split directory exists,
// every track directory under root is treated as test data.
CorpusManifest load_slakh_layout(const std::filesystem::path& root, int sample_rate = 44100);

}  // namespace stemsim::corpus
