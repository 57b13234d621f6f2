#include "stemsim/corpus/manifest.h"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "stemsim/error.h"

namespace stemsim::corpus {

using nlohmann::json;

std::string_view split_name(Split split) { return split == Split::train ? "train" : "test"; }

std::vector<const TrackEntry*> CorpusManifest::tracks_with(Split split, Role role) const {
  std::vector<const TrackEntry*> out;
  for (const auto& t : tracks) {
    if (t.split == split && t.stems.contains(role)) out.push_back(&t);
  }
  return out;
}

std::vector<Role> CorpusManifest::complete_roles(Split split) const {
  std::vector<Role> out;
  for (Role r : kAllRoles) {
    bool any = false, all = true;
    for (const auto& t : tracks) {
      if (t.split != split) continue;
      any = true;
      all = all && t.stems.contains(r);
    }
    if (any && all) out.push_back(r);
  }
  return out;
}

const TrackEntry& CorpusManifest::track(const std::string& id) const {
  for (const auto& t : tracks) {
    if (t.id == id) return t;
  }
  throw Error(ErrorKind::not_found, "unknown track '" + id + "'");
}

void CorpusManifest::validate(bool check_files) const {
  if (sample_rate <= 0) throw Error(ErrorKind::config, "sample_rate must be positive");
  std::set<std::string> seen;
  for (const auto& t : tracks) {
    if (t.id.empty()) throw Error(ErrorKind::config, "track with empty id");
    // A duplicate id across splits would also make the splits overlap.
    if (!seen.insert(t.id).second) {
      throw Error(ErrorKind::config, "duplicate track id '" + t.id + "'");
    }
    if (!check_files) continue;
    for (const auto& [role, p] : t.stems) {
      if (!std::filesystem::exists(resolve(p))) {
        throw Error(ErrorKind::io, "track '" + t.id + "' " + std::string(role_name(role)) +
                                       " stem missing: " + resolve(p).string());
      }
    }
  }
}

std::string manifest_to_json(const CorpusManifest& manifest) {
  json doc;
  doc["sample_rate"] = manifest.sample_rate;
  doc["tracks"] = json::array();
  for (const auto& t : manifest.tracks) {
    json stems = json::object();
    for (const auto& [role, p] : t.stems) stems[std::string(role_name(role))] = p.generic_string();
    doc["tracks"].push_back({{"id", t.id}, {"split", std::string(split_name(t.split))}, {"stems", stems}});
  }
  return doc.dump(2) + "\n";
}

void save_manifest(const CorpusManifest& manifest, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error(ErrorKind::io, "cannot write manifest '" + path.string() + "'");
  os << manifest_to_json(manifest);
}

CorpusManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorKind::io, "cannot open manifest '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(is);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::format, path.string() + ": " + e.what());
  }

  CorpusManifest m;
  m.root = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  try {
    m.sample_rate = doc.at("sample_rate").get<int>();
    for (const auto& jt : doc.at("tracks")) {
      TrackEntry t;
      t.id = jt.at("id").get<std::string>();
      const auto split = jt.at("split").get<std::string>();
      if (split == "train") {
        t.split = Split::train;
      } else if (split == "test") {
        t.split = Split::test;
      } else {
        throw Error(ErrorKind::config, "track '" + t.id + "': split must be train or test");
      }
      for (const auto& [name, p] : jt.at("stems").items()) {
        auto role = parse_role(name);
        if (!role) throw Error(ErrorKind::config, "track '" + t.id + "': unknown role '" + name + "'");
        t.stems[*role] = p.get<std::string>();
      }
      m.tracks.push_back(std::move(t));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::format, path.string() + ": " + e.what());
  }
  m.validate();
  return m;
}

namespace {

void collect_tracks(const std::filesystem::path& dir, Split split, CorpusManifest& m) {
  std::vector<std::filesystem::path> track_dirs;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_directory()) track_dirs.push_back(e.path());
  }
  std::sort(track_dirs.begin(), track_dirs.end());
  for (const auto& td : track_dirs) {
    TrackEntry t;
    t.id = td.filename().string();
    t.split = split;
    for (Role r : kAllRoles) {
      auto f = td / (std::string(role_name(r)) + ".wav");
      if (std::filesystem::exists(f)) t.stems[r] = std::filesystem::relative(f, m.root);
    }
    if (!t.stems.empty()) m.tracks.push_back(std::move(t));
  }
}

}  // namespace

CorpusManifest load_slakh_layout(const std::filesystem::path& root, int sample_rate) {
  if (!std::filesystem::is_directory(root)) {
    throw Error(ErrorKind::io, "corpus root '" + root.string() + "' is not a directory");
  }
  CorpusManifest m;
  m.root = root;
  m.sample_rate = sample_rate;
  const bool has_train = std::filesystem::is_directory(root / "train");
  const bool has_test = std::filesystem::is_directory(root / "test");
  if (has_train) collect_tracks(root / "train", Split::train, m);
  if (has_test) collect_tracks(root / "test", Split::test, m);
  if (!has_train && !has_test) collect_tracks(root, Split::test, m);
  m.validate();
  return m;
}

}  // namespace stemsim::corpus
