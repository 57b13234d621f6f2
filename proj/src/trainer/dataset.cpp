#include "stemsim/trainer/dataset.h"

#include "stemsim/error.h"
#include "stemsim/features/cache.h"

namespace stemsim::trainer {

FeatureSet build_feature_set(const corpus::CorpusManifest& manifest, Role role,
                             corpus::Split split, const corpus::SegmentationConfig& seg,
                             const features::FeatureConfig& feat,
                             const std::optional<std::filesystem::path>& cache_dir) {
  features::LogMelExtractor extract(feat, manifest.sample_rate);
  std::optional<features::FeatureCache> cache;
  if (cache_dir) {
    cache.emplace(*cache_dir, features::feature_config_hash(feat, manifest.sample_rate, seg));
  }

  FeatureSet set;
  set.role = role;
  for (const auto* track : manifest.tracks_with(split, role)) {
    auto audio = corpus::load_track(manifest.resolve(track->stems.at(role)), manifest.sample_rate,
                                    track->id, role);
    for (const auto& segment : corpus::segment_track(audio, seg)) {
      if (cache) {
        if (auto hit = cache->load(track->id, role, segment.segment_index)) {
          set.items.push_back({std::move(*hit), track->id, role, segment.segment_index});
          continue;
        }
      }
      set.items.push_back(extract(segment));
      if (cache) cache->store(set.items.back());
    }
  }
  return set;
}

}  // namespace stemsim::trainer
