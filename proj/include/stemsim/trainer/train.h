#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "stemsim/encoder/encoder.h"
#include "stemsim/trainer/adam.h"
#include "stemsim/trainer/dataset.h"
#include "stemsim/trainer/triplet.h"

namespace stemsim::trainer {

struct TrainConfig {
  double margin = 0.2;
  std::size_t batch_size = 64;
  int epochs = 150;
  std::optional<std::size_t> triplets_per_epoch;  // nullopt = training segment count
  double learning_rate = 1e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int n_trials = 5;
  std::uint64_t seed = 0;

  void validate() const;
  AdamHyper adam() const { return {learning_rate, adam_beta1, adam_beta2, adam_eps}; }
  std::size_t batches_per_epoch(std::size_t n_segments) const;
};

struct TrainedModel {
  Role role = Role::mix;
  int trial = 0;
  std::uint64_t seed = 0;  // derived per-trial seed
  encoder::EncoderParams params;
  std::vector<double> loss_history;  // mean triplet loss per epoch
  std::uint64_t optimizer_steps = 0;
  TrainConfig config;
};

// Called after every epoch with (trial, epoch, mean loss).
using EpochCallback = std::function<void(int, int, double)>;

// Forward passes for one triplet, the hinge loss under cosine distance, and
// backpropagation of `weight * loss` into grads. Returns the unweighted loss.
struct TripletWorkspace {
  encoder::ForwardCache anchor, positive, negative;
};
double accumulate_triplet(const encoder::EncoderParams& params, const Eigen::MatrixXf& anchor,
                          const Eigen::MatrixXf& positive, const Eigen::MatrixXf& negative,
                          double margin, double weight, encoder::ParamGrads& grads,
                          TripletWorkspace& ws);

// One trial: parameters from init_params(seed + trial), triplets from a
// generator seeded the same way, one Adam step per batch.
TrainedModel train_trial(const FeatureSet& data, const encoder::EncoderArch& arch,
                         const TrainConfig& cfg, int trial, const EpochCallback& on_epoch = {});

std::vector<TrainedModel> train(const FeatureSet& data, const encoder::EncoderArch& arch,
                                const TrainConfig& cfg, const EpochCallback& on_epoch = {});

std::vector<TrainedModel> train(const corpus::CorpusManifest& manifest, Role role,
                                const corpus::SegmentationConfig& seg,
                                const features::FeatureConfig& feat,
                                const encoder::EncoderArch& arch, const TrainConfig& cfg,
                                const EpochCallback& on_epoch = {});

// "epoch,mean_loss" rows.
void write_loss_csv(const std::filesystem::path& path, const std::vector<double>& history);
std::vector<double> read_loss_csv(const std::filesystem::path& path);

}  // namespace stemsim::trainer
