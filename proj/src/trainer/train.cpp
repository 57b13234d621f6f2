#include "stemsim/trainer/train.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "stemsim/error.h"

namespace stemsim::trainer {

void TrainConfig::validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw Error(ErrorKind::config, "train." + field + ": " + why);
  };
  if (!(margin >= 0.0)) fail("margin", "must be nonnegative");
  if (batch_size < 1) fail("batch_size", "must be at least 1");
  if (epochs < 1) fail("epochs", "must be at least 1");
  if (triplets_per_epoch && *triplets_per_epoch < 1) fail("triplets_per_epoch", "must be at least 1");
  if (!(learning_rate > 0.0)) fail("learning_rate", "must be positive");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0)) fail("adam_beta1", "must lie in [0, 1)");
  if (!(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) fail("adam_beta2", "must lie in [0, 1)");
  if (!(adam_eps > 0.0)) fail("adam_eps", "must be positive");
  if (n_trials < 1) fail("n_trials", "must be at least 1");
}

std::size_t TrainConfig::batches_per_epoch(std::size_t n_segments) const {
  const std::size_t triplets = triplets_per_epoch.value_or(n_segments);
  return (triplets + batch_size - 1) / batch_size;
}

double accumulate_triplet(const encoder::EncoderParams& params, const Eigen::MatrixXf& anchor,
                          const Eigen::MatrixXf& positive, const Eigen::MatrixXf& negative,
                          double margin, double weight, encoder::ParamGrads& grads,
                          TripletWorkspace& ws) {
  encoder::forward(params, anchor, ws.anchor);
  encoder::forward(params, positive, ws.positive);
  encoder::forward(params, negative, ws.negative);
  const auto& ea = ws.anchor.embedding;
  const auto& ep = ws.positive.embedding;
  const auto& en = ws.negative.embedding;

  const double d_ap = cosine_distance(ea, ep);
  const double d_an = cosine_distance(ea, en);
  const double loss = triplet_loss(d_ap, d_an, margin);
  const auto [g_ap, g_an] = triplet_loss_grad(d_ap, d_an, margin);
  if (g_ap == 0.0 && g_an == 0.0) return loss;

  const auto ap = cosine_distance_grad(ea, ep);
  const auto an = cosine_distance_grad(ea, en);
  // The anchor collects contributions from both distance terms.
  const Eigen::VectorXd grad_a = weight * (g_ap * ap.wrt_a + g_an * an.wrt_a);
  const Eigen::VectorXd grad_p = weight * (g_ap * ap.wrt_b);
  const Eigen::VectorXd grad_n = weight * (g_an * an.wrt_b);
  encoder::backward_accumulate(ws.anchor, grad_a, grads);
  encoder::backward_accumulate(ws.positive, grad_p, grads);
  encoder::backward_accumulate(ws.negative, grad_n, grads);
  return loss;
}

namespace {

SegmentIndex index_of(const FeatureSet& data) {
  std::vector<SegmentIndex::Key> keys;
  keys.reserve(data.items.size());
  for (const auto& m : data.items) keys.push_back({m.track_id, m.segment_index});
  return SegmentIndex(keys);
}

}  // namespace

TrainedModel train_trial(const FeatureSet& data, const encoder::EncoderArch& arch,
                         const TrainConfig& cfg, int trial, const EpochCallback& on_epoch) {
  cfg.validate();
  if (data.items.empty()) throw Error(ErrorKind::precondition, "training set is empty");
  const SegmentIndex index = index_of(data);
  index.check_sampleable();

  TrainedModel model;
  model.role = data.role;
  model.trial = trial;
  model.seed = cfg.seed + static_cast<std::uint64_t>(trial);
  model.config = cfg;
  model.params = encoder::init_params(arch, model.seed);

  std::seed_seq seq{static_cast<std::uint32_t>(model.seed & 0xFFFFFFFFu),
                    static_cast<std::uint32_t>(model.seed >> 32), 0x7472u};
  std::mt19937_64 rng(seq);
  AdamState adam;
  const AdamHyper hyper = cfg.adam();
  encoder::ParamGrads grads(arch);
  TripletWorkspace ws;
  const std::size_t n_batches = cfg.batches_per_epoch(data.items.size());
  const double weight = 1.0 / static_cast<double>(cfg.batch_size);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    double epoch_loss = 0.0;
    for (std::size_t b = 0; b < n_batches; ++b) {
      const auto batch = sample_triplet_batch(index, cfg.batch_size, rng);
      grads.set_zero();
      for (const auto& t : batch) {
        epoch_loss += accumulate_triplet(model.params, data.items[t.anchor].values,
                                         data.items[t.positive].values,
                                         data.items[t.negative].values, cfg.margin, weight,
                                         grads, ws);
      }
      optimizer_step(model.params, grads, adam, hyper);
    }
    const double mean = epoch_loss / static_cast<double>(n_batches * cfg.batch_size);
    model.loss_history.push_back(mean);
    if (on_epoch) on_epoch(trial, epoch, mean);
  }
  model.optimizer_steps = adam.step;
  return model;
}

std::vector<TrainedModel> train(const FeatureSet& data, const encoder::EncoderArch& arch,
                                const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  std::vector<TrainedModel> out;
  for (int t = 0; t < cfg.n_trials; ++t) out.push_back(train_trial(data, arch, cfg, t, on_epoch));
  return out;
}

std::vector<TrainedModel> train(const corpus::CorpusManifest& manifest, Role role,
                                const corpus::SegmentationConfig& seg,
                                const features::FeatureConfig& feat,
                                const encoder::EncoderArch& arch, const TrainConfig& cfg,
                                const EpochCallback& on_epoch) {
  auto data = build_feature_set(manifest, role, corpus::Split::train, seg, feat);
  if (data.items.empty()) {
    throw Error(ErrorKind::precondition,
                "no training segments for role " + std::string(role_name(role)));
  }
  return train(data, arch, cfg, on_epoch);
}

void write_loss_csv(const std::filesystem::path& path, const std::vector<double>& history) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw Error(ErrorKind::io, "cannot write '" + path.string() + "'");
  os << "epoch,mean_loss\n";
  char buf[64];
  for (std::size_t e = 0; e < history.size(); ++e) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g\n", e + 1, history[e]);
    os << buf;
  }
}

std::vector<double> read_loss_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorKind::io, "cannot open '" + path.string() + "'");
  std::string line;
  std::getline(is, line);
  std::vector<double> out;
  while (std::getline(is, line)) {
    auto comma = line.find(',');
    if (comma == std::string::npos) continue;
    out.push_back(std::stod(line.substr(comma + 1)));
  }
  return out;
}

}  // namespace stemsim::trainer
