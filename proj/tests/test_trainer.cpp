#include <doctest.h>

#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <set>

#include "gradcheck.h"
#include "stemsim/error.h"
#include "stemsim/trainer/adam.h"
#include "stemsim/trainer/train.h"
#include "stemsim/trainer/triplet.h"
#include "support.h"

using namespace stemsim;
using namespace stemsim::trainer;

namespace {

// Tracks whose segments share a per-track pattern plus noise.
FeatureSet toy_features(int n_tracks, int per_track, const encoder::EncoderArch& arch,
                        std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  FeatureSet fs;
  fs.role = Role::drums;
  for (int t = 0; t < n_tracks; ++t) {
    Eigen::MatrixXf base = 2.0f * test::random_image(arch.input_height, arch.input_width, rng);
    for (int s = 0; s < per_track; ++s) {
      features::MelSpectrogram m;
      m.values = base + 0.3f * test::random_image(arch.input_height, arch.input_width, rng);
      m.track_id = "T" + std::to_string(10 + t);
      m.instrument = Role::drums;
      m.segment_index = 2 * s;
      fs.items.push_back(std::move(m));
    }
  }
  return fs;
}

SegmentIndex toy_index(int n_tracks, int per_track) {
  std::vector<SegmentIndex::Key> keys;
  for (int t = 0; t < n_tracks; ++t) {
    for (int s = 0; s < per_track; ++s) keys.push_back({"track" + std::to_string(t), s});
  }
  return SegmentIndex(keys);
}

TrainConfig quick_config() {
  TrainConfig c;
  c.batch_size = 8;
  c.epochs = 3;
  c.triplets_per_epoch = 24;
  c.learning_rate = 1e-3;
  c.n_trials = 2;
  c.seed = 5;
  return c;
}

}  // namespace

TEST_CASE("triplet loss on the tabulated cases") {
  CHECK(triplet_loss(0.3, 0.9, 0.2) == 0.0);
  for (double d : {0.0, 0.25, 1.0, 1.7, 2.0}) CHECK(triplet_loss(d, d, 0.2) == 0.2);
  CHECK(triplet_loss(0.9, 0.3, 0.2) == std::max(0.9 - 0.3 + 0.2, 0.0));
  CHECK(std::abs(triplet_loss(0.9, 0.3, 0.2) - 0.8) <= 4 * std::numeric_limits<double>::epsilon());
  CHECK(triplet_loss(0.7, 0.7, 0.0) == 0.0);
}

TEST_CASE("hinge subgradient") {
  CHECK(triplet_loss_grad(0.9, 0.3, 0.2) == std::pair{1.0, -1.0});
  CHECK(triplet_loss_grad(0.3, 0.9, 0.2) == std::pair{0.0, 0.0});
  CHECK(triplet_loss_grad(0.25, 0.5, 0.25) == std::pair{0.0, 0.0});  // exactly on the boundary
  CHECK(triplet_loss_grad(0.5, 0.5, 0.0) == std::pair{0.0, 0.0});
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (int i = 0; i < 1000; ++i) {
    const double a = u(rng), b = u(rng), m = u(rng) / 4;
    CHECK(triplet_loss(a, b, m) >= 0.0);
    const auto [ga, gb] = triplet_loss_grad(a, b, m);
    if (a - b + m > 0) {
      CHECK(ga == 1.0);
      CHECK(gb == -1.0);
    } else {
      CHECK(ga == 0.0);
      CHECK(gb == 0.0);
    }
  }
}

TEST_CASE("cosine distance values and gradient") {
  Eigen::VectorXd a(3), b(3);
  a << 1, 0, 0;
  b << 0, 1, 0;
  CHECK(cosine_distance(a, a) == 0.0);
  CHECK(cosine_distance(a, b) == 1.0);
  CHECK(cosine_distance(a, -a) == 2.0);
  CHECK(cosine_distance(a, 3.0 * b) == cosine_distance(3.0 * b, a));
  CHECK_THROWS_AS(cosine_distance(a, Eigen::VectorXd::Zero(3)), Error);

  std::mt19937_64 rng(2);
  std::normal_distribution<double> n;
  for (int t = 0; t < 50; ++t) {
    Eigen::VectorXd x(6), y(6);
    for (int i = 0; i < 6; ++i) {
      x[i] = n(rng);
      y[i] = n(rng);
    }
    auto g = cosine_distance_grad(x, y);
    for (int i = 0; i < 6; ++i) {
      Eigen::VectorXd xp = x, xm = x, yp = y, ym = y;
      xp[i] += 1e-6;
      xm[i] -= 1e-6;
      yp[i] += 1e-6;
      ym[i] -= 1e-6;
      CHECK(g.wrt_a[i] == doctest::Approx((cosine_distance(xp, y) - cosine_distance(xm, y)) / 2e-6).epsilon(1e-6));
      CHECK(g.wrt_b[i] == doctest::Approx((cosine_distance(x, yp) - cosine_distance(x, ym)) / 2e-6).epsilon(1e-6));
    }
  }
}

TEST_CASE("end-to-end triplet loss gradient matches central differences") {
  std::mt19937_64 rng(31);
  auto arch = test::reduced_arch();
  auto p = encoder::init_params(arch, 8);
  test::jitter_biases(p, rng);
  const auto xa = test::random_image(arch.input_height, arch.input_width, rng);
  const auto xp = test::random_image(arch.input_height, arch.input_width, rng);
  const auto xn = test::random_image(arch.input_height, arch.input_width, rng);
  const double margin = 1.0;  // keeps the hinge active across the FD stencil
  encoder::ParamGrads g(arch);
  TripletWorkspace ws;
  const double loss = accumulate_triplet(p, xa, xp, xn, margin, 1.0, g, ws);
  REQUIRE(loss > 0.0);
  auto f = [&](const encoder::EncoderParams& q) {
    return triplet_loss(cosine_distance(encoder::forward(q, xa), encoder::forward(q, xp)),
                        cosine_distance(encoder::forward(q, xa), encoder::forward(q, xn)), margin);
  };
  CHECK(f(p) == doctest::Approx(loss));
  auto res = test::check_gradient(p, std::as_const(g).data(), f);
  CHECK(res.max_rel < test::kGradTolerance);
}

TEST_CASE("sampled triplets satisfy the track rules and are deterministic") {
  auto index = toy_index(5, 6);
  std::mt19937_64 r1(7), r2(7);
  auto a = sample_triplet_batch(index, 64, r1);
  auto b = sample_triplet_batch(index, 64, r2);
  REQUIRE(a.size() == 64);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& t = a[i];
    CHECK(index.track_of(t.anchor) == index.track_of(t.positive));
    CHECK(t.anchor != t.positive);
    CHECK(index.track_of(t.negative) != index.track_of(t.anchor));
    CHECK(t.anchor == b[i].anchor);
    CHECK(t.positive == b[i].positive);
    CHECK(t.negative == b[i].negative);
  }
}

TEST_CASE("sampling marginals are uniform") {
  const int n_tracks = 5, per = 4;
  auto index = toy_index(n_tracks, per);
  std::mt19937_64 rng(11);
  std::map<std::size_t, int> anchor_track, positive_seg, negative_seg;
  std::map<std::pair<std::size_t, std::size_t>, int> pos_given_anchor;
  const int n = 10000;
  for (const auto& t : sample_triplet_batch(index, n, rng)) {
    ++anchor_track[index.track_of(t.anchor)];
    ++negative_seg[t.negative];
    ++pos_given_anchor[{t.anchor, t.positive}];
  }
  for (std::size_t tr = 0; tr < n_tracks; ++tr) {
    CHECK(std::abs(anchor_track[tr] - n / n_tracks) <= 0.2 * n / n_tracks);
  }
  // Every segment is a negative for 4/5 of anchors, each with probability 1/16.
  const double neg_expected = n * (static_cast<double>(n_tracks - 1) / n_tracks) / ((n_tracks - 1) * per);
  for (std::size_t s = 0; s < index.size(); ++s) CHECK(std::abs(negative_seg[s] - neg_expected) <= 0.2 * neg_expected);
  // Per anchor: n/20 draws spread over 3 positives.
  const double pos_expected = static_cast<double>(n) / (n_tracks * per) / (per - 1);
  for (const auto& [key, count] : pos_given_anchor) CHECK(std::abs(count - pos_expected) <= 0.35 * pos_expected);
  CHECK(pos_given_anchor.size() == static_cast<std::size_t>(n_tracks * per * (per - 1)));
}

TEST_CASE("sampling preconditions") {
  CHECK_THROWS_AS(toy_index(1, 5).check_sampleable(), Error);
  std::vector<SegmentIndex::Key> keys = {{"a", 0}, {"a", 1}, {"b", 0}};
  CHECK_THROWS_AS(SegmentIndex(keys).check_sampleable(), Error);
  keys.push_back({"a", 1});
  CHECK_THROWS_AS(SegmentIndex{keys}, Error);
  std::mt19937_64 rng(1);
  CHECK_THROWS_AS(sample_triplet_batch(toy_index(1, 5), 4, rng), Error);
}

TEST_CASE("Adam: zero gradients leave parameters unchanged") {
  std::vector<double> w = {1.0, -2.0, 0.5};
  const auto before = w;
  std::vector<double> g(3, 0.0);
  AdamState s;
  adam_step(w, g, s, AdamHyper{});
  CHECK(w == before);
  CHECK(s.step == 1);
}

TEST_CASE("Adam on w^2 matches a scalar reference and shrinks |w|") {
  // Reference simulation of bias-corrected Adam on f(w) = w^2.
  const AdamHyper h{0.01, 0.9, 0.999, 1e-8};
  double rw = 1.0, m = 0.0, v = 0.0;
  std::vector<double> w = {1.0};
  AdamState s;
  double prev = std::abs(w[0]);
  for (int t = 1; t <= 100; ++t) {
    const double g = 2.0 * rw;
    m = h.beta1 * m + (1 - h.beta1) * g;
    v = h.beta2 * v + (1 - h.beta2) * g * g;
    const double mhat = m / (1 - std::pow(h.beta1, t));
    const double vhat = v / (1 - std::pow(h.beta2, t));
    rw -= h.learning_rate * mhat / (std::sqrt(vhat) + h.eps);

    std::vector<double> grad = {2.0 * w[0]};
    adam_step(w, grad, s, h);
    CHECK(w[0] == doctest::Approx(rw).epsilon(1e-12));
    CHECK(std::abs(w[0]) < prev);
    prev = std::abs(w[0]);
  }
  CHECK(s.step == 100);
}

TEST_CASE("Adam rejects bad gradients without side effects") {
  std::vector<double> w = {1.0, 2.0};
  AdamState s;
  std::vector<double> nan = {0.0, std::nan("")};
  CHECK_THROWS_AS(adam_step(w, nan, s, AdamHyper{}), Error);
  CHECK(s.step == 0);
  CHECK(w == std::vector<double>{1.0, 2.0});
  std::vector<double> short_g = {1.0};
  CHECK_THROWS_AS(adam_step(w, short_g, s, AdamHyper{}), Error);
}

TEST_CASE("one epoch of one batch takes one optimizer step") {
  auto arch = test::reduced_arch();
  auto data = toy_features(3, 4, arch, 1);
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.triplets_per_epoch = 64;
  cfg.batch_size = 64;
  cfg.n_trials = 1;
  auto m = train_trial(data, arch, cfg, 0);
  CHECK(m.optimizer_steps == 1);
  CHECK(m.loss_history.size() == 1);
  cfg.triplets_per_epoch = 65;
  cfg.epochs = 2;
  CHECK(train_trial(data, arch, cfg, 0).optimizer_steps == 4);
}

TEST_CASE("training is deterministic and trials differ only by seed") {
  auto arch = test::reduced_arch();
  auto data = toy_features(4, 5, arch, 2);
  auto cfg = quick_config();
  auto a = train(data, arch, cfg);
  auto b = train(data, arch, cfg);
  REQUIRE(a.size() == 2);
  for (std::size_t t = 0; t < a.size(); ++t) {
    CHECK(a[t].loss_history == b[t].loss_history);
    CHECK(std::equal(a[t].params.data().begin(), a[t].params.data().end(),
                     std::as_const(b[t].params).data().begin()));
    CHECK(a[t].seed == cfg.seed + t);
    for (double l : a[t].loss_history) CHECK(l >= 0.0);
  }
  auto shifted = cfg;
  shifted.seed = cfg.seed + 1;
  auto alone = train_trial(data, arch, shifted, 0);
  CHECK(alone.loss_history == a[1].loss_history);
  CHECK(a[0].loss_history != a[1].loss_history);
}

TEST_CASE("loss falls on separable toy tracks") {
  auto arch = test::reduced_arch();
  auto data = toy_features(4, 6, arch, 3);
  auto cfg = quick_config();
  cfg.epochs = 25;
  cfg.n_trials = 1;
  auto m = train_trial(data, arch, cfg, 0);
  CHECK(m.loss_history.back() < m.loss_history.front());
}

TEST_CASE("config validation names the field") {
  TrainConfig c;
  c.margin = -0.1;
  CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("train.margin"), Error);
  c = TrainConfig{};
  c.batch_size = 0;
  CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("train.batch_size"), Error);
  c = TrainConfig{};
  c.epochs = 0;
  CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("train.epochs"), Error);
  CHECK(TrainConfig{}.batches_per_epoch(7200) == 113);
}

TEST_CASE("loss csv round trip") {
  auto dir = test::scratch_dir("losscsv");
  std::vector<double> h = {0.2, 0.1234567890123456789, 1e-9};
  write_loss_csv(dir / "l.csv", h);
  CHECK(read_loss_csv(dir / "l.csv") == h);
}
