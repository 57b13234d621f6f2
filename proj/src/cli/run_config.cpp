#include "stemsim/cli/run_config.h"

#include <fstream>
#include <set>

#include "stemsim/encoder/model_file.h"
#include "stemsim/error.h"

namespace stemsim::cli {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& why) {
  throw Error(ErrorKind::config, field + ": " + why);
}

void reject_unknown(const json& j, const std::string& ctx, const std::set<std::string>& known) {
  if (!j.is_object()) fail(ctx.empty() ? "config" : ctx, "expected an object");
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) fail(ctx.empty() ? key : ctx + "." + key, "unknown field");
  }
}

template <typename T>
void read(const json& j, const char* name, const std::string& ctx, T& out) {
  if (!j.contains(name)) return;
  try {
    out = j.at(name).get<T>();
  } catch (const json::exception&) {
    fail(ctx + "." + name, "wrong type");
  }
}

template <typename T>
void read_optional(const json& j, const char* name, const std::string& ctx, std::optional<T>& out) {
  if (!j.contains(name)) return;
  if (j.at(name).is_null()) {
    out.reset();
    return;
  }
  T v{};
  read(j, name, ctx, v);
  out = v;
}

// Non-negative integer fields arrive as JSON numbers; negative values would
// wrap in an unsigned target.
void read_count(const json& j, const char* name, const std::string& ctx, std::size_t& out) {
  if (!j.contains(name)) return;
  const auto& v = j.at(name);
  if (!v.is_number_integer()) fail(ctx + "." + name, "must be an integer");
  if (v.get<long long>() < 0) fail(ctx + "." + name, "must be nonnegative");
  out = v.get<std::size_t>();
}

void read_optional_count(const json& j, const char* name, const std::string& ctx,
                         std::optional<std::size_t>& out) {
  if (!j.contains(name)) return;
  if (j.at(name).is_null()) {
    out.reset();
    return;
  }
  std::size_t v = 0;
  read_count(j, name, ctx, v);
  out = v;
}

json optional_json(const std::optional<std::size_t>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

RunConfig RunConfig::desk() {
  RunConfig c;
  c.features.n_fft = 2048;
  c.features.hop = 1024;
  c.features.n_mels = 64;
  c.blocks.clear();
  for (int ch : {8, 16, 32, 32}) c.blocks.push_back({ch, 3, 3, 2, 2});
  c.embedding_dim = 128;
  c.train.epochs = 30;
  c.train.n_trials = 2;
  c.train.seed = 1;
  c.train.learning_rate = 1e-3;
  return c;
}

encoder::EncoderArch RunConfig::arch(int sample_rate) const {
  encoder::EncoderArch a;
  a.input_height = features.n_mels;
  a.input_width = static_cast<int>(
      features::frame_count(train_segmentation.segment_length(sample_rate), features));
  a.blocks = blocks;
  a.embedding_dim = embedding_dim;
  return a;
}

void RunConfig::validate(int sample_rate) const {
  auto wrap = [](const std::string& ctx, auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::config) throw;
      fail(ctx, e.what());
    }
  };
  wrap("segmentation", [&] {
    train_segmentation.validate();
    test_segmentation.validate();
  });
  if (train_segmentation.segment_seconds != test_segmentation.segment_seconds) {
    fail("segmentation.segment_seconds", "must agree between splits");
  }
  wrap("features", [&] { features.validate(sample_rate); });
  wrap("encoder", [&] { arch(sample_rate).validate(); });
  train.validate();
  if (eval.k < 1) fail("eval.k", "must be at least 1");
  if (roles.empty()) fail("roles", "must list at least one role");
}

json RunConfig::to_json() const {
  json blocks_json = encoder::arch_to_json(arch(corpus::kDefaultSampleRate)).at("blocks");
  json fmax = features.fmax ? json(*features.fmax) : json(nullptr);
  json role_names = json::array();
  for (Role r : roles) role_names.push_back(std::string(role_name(r)));
  return {
      {"manifest", manifest.generic_string()},
      {"output_dir", output_dir.generic_string()},
      {"segmentation",
       {{"segment_seconds", train_segmentation.segment_seconds},
        {"overlap_fraction", train_segmentation.overlap_fraction},
        {"silence_threshold", train_segmentation.silence_threshold},
        {"train_max_segments", optional_json(train_segmentation.max_segments)},
        {"test_max_segments", optional_json(test_segmentation.max_segments)}}},
      {"features",
       {{"n_fft", features.n_fft},
        {"hop", features.hop},
        {"n_mels", features.n_mels},
        {"fmin", features.fmin},
        {"fmax", fmax},
        {"log_floor", features.log_floor}}},
      {"encoder", {{"blocks", blocks_json}, {"embedding_dim", embedding_dim}}},
      {"train",
       {{"margin", train.margin},
        {"batch_size", train.batch_size},
        {"epochs", train.epochs},
        {"triplets_per_epoch", optional_json(train.triplets_per_epoch)},
        {"learning_rate", train.learning_rate},
        {"adam_beta1", train.adam_beta1},
        {"adam_beta2", train.adam_beta2},
        {"adam_eps", train.adam_eps},
        {"n_trials", train.n_trials},
        {"seed", train.seed}}},
      {"eval", {{"k", eval.k}, {"top_n", eval.top_n}}},
      {"roles", role_names},
  };
}

RunConfig RunConfig::from_json(const json& j) {
  RunConfig c;
  reject_unknown(j, "", {"manifest", "output_dir", "segmentation", "features", "encoder", "train",
                         "eval", "roles"});
  std::string s;
  if (j.contains("manifest")) {
    read(j, "manifest", "config", s);
    c.manifest = s;
  }
  if (j.contains("output_dir")) {
    read(j, "output_dir", "config", s);
    c.output_dir = s;
  }

  if (j.contains("segmentation")) {
    const auto& js = j.at("segmentation");
    const std::string ctx = "segmentation";
    reject_unknown(js, ctx, {"segment_seconds", "overlap_fraction", "silence_threshold",
                             "train_max_segments", "test_max_segments"});
    for (auto* seg : {&c.train_segmentation, &c.test_segmentation}) {
      read(js, "segment_seconds", ctx, seg->segment_seconds);
      read(js, "overlap_fraction", ctx, seg->overlap_fraction);
      read(js, "silence_threshold", ctx, seg->silence_threshold);
    }
    read_optional_count(js, "train_max_segments", ctx, c.train_segmentation.max_segments);
    read_optional_count(js, "test_max_segments", ctx, c.test_segmentation.max_segments);
  }

  if (j.contains("features")) {
    const auto& jf = j.at("features");
    const std::string ctx = "features";
    reject_unknown(jf, ctx, {"n_fft", "hop", "n_mels", "fmin", "fmax", "log_floor"});
    read(jf, "n_fft", ctx, c.features.n_fft);
    read(jf, "hop", ctx, c.features.hop);
    read(jf, "n_mels", ctx, c.features.n_mels);
    read(jf, "fmin", ctx, c.features.fmin);
    read_optional(jf, "fmax", ctx, c.features.fmax);
    read(jf, "log_floor", ctx, c.features.log_floor);
  }

  if (j.contains("encoder")) {
    const auto& je = j.at("encoder");
    reject_unknown(je, "encoder", {"blocks", "embedding_dim"});
    read(je, "embedding_dim", "encoder", c.embedding_dim);
    if (je.contains("blocks")) {
      // Input size is derived, so parse blocks against a placeholder that
      // cannot collapse; validate() checks the real input later.
      json probe = {{"input", {1 << 20, 1 << 20}}, {"blocks", je.at("blocks")},
                    {"embedding_dim", std::max(1, c.embedding_dim)}};
      c.blocks = encoder::arch_from_json(probe).blocks;
    }
  }

  if (j.contains("train")) {
    const auto& jt = j.at("train");
    const std::string ctx = "train";
    reject_unknown(jt, ctx, {"margin", "batch_size", "epochs", "triplets_per_epoch",
                             "learning_rate", "adam_beta1", "adam_beta2", "adam_eps", "n_trials",
                             "seed"});
    read(jt, "margin", ctx, c.train.margin);
    read_count(jt, "batch_size", ctx, c.train.batch_size);
    read(jt, "epochs", ctx, c.train.epochs);
    read_optional_count(jt, "triplets_per_epoch", ctx, c.train.triplets_per_epoch);
    read(jt, "learning_rate", ctx, c.train.learning_rate);
    read(jt, "adam_beta1", ctx, c.train.adam_beta1);
    read(jt, "adam_beta2", ctx, c.train.adam_beta2);
    read(jt, "adam_eps", ctx, c.train.adam_eps);
    read(jt, "n_trials", ctx, c.train.n_trials);
    if (jt.contains("seed")) {
      if (!jt.at("seed").is_number_unsigned()) fail("train.seed", "must be a nonnegative integer");
      c.train.seed = jt.at("seed").get<std::uint64_t>();
    }
  }

  if (j.contains("eval")) {
    const auto& jv = j.at("eval");
    reject_unknown(jv, "eval", {"k", "top_n"});
    read_count(jv, "k", "eval", c.eval.k);
    read_count(jv, "top_n", "eval", c.eval.top_n);
  }

  if (j.contains("roles")) {
    if (!j.at("roles").is_array()) fail("roles", "expected an array of role names");
    c.roles.clear();
    for (const auto& r : j.at("roles")) {
      if (!r.is_string()) fail("roles", "expected role names");
      auto role = parse_role(r.get<std::string>());
      if (!role) fail("roles", "unknown role '" + r.get<std::string>() + "'");
      c.roles.push_back(*role);
    }
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorKind::config, "cannot open config '" + path.string() + "'");
  json j;
  try {
    j = json::parse(is);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::config, path.string() + ": " + e.what());
  }
  return RunConfig::from_json(j);
}

void save_run_config(const RunConfig& cfg, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw Error(ErrorKind::io, "cannot write '" + path.string() + "'");
  os << cfg.to_json().dump(2) << '\n';
}

}  // namespace stemsim::cli
