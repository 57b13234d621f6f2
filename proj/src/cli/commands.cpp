#include "stemsim/cli/commands.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "stemsim/cli/run_config.h"
#include "stemsim/corpus/manifest.h"
#include "stemsim/corpus/sdr.h"
#include "stemsim/corpus/synth.h"
#include "stemsim/corpus/wav.h"
#include "stemsim/encoder/model_file.h"
#include "stemsim/error.h"
#include "stemsim/evaluation/correlation.h"
#include "stemsim/evaluation/distance_matrix.h"
#include "stemsim/evaluation/knn.h"
#include "stemsim/evaluation/listening.h"
#include "stemsim/trainer/dataset.h"
#include "stemsim/trainer/train.h"

namespace stemsim::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Io {
  std::ostream& out;
  std::ostream& err;
};

// Shared by train / featurize: a config file plus flag overrides.
struct ConfigArgs {
  std::string config;
  std::string manifest;
  std::string out;
  std::optional<int> epochs;
  std::optional<int> trials;
  std::optional<std::uint64_t> seed;
};

void add_config_flags(CLI::App* cmd, ConfigArgs& a) {
  cmd->add_option("--config", a.config, "Run configuration JSON");
  cmd->add_option("--manifest", a.manifest, "Corpus manifest JSON or Slakh-layout directory");
  cmd->add_option("--out", a.out, "Output directory");
  cmd->add_option("--epochs", a.epochs, "Override train.epochs");
  cmd->add_option("--trials", a.trials, "Override train.n_trials");
  cmd->add_option("--seed", a.seed, "Override train.seed");
}

RunConfig resolve_config(const ConfigArgs& a) {
  RunConfig cfg = a.config.empty() ? RunConfig{} : load_run_config(a.config);
  if (!a.manifest.empty()) cfg.manifest = a.manifest;
  if (!a.out.empty()) cfg.output_dir = a.out;
  if (a.epochs) cfg.train.epochs = *a.epochs;
  if (a.trials) cfg.train.n_trials = *a.trials;
  if (a.seed) cfg.train.seed = *a.seed;
  if (cfg.manifest.empty()) throw Error(ErrorKind::config, "manifest: required (--manifest or config)");
  if (cfg.output_dir.empty()) throw Error(ErrorKind::config, "output_dir: required (--out or config)");
  return cfg;
}

corpus::CorpusManifest load_corpus(const fs::path& p) {
  if (fs::is_directory(p)) return corpus::load_slakh_layout(p);
  return corpus::load_manifest(p);
}

std::vector<Role> parse_roles(const std::string& spec, const std::vector<Role>& all) {
  if (spec.empty() || spec == "all") return all;
  std::vector<Role> out;
  std::stringstream ss(spec);
  std::string name;
  while (std::getline(ss, name, ',')) {
    auto r = parse_role(name);
    if (!r) throw Error(ErrorKind::config, "role: unknown role '" + name + "'");
    out.push_back(*r);
  }
  return out;
}

std::string fmt(double v, const char* spec = "%.6f") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream os(p, std::ios::trunc);
  if (!os) throw Error(ErrorKind::io, "cannot write '" + p.string() + "'");
  os << text;
}

fs::path role_dir(const fs::path& run, Role r) { return run / std::string(role_name(r)); }

fs::path model_path(const fs::path& dir, int trial) {
  return dir / ("trial_" + std::to_string(trial) + ".model");
}

std::vector<Role> roles_in_run(const fs::path& run) {
  std::vector<Role> out;
  for (Role r : kAllRoles) {
    if (fs::exists(role_dir(run, r) / "config.json")) out.push_back(r);
  }
  return out;
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  int train = 20;
  int test = 8;
  double duration = 70.0;
  std::uint64_t seed = 0;
  int sample_rate = 44100;
  std::string out;
};

int cmd_synth(const SynthArgs& a, Io io) {
  corpus::SynthSpec spec;
  spec.n_train_tracks = a.train;
  spec.n_test_tracks = a.test;
  spec.duration_s = a.duration;
  spec.sample_rate = a.sample_rate;
  auto m = corpus::synth_corpus(spec, a.seed, a.out);
  io.out << "wrote " << m.tracks.size() << " tracks (" << 5 * m.tracks.size()
         << " WAV files) and " << (fs::path(a.out) / "manifest.json").string() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- featurize

struct FeaturizeArgs {
  ConfigArgs cfg;
  std::string roles;
  std::string cache;
};

int cmd_featurize(const FeaturizeArgs& a, Io io) {
  RunConfig cfg = resolve_config(a.cfg);
  auto manifest = load_corpus(cfg.manifest);
  cfg.validate(manifest.sample_rate);
  const fs::path cache = a.cache.empty() ? cfg.output_dir / "feature_cache" : fs::path(a.cache);
  std::size_t total = 0;
  for (Role r : parse_roles(a.roles, cfg.roles)) {
    auto train = trainer::build_feature_set(manifest, r, corpus::Split::train,
                                            cfg.train_segmentation, cfg.features, cache);
    auto test = trainer::build_feature_set(manifest, r, corpus::Split::test,
                                           cfg.test_segmentation, cfg.features, cache);
    io.out << role_name(r) << ": " << train.items.size() << " train / " << test.items.size()
           << " test segments\n";
    total += train.items.size() + test.items.size();
  }
  io.out << total << " feature files in " << cache.string() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  ConfigArgs cfg;
  std::string role = "all";
  std::string cache;
  bool quiet = false;
};

int cmd_train(const TrainArgs& a, Io io) {
  RunConfig cfg = resolve_config(a.cfg);
  auto manifest = load_corpus(cfg.manifest);
  cfg.validate(manifest.sample_rate);

  std::vector<Role> roles;
  const auto available = manifest.complete_roles(corpus::Split::train);
  if (a.role == "all") {
    for (Role r : cfg.roles) {
      if (std::find(available.begin(), available.end(), r) != available.end()) roles.push_back(r);
    }
  } else {
    roles = parse_roles(a.role, cfg.roles);
  }
  if (roles.empty()) throw Error(ErrorKind::precondition, "no trainable roles in the corpus");

  const auto arch = cfg.arch(manifest.sample_rate);
  std::optional<fs::path> cache;
  if (!a.cache.empty()) cache = a.cache;

  for (Role r : roles) {
    const fs::path dir = role_dir(cfg.output_dir, r);
    fs::create_directories(dir);
    RunConfig snapshot = cfg;
    snapshot.roles = {r};
    save_run_config(snapshot, dir / "config.json");

    auto data = trainer::build_feature_set(manifest, r, corpus::Split::train,
                                           cfg.train_segmentation, cfg.features, cache);
    if (!a.quiet) {
      io.err << role_name(r) << ": " << data.items.size() << " training segments, "
             << cfg.train.batches_per_epoch(data.items.size()) << " batches per epoch\n";
    }
    trainer::EpochCallback progress;
    if (!a.quiet) {
      progress = [&](int trial, int epoch, double loss) {
        io.err << role_name(r) << " trial " << trial << " epoch " << epoch + 1 << "/"
               << cfg.train.epochs << " loss " << fmt(loss) << '\n';
      };
    }
    for (int t = 0; t < cfg.train.n_trials; ++t) {
      auto model = trainer::train_trial(data, arch, cfg.train, t, progress);
      json meta = {{"role", std::string(role_name(r))},
                   {"trial", t},
                   {"seed", model.seed},
                   {"optimizer_steps", model.optimizer_steps}};
      encoder::save_model(model_path(dir, t), model.params, meta);
      trainer::write_loss_csv(dir / ("trial_" + std::to_string(t) + "_loss.csv"), model.loss_history);
    }
    io.out << role_name(r) << ": " << cfg.train.n_trials << " models in " << dir.string() << '\n';
  }
  return kExitOk;
}

// ---------------------------------------------------------------- eval / distmat

struct RoleEval {
  Role role;
  std::vector<double> accuracy;
  eval::DistanceMatrix averaged;
  std::size_t n_segments = 0;
  std::uint64_t seed = 0;
};

RoleEval evaluate_role(const fs::path& run, Role r, bool with_knn, std::optional<std::size_t> k,
                       const std::optional<fs::path>& cache, Io io) {
  const fs::path dir = role_dir(run, r);
  RunConfig cfg = load_run_config(dir / "config.json");
  auto manifest = load_corpus(cfg.manifest);
  cfg.validate(manifest.sample_rate);
  const std::size_t kk = k.value_or(cfg.eval.k);

  auto test = trainer::build_feature_set(manifest, r, corpus::Split::test,
                                         cfg.test_segmentation, cfg.features, cache);
  if (test.items.empty()) throw Error(ErrorKind::precondition, "no test segments for " + std::string(role_name(r)));

  RoleEval result{r, {}, {}, test.items.size(), cfg.train.seed};
  std::vector<eval::DistanceMatrix> per_trial;
  for (int t = 0; t < cfg.train.n_trials; ++t) {
    auto model = encoder::load_model(model_path(dir, t));
    auto index = eval::embed_corpus(model.params, r, t, test.items);
    eval::write_embeddings_csv(dir / ("embeddings_trial" + std::to_string(t) + ".csv"), index);
    if (with_knn) result.accuracy.push_back(eval::knn_accuracy(index, kk));
    per_trial.push_back(eval::centroid_distance_matrix(index));
    eval::write_distance_csv(dir / ("distmat_trial" + std::to_string(t) + ".csv"), per_trial.back());
  }
  result.averaged = eval::average_matrices(per_trial);
  eval::write_distance_csv(dir / "distmat.csv", result.averaged);
  eval::write_distance_pgm(dir / "distmat.pgm", result.averaged);
  io.err << role_name(r) << ": " << test.items.size() << " test segments, " << per_trial.size()
         << " trials\n";
  return result;
}

struct EvalArgs {
  std::string run;
  std::string roles;
  std::optional<std::size_t> k;
  std::string cache;
};

json correlation_table(const std::vector<eval::DistanceMatrix>& ms, bool spearman) {
  json table = json::array();
  for (const auto& a : ms) {
    json row = json::array();
    for (const auto& b : ms) row.push_back(spearman ? eval::spearman_avg(a, b) : eval::pearson_upper(a, b));
    table.push_back(row);
  }
  return table;
}

void write_correlation_csv(const fs::path& p, const std::vector<eval::DistanceMatrix>& ms,
                           const json& table) {
  std::ostringstream os;
  os << "role";
  for (const auto& m : ms) os << ',' << role_name(m.role);
  os << '\n';
  for (std::size_t i = 0; i < ms.size(); ++i) {
    os << role_name(ms[i].role);
    for (std::size_t j = 0; j < ms.size(); ++j) os << ',' << fmt(table[i][j].get<double>(), "%.17g");
    os << '\n';
  }
  write_text(p, os.str());
}

json correlation_report(const fs::path& run, const std::vector<eval::DistanceMatrix>& ms) {
  json names = json::array();
  for (const auto& m : ms) names.push_back(std::string(role_name(m.role)));
  json pearson = correlation_table(ms, false);
  json spearman = correlation_table(ms, true);
  write_correlation_csv(run / "correlation_pearson.csv", ms, pearson);
  write_correlation_csv(run / "correlation_spearman.csv", ms, spearman);
  return {{"roles", names}, {"pearson", pearson}, {"spearman", spearman}};
}

void print_correlations(const json& report, std::ostream& out) {
  for (const char* kind : {"pearson", "spearman"}) {
    out << kind << '\n' << std::setw(8) << "";
    for (const auto& n : report["roles"]) out << std::setw(9) << n.get<std::string>();
    out << '\n';
    for (std::size_t i = 0; i < report["roles"].size(); ++i) {
      out << std::setw(8) << report["roles"][i].get<std::string>();
      for (const auto& v : report[kind][i]) out << std::setw(9) << fmt(v.get<double>(), "%.4f");
      out << '\n';
    }
  }
}

int cmd_eval(const EvalArgs& a, Io io, bool with_knn) {
  const fs::path run = a.run;
  auto roles = parse_roles(a.roles, roles_in_run(run));
  if (roles.empty()) throw Error(ErrorKind::not_found, "no trained roles under '" + run.string() + "'");
  std::optional<fs::path> cache;
  if (!a.cache.empty()) cache = a.cache;

  json report = {{"k", nullptr}, {"roles", json::object()}};
  std::vector<eval::DistanceMatrix> averaged;
  for (Role r : roles) {
    auto res = evaluate_role(run, r, with_knn, a.k, cache, io);
    report["seed"] = res.seed;
    averaged.push_back(res.averaged);
    json entry = {{"n_test_segments", res.n_segments}, {"n_test_tracks", res.averaged.size()},
                  {"trials", res.averaged.trials_averaged}};
    if (with_knn) {
      double mean = 0.0;
      for (double v : res.accuracy) mean += v;
      mean /= static_cast<double>(res.accuracy.size());
      double var = 0.0;
      for (double v : res.accuracy) var += (v - mean) * (v - mean);
      var /= static_cast<double>(res.accuracy.size());
      entry["trial_accuracy"] = res.accuracy;
      entry["mean_accuracy"] = mean;
      entry["variance"] = var;
      io.out << role_name(r) << ": accuracy " << fmt(100.0 * mean, "%.2f") << "% variance "
             << fmt(var, "%.3g") << '\n';
    }
    report["roles"][std::string(role_name(r))] = entry;
  }
  if (with_knn) {
    const RunConfig cfg = load_run_config(role_dir(run, roles.front()) / "config.json");
    report["k"] = a.k.value_or(cfg.eval.k);
  } else {
    report.erase("k");
  }
  report["correlation"] = correlation_report(run, averaged);
  if (with_knn) {
    write_text(run / "eval_report.json", report.dump(2) + "\n");
    print_correlations(report["correlation"], io.out);
  } else {
    for (const auto& m : averaged) {
      io.out << role_name(m.role) << ": " << (role_dir(run, m.role) / "distmat.csv").string() << '\n';
    }
  }
  return kExitOk;
}

// ---------------------------------------------------------------- correlate

struct CorrelateArgs {
  std::string run;
  std::string roles;
  std::string a;
  std::string b;
};

int cmd_correlate(const CorrelateArgs& a, Io io) {
  if (!a.a.empty() || !a.b.empty()) {
    if (a.a.empty() || a.b.empty()) throw Error(ErrorKind::config, "correlate: --a and --b go together");
    auto ma = eval::read_distance_csv(a.a);
    auto mb = eval::read_distance_csv(a.b);
    io.out << "pearson_upper " << fmt(eval::pearson_upper(ma, mb), "%.10f") << '\n'
           << "spearman_avg " << fmt(eval::spearman_avg(ma, mb), "%.10f") << '\n';
    return kExitOk;
  }
  if (a.run.empty()) throw Error(ErrorKind::config, "correlate: give --run or --a/--b");
  const fs::path run = a.run;
  std::vector<eval::DistanceMatrix> ms;
  for (Role r : parse_roles(a.roles, roles_in_run(run))) {
    const fs::path p = role_dir(run, r) / "distmat.csv";
    if (!fs::exists(p)) throw Error(ErrorKind::not_found, p.string() + " missing; run eval or distmat first");
    ms.push_back(eval::read_distance_csv(p, r));
  }
  if (ms.empty()) throw Error(ErrorKind::not_found, "no distance matrices under '" + run.string() + "'");
  print_correlations(correlation_report(run, ms), io.out);
  return kExitOk;
}

// ---------------------------------------------------------------- query

struct QueryArgs {
  std::string run;
  std::string role;
  std::string matrix;
  std::string track;
  std::size_t top = 5;
};

eval::DistanceMatrix role_matrix(const fs::path& run, Role r, Io io) {
  const fs::path p = role_dir(run, r) / "distmat.csv";
  if (fs::exists(p)) return eval::read_distance_csv(p, r);
  if (!fs::exists(role_dir(run, r) / "config.json")) {
    throw Error(ErrorKind::not_found, "no trained " + std::string(role_name(r)) + " model under '" + run.string() + "'");
  }
  return evaluate_role(run, r, false, std::nullopt, std::nullopt, io).averaged;
}

int cmd_query(const QueryArgs& a, Io io) {
  eval::DistanceMatrix m;
  if (!a.matrix.empty()) {
    m = eval::read_distance_csv(a.matrix);
  } else {
    if (a.run.empty() || a.role.empty()) throw Error(ErrorKind::config, "query: give --matrix or --run with --role");
    m = role_matrix(a.run, role_from_name(a.role), io);
  }
  for (const auto& [id, d] : eval::query_similar(m, a.track, a.top)) {
    io.out << id << '\t' << fmt(d, "%.6f") << '\n';
  }
  return kExitOk;
}

// ---------------------------------------------------------------- listening-sets

struct ListeningArgs {
  std::string run;
  std::string role = "all";
  std::size_t n = 8;
  std::string out;
  std::optional<std::uint64_t> seed;
  double snippet_seconds = 10.0;
  std::optional<double> snippet_offset;
};

int cmd_listening_sets(const ListeningArgs& a, Io io) {
  const fs::path run = a.run;
  const auto trained = roles_in_run(run);
  auto roles = parse_roles(a.role, trained);
  if (roles.empty()) throw Error(ErrorKind::not_found, "no trained roles under '" + run.string() + "'");
  const fs::path out = a.out.empty() ? run / "listening_sets" : fs::path(a.out);
  fs::create_directories(out);

  std::map<Role, eval::DistanceMatrix> matrices;
  auto matrix = [&](Role r) -> const eval::DistanceMatrix& {
    auto it = matrices.find(r);
    if (it == matrices.end()) it = matrices.emplace(r, role_matrix(run, r, io)).first;
    return it->second;
  };

  json sets = json::array();
  for (Role r : roles) {
    const RunConfig cfg = load_run_config(role_dir(run, r) / "config.json");
    const std::uint64_t seed = a.seed.value_or(cfg.train.seed);
    auto manifest = load_corpus(cfg.manifest);

    // Stems are contrasted with the mix metric; the mix with a random stem metric.
    std::vector<eval::DistanceMatrix> contrast;
    if (r == Role::mix) {
      for (Role s : kStemRoles) {
        if (std::find(trained.begin(), trained.end(), s) != trained.end()) contrast.push_back(matrix(s));
      }
    } else if (std::find(trained.begin(), trained.end(), Role::mix) != trained.end()) {
      contrast.push_back(matrix(Role::mix));
    }
    if (contrast.empty()) {
      throw Error(ErrorKind::precondition, "no contrast metric trained for " + std::string(role_name(r)));
    }

    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(r), 0x6c73u};
    std::mt19937_64 rng(seq);
    auto built = eval::build_listening_sets(matrix(r), contrast, rng, a.n);

    const auto snippet_len = static_cast<std::size_t>(std::llround(a.snippet_seconds * manifest.sample_rate));
    const auto step = cfg.test_segmentation.hop_length(manifest.sample_rate);
    std::map<std::string, std::pair<std::size_t, corpus::TrackAudio>> audio;
    auto snippet = [&](const std::string& id) -> std::pair<std::size_t, std::vector<float>> {
      auto it = audio.find(id);
      if (it == audio.end()) {
        const auto& entry = manifest.track(id);
        auto track = corpus::load_track(manifest.resolve(entry.stems.at(r)), manifest.sample_rate, id, r);
        std::size_t offset = 0;
        if (a.snippet_offset) {
          offset = static_cast<std::size_t>(std::llround(*a.snippet_offset * manifest.sample_rate));
          if (offset + snippet_len > track.samples.size()) {
            offset = track.samples.size() > snippet_len ? track.samples.size() - snippet_len : 0;
          }
        } else {
          offset = corpus::first_active_offset(track.samples, snippet_len, step,
                                               cfg.test_segmentation.silence_threshold);
        }
        it = audio.emplace(id, std::make_pair(offset, std::move(track))).first;
      }
      const auto& [offset, track] = it->second;
      const std::size_t end = std::min(track.samples.size(), offset + snippet_len);
      return {offset, std::vector<float>(track.samples.begin() + static_cast<std::ptrdiff_t>(offset),
                                         track.samples.begin() + static_cast<std::ptrdiff_t>(end))};
    };

    for (std::size_t i = 0; i < built.size(); ++i) {
      const auto& s = built[i];
      char stem[64];
      std::snprintf(stem, sizeof stem, "%s_%02zu", std::string(role_name(r)).c_str(), i);
      json offsets = json::object(), files = json::object();
      for (const auto& [slot, id] : {std::pair<const char*, std::string>{"anchor", s.anchor},
                                     {"positive", s.positive},
                                     {"negative", s.negative}}) {
        auto [offset, clip] = snippet(id);
        const std::string file = std::string(stem) + "_" + slot + ".wav";
        corpus::write_wav16(out / file, clip, manifest.sample_rate);
        offsets[slot] = static_cast<double>(offset) / manifest.sample_rate;
        files[slot] = file;
      }
      sets.push_back({{"anchor", s.anchor},
                      {"positive", s.positive},
                      {"negative", s.negative},
                      {"role", std::string(role_name(s.presented_role))},
                      {"contrast_role", std::string(role_name(s.contrast_role))},
                      {"snippet_seconds", a.snippet_seconds},
                      {"snippet_offsets", offsets},
                      {"files", files},
                      {"seed", seed}});
    }
    io.out << role_name(r) << ": " << built.size() << " sets\n";
  }
  write_text(out / "listening_sets.json", sets.dump(2) + "\n");
  io.out << sets.size() << " sets, " << 3 * sets.size() << " snippets in " << out.string() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- sdr

struct SdrArgs {
  std::string reference;
  std::string estimate;
};

int cmd_sdr(const SdrArgs& a, Io io) {
  auto ref = corpus::downmix(corpus::read_wav(a.reference));
  auto est = corpus::downmix(corpus::read_wav(a.estimate));
  io.out << fmt(corpus::compute_sdr(std::span<const float>(ref), std::span<const float>(est)), "%.4f")
         << " dB\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Io io{out, err};
  CLI::App app{"Per-instrument music similarity via triplet metric learning", "stemsim"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "Generate a synthetic multi-stem corpus");
  c_synth->add_option("--train", synth.train, "Training tracks")->check(CLI::PositiveNumber);
  c_synth->add_option("--test", synth.test, "Test tracks")->check(CLI::PositiveNumber);
  c_synth->add_option("--duration", synth.duration, "Seconds per track");
  c_synth->add_option("--seed", synth.seed, "Generator seed");
  c_synth->add_option("--sample-rate", synth.sample_rate, "Sample rate in Hz");
  c_synth->add_option("--out", synth.out, "Output directory")->required();

  FeaturizeArgs featurize;
  auto* c_feat = app.add_subcommand("featurize", "Warm the log-mel feature cache");
  add_config_flags(c_feat, featurize.cfg);
  c_feat->add_option("--roles", featurize.roles, "Comma-separated roles or 'all'");
  c_feat->add_option("--cache", featurize.cache, "Cache directory");

  TrainArgs train;
  auto* c_train = app.add_subcommand("train", "Train per-role encoders");
  add_config_flags(c_train, train.cfg);
  c_train->add_option("--role", train.role, "Role name(s) or 'all'");
  c_train->add_option("--cache", train.cache, "Feature cache directory");
  c_train->add_flag("--quiet", train.quiet, "No per-epoch progress");

  EvalArgs evaluate;
  auto* c_eval = app.add_subcommand("eval", "kNN accuracy, distance matrices and correlations");
  c_eval->add_option("--run", evaluate.run, "Training run directory")->required();
  c_eval->add_option("--roles", evaluate.roles, "Comma-separated roles (default: all trained)");
  c_eval->add_option("--k", evaluate.k, "Neighbors in the vote")->check(CLI::PositiveNumber);
  c_eval->add_option("--cache", evaluate.cache, "Feature cache directory");

  EvalArgs distmat;
  auto* c_dist = app.add_subcommand("distmat", "Centroid distance matrices only");
  c_dist->add_option("--run", distmat.run, "Training run directory")->required();
  c_dist->add_option("--roles", distmat.roles, "Comma-separated roles (default: all trained)");
  c_dist->add_option("--cache", distmat.cache, "Feature cache directory");

  CorrelateArgs correlate;
  auto* c_corr = app.add_subcommand("correlate", "Cross-metric Pearson / Spearman tables");
  c_corr->add_option("--run", correlate.run, "Run directory with distance matrices");
  c_corr->add_option("--roles", correlate.roles, "Comma-separated roles");
  c_corr->add_option("--a", correlate.a, "First distance matrix CSV");
  c_corr->add_option("--b", correlate.b, "Second distance matrix CSV");

  QueryArgs query;
  auto* c_query = app.add_subcommand("query", "Most similar tracks under one metric");
  c_query->add_option("--run", query.run, "Run directory");
  c_query->add_option("--role", query.role, "Role whose metric to use");
  c_query->add_option("--matrix", query.matrix, "Distance matrix CSV instead of --run/--role");
  c_query->add_option("--track", query.track, "Query track id")->required();
  c_query->add_option("--top", query.top, "Number of results");

  ListeningArgs listen;
  auto* c_listen = app.add_subcommand("listening-sets", "Build anchor/positive/negative audio sets");
  c_listen->add_option("--run", listen.run, "Run directory")->required();
  c_listen->add_option("--role", listen.role, "Role name(s) or 'all'");
  c_listen->add_option("--n", listen.n, "Sets per role");
  c_listen->add_option("--out", listen.out, "Output directory (default: <run>/listening_sets)");
  c_listen->add_option("--seed", listen.seed, "Seed (default: the run's seed)");
  c_listen->add_option("--snippet-seconds", listen.snippet_seconds, "Clip length")->check(CLI::PositiveNumber);
  c_listen->add_option("--snippet-offset", listen.snippet_offset, "Fixed clip start in seconds");

  SdrArgs sdr;
  auto* c_sdr = app.add_subcommand("sdr", "Scale-invariant SDR of an estimate against a reference");
  c_sdr->add_option("--reference", sdr.reference, "Reference WAV")->required();
  c_sdr->add_option("--estimate", sdr.estimate, "Estimate WAV")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (c_synth->parsed()) return cmd_synth(synth, io);
    if (c_feat->parsed()) return cmd_featurize(featurize, io);
    if (c_train->parsed()) return cmd_train(train, io);
    if (c_eval->parsed()) return cmd_eval(evaluate, io, true);
    if (c_dist->parsed()) return cmd_eval(distmat, io, false);
    if (c_corr->parsed()) return cmd_correlate(correlate, io);
    if (c_query->parsed()) return cmd_query(query, io);
    if (c_listen->parsed()) return cmd_listening_sets(listen, io);
    if (c_sdr->parsed()) return cmd_sdr(sdr, io);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.kind() == ErrorKind::config ? kExitUsage : kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace stemsim::cli
