// pssl: command-line front end for the experiment library.
//
//   pssl sim <config.json>        closed-loop scheme comparison
//   pssl offline <config.json>    learning curves on a synthetic dataset
//   pssl analyze [flags]          collision-risk calculator / frame-log metrics
//   pssl dict train|inspect ...   texton dictionaries

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "pssl/analytics.hpp"
#include "pssl/batch.hpp"
#include "pssl/config.hpp"
#include "pssl/error.hpp"
#include "pssl/offline.hpp"
#include "pssl/schemes.hpp"
#include "pssl/vbow.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

pssl::config::ExperimentConfig load(const std::string& path) {
  auto cfg = pssl::config::load_config(path);
  pssl::config::apply_env_overrides(cfg);
  return cfg;
}

int cmd_sim(const std::string& path, std::optional<int> workers, bool quiet) {
  auto cfg = load(path);
  if (workers) cfg.workers = *workers;
  cfg.validate();
  pssl::batch::Options opts;
  if (!quiet)
    opts.progress = [](int done, int total) { std::fprintf(stderr, "\rseeds %d/%d", done, total); };
  const auto summary = pssl::batch::run_batch(cfg, opts);
  if (!quiet) std::fprintf(stderr, "\n");

  for (const auto& a : summary.aggregates) {
    std::printf("%-16s overrides %6.2f (sd %5.2f)  turns %6.2f (sd %5.2f)", a.scheme.c_str(),
                a.overrides_test.mean, a.overrides_test.sd, a.turns_test.mean, a.turns_test.sd);
    if (a.turns_vs_stereo) std::printf("  turns/stereo %.3f", *a.turns_vs_stereo);
    std::printf("\n");
  }
  for (const auto& p : summary.pairwise)
    std::printf("%s vs %s: diff %.2f  p %.4f\n", p.a.c_str(), p.b.c_str(), p.mean_diff, p.p_value);
  std::printf("summary: %s\n", (fs::path(cfg.output_dir) / "summary.json").string().c_str());
  return 0;
}

int cmd_offline(const std::string& path) {
  const auto cfg = load(path);
  const auto res = pssl::offline::run_offline(cfg);
  const fs::path out = fs::path(cfg.output_dir) / "offline";
  fs::create_directories(out);
  pssl::offline::write_curve_csv(res, (out / "learning_curve.csv").string());
  {
    std::ofstream js(out / "offline_summary.json");
    js << pssl::offline::result_to_json(res);
  }
  std::printf("train_size regressor split       mse      auc\n");
  for (const auto& p : res.curve)
    std::printf("%10d %-9s %-5s %9.4f %8.4f\n", p.train_size, p.regressor.c_str(), p.split.c_str(), p.mse,
                p.auc);
  std::printf("knn operating point near TPR %.2f: threshold %.3f  TPR %.3f  FPR %.3f\n", res.target_tpr,
              res.operating_point.threshold, res.operating_point.tpr, res.operating_point.fpr);
  std::printf("curve: %s\n", (out / "learning_curve.csv").string().c_str());
  return 0;
}

struct AnalyzeArgs {
  std::optional<double> tpr, fpr, fps, speed, p_ident;
  std::optional<int> s;
  std::string log, roc;
  double threshold = 10.0 / 1.5;
};

ordered_json num(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); }

int cmd_analyze(const AnalyzeArgs& a) {
  using namespace pssl::analytics;
  ordered_json out;
  if (a.tpr && a.s) out["collision_prob_iid"] = collision_prob_iid(*a.tpr, *a.s);
  if (a.tpr && a.s && a.p_ident) {
    if (*a.s < 2) throw CLI::ValidationError("--s", "the Markov model needs s >= 2");
    out["persistence_transition"] = persistence_transition(*a.p_ident, *a.tpr);
    out["collision_prob_markov"] = collision_prob_markov(*a.p_ident, *a.tpr, *a.s);
  }
  if (a.fpr && a.fps && a.speed) out["spurious_turn_rate"] = spurious_turn_rate(*a.fpr, *a.fps, *a.speed);

  if (!a.log.empty()) {
    const auto frames = pssl::schemes::read_frame_csv(a.log);
    const auto counters = pssl::schemes::recount(frames);
    const auto m = pssl::schemes::test_metrics(frames, a.threshold);
    out["log"] = {{"path", a.log},
                  {"frames", frames.size()},
                  {"test_frames", m.frames},
                  {"overrides_test", counters.overrides_test},
                  {"overrides_learning", counters.overrides_learning},
                  {"turns_test", counters.turns_test},
                  {"contacts", counters.contacts},
                  {"mse", num(m.mse)},
                  {"tpr", num(m.tpr)},
                  {"fpr", num(m.fpr)},
                  {"auc", m.auc_defined ? num(m.auc) : ordered_json(nullptr)}};
    if (!a.roc.empty()) {
      std::vector<double> est, truth;
      for (const auto& r : frames) {
        if (r.phase != pssl::schemes::PhaseKind::Test || std::isnan(r.lambda_mono)) continue;
        est.push_back(r.lambda_mono);
        truth.push_back(r.lambda_stereo);
      }
      const auto roc = roc_curve(est, truth, a.threshold);
      std::ofstream csv(a.roc);
      if (!csv) throw pssl::Error("io-error", "cannot write " + a.roc);
      csv << "threshold,fpr,tpr\n";
      char buf[96];
      for (const auto& p : roc.points) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", p.threshold, p.fpr, p.tpr);
        csv << buf;
      }
    }
  } else if (!a.roc.empty()) {
    throw CLI::ValidationError("--roc", "requires --log");
  }
  if (out.empty())
    throw CLI::ValidationError("analyze",
                               "nothing to compute: give --tpr with --s, --fpr with --fps and --speed, or --log");
  std::cout << out.dump(2) << '\n';
  return 0;
}

int cmd_dict_train(const std::string& path, std::uint64_t seed, const std::string& out) {
  const auto cfg = load(path);
  const auto sim = cfg.effective(cfg.schemes.front());
  const auto dict = pssl::schemes::dictionary_bootstrap(sim, seed);
  pssl::vbow::save_dictionary(dict, out);
  std::printf("wrote %s (%d + %d textons, %dx%d)\n", out.c_str(), dict.textons_per_type(),
              dict.textons_per_type(), dict.w, dict.h);
  return 0;
}

int cmd_dict_inspect(const std::string& path) {
  const auto dict = pssl::vbow::load_dictionary(path);
  ordered_json out;
  out["textons_per_type"] = dict.textons_per_type();
  out["patch"] = {dict.w, dict.h};
  auto describe = [](const std::vector<pssl::vbow::Patch>& set) {
    auto arr = ordered_json::array();
    for (const auto& p : set) {
      double mean = 0.0;
      for (double v : p.values) mean += v;
      mean /= static_cast<double>(p.values.size());
      double var = 0.0;
      for (double v : p.values) var += (v - mean) * (v - mean);
      arr.push_back({{"mean", mean}, {"sd", std::sqrt(var / static_cast<double>(p.values.size()))}});
    }
    return arr;
  };
  out["intensity"] = describe(dict.intensity_textons);
  out["gradient"] = describe(dict.gradient_textons);
  std::cout << out.dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Persistent self-supervised learning laboratory"};
  app.require_subcommand(1);

  std::string sim_config;
  std::optional<int> workers;
  bool quiet = false;
  auto* sim = app.add_subcommand("sim", "Run every scheme over every seed of a config");
  sim->add_option("config", sim_config, "Experiment JSON")->required()->check(CLI::ExistingFile);
  sim->add_option("--workers", workers, "Parallel seeds (overrides the config)")->check(CLI::PositiveNumber);
  sim->add_flag("--quiet", quiet, "No progress output");

  std::string offline_config;
  auto* off = app.add_subcommand("offline", "Offline learning curves for kNN and linear regression");
  off->add_option("config", offline_config, "Experiment JSON")->required()->check(CLI::ExistingFile);

  AnalyzeArgs an;
  auto* analyze = app.add_subcommand("analyze", "Collision-risk calculator and frame-log metrics");
  analyze->add_option("--tpr", an.tpr, "True positive rate")->check(CLI::Range(0.0, 1.0));
  analyze->add_option("--fpr", an.fpr, "False positive rate")->check(CLI::Range(0.0, 1.0));
  analyze->add_option("--s", an.s, "Consecutive positive samples before impact")->check(CLI::Range(1, 1000000));
  analyze->add_option("--fps", an.fps, "Classification rate (Hz)")->check(CLI::PositiveNumber);
  analyze->add_option("--speed", an.speed, "Forward speed (m/s)")->check(CLI::PositiveNumber);
  analyze->add_option("--p-ident", an.p_ident, "Probability a classification repeats the previous one")
      ->check(CLI::Range(0.0, 1.0));
  analyze->add_option("--log", an.log, "Frame-log CSV written by 'sim'")->check(CLI::ExistingFile);
  analyze->add_option("--roc", an.roc, "Write the test-phase ROC of --log to this CSV");
  analyze->add_option("--threshold", an.threshold, "Positive iff disparity > threshold (px)")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);

  std::string dict_config, dict_out, dict_path;
  std::uint64_t dict_seed = 1;
  auto* dict = app.add_subcommand("dict", "Texton dictionaries");
  dict->require_subcommand(1);
  auto* dtrain = dict->add_subcommand("train", "Learn a dictionary from a stereo warmup flight");
  dtrain->add_option("config", dict_config, "Experiment JSON")->required()->check(CLI::ExistingFile);
  dtrain->add_option("--seed", dict_seed, "Warmup seed")->capture_default_str();
  dtrain->add_option("--out", dict_out, "Output dictionary JSON")->required();
  auto* dinspect = dict->add_subcommand("inspect", "Print texton statistics");
  dinspect->add_option("dictionary", dict_path, "Dictionary JSON")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*sim) return cmd_sim(sim_config, workers, quiet);
    if (*off) return cmd_offline(offline_config);
    if (*analyze) return cmd_analyze(an);
    if (*dtrain) return cmd_dict_train(dict_config, dict_seed, dict_out);
    if (*dinspect) return cmd_dict_inspect(dict_path);
  } catch (const CLI::ValidationError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 2;
  } catch (const pssl::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
