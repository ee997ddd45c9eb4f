#include "pssl/batch.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <thread>

#include <json.hpp>

#include "pssl/analytics.hpp"
#include "pssl/error.hpp"
#include "pssl/vbow.hpp"

namespace pssl::batch {

namespace fs = std::filesystem;
using schemes::Scheme;
using schemes::SchemeKind;

namespace {

struct SeedResult {
  std::vector<RunRow> rows;  // one per scheme in run order
  std::vector<analytics::Heatmap> turning, forward;
};

std::vector<Scheme> run_order(const config::ExperimentConfig& cfg) {
  std::vector<Scheme> order = cfg.schemes;
  bool has_stereo = false;
  for (const auto& s : order) has_stereo |= s.kind == SchemeKind::PureStereo;
  if (cfg.include_stereo_baseline && !has_stereo) order.push_back(Scheme::pure_stereo());
  return order;
}

RunRow make_row(const schemes::ExperimentLog& log) {
  RunRow r;
  r.scheme = log.scheme.name();
  r.seed = log.seed;
  r.overrides_test = log.counters.overrides_test;
  r.overrides_learning = log.counters.overrides_learning;
  r.turns_test = log.counters.turns_test;
  r.override_turns_test = log.counters.override_turns_test;
  r.contacts = log.counters.contacts;
  r.mse = log.metrics.mse;
  r.tpr = log.metrics.tpr;
  r.fpr = log.metrics.fpr;
  if (log.metrics.auc_defined) r.auc = log.metrics.auc;
  r.training_samples = log.training_samples;
  return r;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("io-error", "cannot write " + path.string());
  out << text;
}

SeedResult run_seed(const config::ExperimentConfig& cfg, const std::vector<Scheme>& order,
                    const sim::World& world, const vbow::TextonDictionary* shared, std::uint64_t seed,
                    bool write) {
  const fs::path root(cfg.output_dir);
  vbow::TextonDictionary own;
  if (!shared) {
    own = schemes::dictionary_bootstrap(cfg.effective(order.front()), world, seed);
    if (write) {
      fs::create_directories(root / "dictionaries");
      vbow::save_dictionary(own, (root / "dictionaries" / ("seed_" + std::to_string(seed) + ".json")).string());
    }
  }
  const auto& dict = shared ? *shared : own;

  SeedResult res;
  std::optional<int> stereo_turns;
  for (const auto& scheme : order) {
    const auto log = schemes::run_experiment(cfg.effective(scheme), world, dict, seed);
    res.rows.push_back(make_row(log));
    if (scheme.kind == SchemeKind::PureStereo) stereo_turns = log.counters.turns_test;

    const auto traj = schemes::trajectory(log, schemes::PhaseKind::Test);
    res.turning.push_back(analytics::heatmap(traj, analytics::MotionFilter::Turning, cfg.heatmap_bins,
                                             log.room_width, log.room_depth));
    res.forward.push_back(analytics::heatmap(traj, analytics::MotionFilter::Forward, cfg.heatmap_bins,
                                             log.room_width, log.room_depth));
    if (write && cfg.write_frame_logs) {
      const fs::path dir = root / "runs" / scheme.name();
      fs::create_directories(dir);
      schemes::write_frame_csv(log, (dir / ("seed_" + std::to_string(seed) + ".csv")).string());
    }
  }
  for (auto& row : res.rows) row.turns_stereo_baseline = stereo_turns;
  return res;
}

nlohmann::ordered_json number_or_null(double v) {
  return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr);
}

nlohmann::ordered_json stat_json(const Stat& s) {
  return {{"mean", number_or_null(s.mean)}, {"sd", number_or_null(s.sd)}};
}

}  // namespace

Stat describe(const std::vector<double>& values) {
  Stat s;
  if (values.empty()) {
    s.mean = s.sd = std::nan("");
    return s;
  }
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double sq = 0.0;
    for (double v : values) sq += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(sq / static_cast<double>(values.size() - 1));
  }
  return s;
}

RunSummary summarize(const config::ExperimentConfig& cfg, std::vector<RunRow> rows) {
  RunSummary sum;
  sum.time_scale = cfg.time_scale;
  sum.phases = cfg.sim.phases.scaled(cfg.time_scale);
  sum.seeds = cfg.seeds;
  sum.dictionary_seed = cfg.dictionary_seed;
  sum.bootstrap_iters = cfg.bootstrap_iters;
  sum.rows = std::move(rows);

  const auto order = run_order(cfg);
  std::vector<std::vector<double>> overrides(order.size());
  std::optional<double> stereo_mean;
  for (std::size_t k = 0; k < order.size(); ++k) {
    SchemeAggregate agg;
    agg.scheme = order[k].name();
    std::vector<double> ovr, ovr_l, turns, mse, tpr, fpr, auc;
    for (const auto& r : sum.rows) {
      if (r.scheme != agg.scheme) continue;
      ++agg.runs;
      ovr.push_back(r.overrides_test);
      ovr_l.push_back(r.overrides_learning);
      turns.push_back(r.turns_test);
      mse.push_back(r.mse);
      tpr.push_back(r.tpr);
      fpr.push_back(r.fpr);
      if (r.auc) auc.push_back(*r.auc);
    }
    agg.overrides_test = describe(ovr);
    agg.overrides_learning = describe(ovr_l);
    agg.turns_test = describe(turns);
    agg.mse = describe(mse);
    agg.tpr = describe(tpr);
    agg.fpr = describe(fpr);
    agg.auc = describe(auc);
    agg.auc_runs = static_cast<int>(auc.size());
    if (order[k].kind == SchemeKind::PureStereo) stereo_mean = agg.turns_test.mean;
    overrides[k] = std::move(ovr);
    sum.aggregates.push_back(agg);
  }
  if (stereo_mean && *stereo_mean > 0.0)
    for (auto& agg : sum.aggregates) agg.turns_vs_stereo = agg.turns_test.mean / *stereo_mean;

  const Rng root(cfg.bootstrap_seed);
  std::uint64_t pair_index = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (order[i].kind == SchemeKind::PureStereo) continue;
    for (std::size_t j = i + 1; j < order.size(); ++j) {
      if (order[j].kind == SchemeKind::PureStereo) continue;
      Rng rng = root.split(pair_index++);
      const auto test = analytics::bootstrap_mean_diff_test(overrides[i], overrides[j], cfg.bootstrap_iters, rng);
      sum.pairwise.push_back({order[i].name(), order[j].name(), test.observed_diff, test.p_value});
    }
  }
  return sum;
}

RunSummary run_batch(const config::ExperimentConfig& cfg, const Options& opts) {
  cfg.validate();
  const auto order = run_order(cfg);
  const sim::World world(cfg.sim.world);
  const int total = static_cast<int>(cfg.seeds.size());

  std::optional<vbow::TextonDictionary> shared;
  if (cfg.dictionary_seed) {
    shared = schemes::dictionary_bootstrap(cfg.effective(order.front()), world, *cfg.dictionary_seed);
    if (opts.write_artifacts) {
      fs::create_directories(fs::path(cfg.output_dir) / "dictionaries");
      vbow::save_dictionary(*shared, (fs::path(cfg.output_dir) / "dictionaries" / "shared.json").string());
    }
  }

  std::vector<SeedResult> results(cfg.seeds.size());
  std::vector<std::exception_ptr> errors(cfg.seeds.size());
  std::atomic<int> next{0}, done{0};
  std::mutex progress_mutex;

  auto worker = [&] {
    for (int i = next++; i < total; i = next++) {
      try {
        results[static_cast<std::size_t>(i)] =
            run_seed(cfg, order, world, shared ? &*shared : nullptr,
                     cfg.seeds[static_cast<std::size_t>(i)], opts.write_artifacts);
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
      const int finished = ++done;
      if (opts.progress) {
        std::lock_guard lock(progress_mutex);
        opts.progress(finished, total);
      }
    }
  };
  const int n_workers = std::min(cfg.workers, total);
  std::vector<std::thread> pool;
  for (int w = 1; w < n_workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  // scheme-major rows, seeds in config order
  std::vector<RunRow> rows;
  for (std::size_t k = 0; k < order.size(); ++k)
    for (const auto& res : results) rows.push_back(res.rows[k]);
  auto summary = summarize(cfg, std::move(rows));

  if (opts.write_artifacts) {
    const fs::path root(cfg.output_dir);
    fs::create_directories(root / "heatmaps");
    for (std::size_t k = 0; k < order.size(); ++k) {
      analytics::Heatmap turning{cfg.heatmap_bins, std::vector<long>(results.front().turning[k].counts.size(), 0)};
      analytics::Heatmap forward = turning;
      for (const auto& res : results) {
        for (std::size_t c = 0; c < turning.counts.size(); ++c) {
          turning.counts[c] += res.turning[k].counts[c];
          forward.counts[c] += res.forward[k].counts[c];
        }
      }
      const auto stem = (root / "heatmaps" / order[k].name()).string();
      analytics::write_heatmap_pgm(turning, stem + "_turning.pgm");
      analytics::write_heatmap_csv(turning, stem + "_turning.csv");
      analytics::write_heatmap_pgm(forward, stem + "_forward.pgm");
      analytics::write_heatmap_csv(forward, stem + "_forward.csv");
    }
    write_text(root / "summary.json", summary_to_json(summary));
    write_text(root / "config.json", config::to_json(cfg));
  }
  return summary;
}

std::string summary_to_json(const RunSummary& s) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["time_scale"] = s.time_scale;
  j["phases"] = {{"initial_stereo", s.phases.initial_stereo},
                 {"learning", s.phases.learning},
                 {"test", s.phases.test}};
  j["seeds"] = s.seeds;
  j["dictionary_seed"] = s.dictionary_seed ? ordered_json(*s.dictionary_seed) : ordered_json(nullptr);
  j["bootstrap_iters"] = s.bootstrap_iters;

  auto aggs = ordered_json::array();
  for (const auto& a : s.aggregates) {
    ordered_json o;
    o["scheme"] = a.scheme;
    o["runs"] = a.runs;
    o["overrides_test"] = stat_json(a.overrides_test);
    o["overrides_learning"] = stat_json(a.overrides_learning);
    o["turns_test"] = stat_json(a.turns_test);
    o["mse"] = stat_json(a.mse);
    o["tpr"] = stat_json(a.tpr);
    o["fpr"] = stat_json(a.fpr);
    o["auc"] = stat_json(a.auc);
    o["auc_runs"] = a.auc_runs;
    o["turns_vs_stereo"] = a.turns_vs_stereo ? ordered_json(*a.turns_vs_stereo) : ordered_json(nullptr);
    aggs.push_back(o);
  }
  j["aggregates"] = aggs;

  auto pairs = ordered_json::array();
  for (const auto& p : s.pairwise)
    pairs.push_back({{"a", p.a}, {"b", p.b}, {"mean_diff", p.mean_diff}, {"p_value", p.p_value}});
  j["pairwise_overrides_test"] = pairs;

  auto rows = ordered_json::array();
  for (const auto& r : s.rows) {
    ordered_json o;
    o["scheme"] = r.scheme;
    o["seed"] = r.seed;
    o["overrides_test"] = r.overrides_test;
    o["overrides_learning"] = r.overrides_learning;
    o["turns_test"] = r.turns_test;
    o["override_turns_test"] = r.override_turns_test;
    o["turns_stereo_baseline"] =
        r.turns_stereo_baseline ? ordered_json(*r.turns_stereo_baseline) : ordered_json(nullptr);
    o["contacts"] = r.contacts;
    o["mse"] = number_or_null(r.mse);
    o["tpr"] = number_or_null(r.tpr);
    o["fpr"] = number_or_null(r.fpr);
    o["auc"] = r.auc ? ordered_json(*r.auc) : ordered_json(nullptr);
    o["training_samples"] = r.training_samples;
    rows.push_back(o);
  }
  j["runs"] = rows;
  return j.dump(2) + "\n";
}

}  // namespace pssl::batch
