#ifndef PSSL_CONFIG_HPP
#define PSSL_CONFIG_HPP

// Experiment configuration as read from JSON. Every key is optional and
// falls back to the defaults of the underlying modules; unknown keys are
// rejected so typos surface before any compute starts.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pssl/schemes.hpp"

namespace pssl::config {

struct OfflineConfig {
  std::string dataset_dir;  // empty: <output_dir>/dataset
  bool synthesize = true;   // (re)generate the dataset before learning
  int frames = 5000;
  int train_frames = 4000;  // leading frames; the rest are held out
  std::vector<int> checkpoints = {250, 500, 1000, 2000, 4000};
  std::uint64_t seed = 1;
  int dictionary_frames = 300;  // training frames used to learn the textons
  int knn_k = 5;
  double target_tpr = 0.96;
  // Room the dataset is recorded in; separate from the closed-loop room.
  // Uniform walls and a plain floor unless configured.
  sim::WorldConfig world = plain_room();

  static sim::WorldConfig plain_room() {
    sim::WorldConfig w;
    w.floor_contrast = 0.0;
    w.wall_contrast_variation = 0.0;
    w.wall_brightness_variation = 0.0;
    return w;
  }
};

struct ExperimentConfig {
  schemes::SimulationConfig sim;  // sim.scheme is overwritten per run
  std::vector<schemes::Scheme> schemes = {schemes::Scheme::cold_turkey(), schemes::Scheme::dagger(),
                                          schemes::Scheme::training_wheels()};
  std::vector<std::uint64_t> seeds = {1};
  // Warmup seed of the one texton dictionary shared by every run; empty
  // trains a separate dictionary per seed.
  std::optional<std::uint64_t> dictionary_seed = 1;
  bool include_stereo_baseline = true;
  double time_scale = 1.0;  // multiplies all phase durations
  std::string output_dir = "pssl-out";
  int workers = 1;
  int bootstrap_iters = 10000;
  std::uint64_t bootstrap_seed = 2017;
  int heatmap_bins = 20;
  bool write_frame_logs = true;
  OfflineConfig offline;

  // Phase durations after time_scale.
  schemes::SimulationConfig effective(const schemes::Scheme& scheme) const;
  // Throws pssl::Error("invalid-config") naming the field.
  void validate() const;
};

// Throws pssl::Error("invalid-config") for bad JSON, wrong types, unknown
// keys or values outside module invariants.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

// PSSL_OUTPUT_DIR, when set and non-empty, replaces output_dir.
void apply_env_overrides(ExperimentConfig& cfg);

// Canonical JSON of the full effective configuration.
std::string to_json(const ExperimentConfig& cfg);

}  // namespace pssl::config

#endif  // PSSL_CONFIG_HPP
