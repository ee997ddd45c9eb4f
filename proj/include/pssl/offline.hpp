#ifndef PSSL_OFFLINE_HPP
#define PSSL_OFFLINE_HPP

// Offline learning experiments: a synthetic dataset of rendered frames with
// noiseless stereo labels, and learning curves for kNN and linear
// regression on VBoW features.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pssl/analytics.hpp"
#include "pssl/behavior.hpp"
#include "pssl/config.hpp"
#include "pssl/image.hpp"
#include "pssl/world.hpp"

namespace pssl::offline {

struct DatasetLabel {
  int frame = 0;
  double lambda = 0.0;
  double x = 0.0, y = 0.0, heading = 0.0;
};

struct WalkParams {
  behavior::BehaviorConfig behavior;
  double fps = 10.0;
  double forward_speed = 0.5;
  double wall_margin = 0.1;
};

// Stereo-FSM random walk; calls sink(image, label) for every frame so large
// datasets never sit in memory. Deterministic per seed.
using FrameSink = std::function<void(const Image&, const DatasetLabel&)>;
void walk_dataset(const sim::World& world, const sim::CameraModel& cam, const WalkParams& params,
                  int n_frames, std::uint64_t seed, const FrameSink& sink);

struct DatasetFrame {
  Image image;
  DatasetLabel label;
};

// In-memory variant for small n.
std::vector<DatasetFrame> generate_offline_dataset(const sim::World& world, const sim::CameraModel& cam,
                                                   const WalkParams& params, int n_frames,
                                                   std::uint64_t seed);

// Writes frame_00000.pgm ... and labels.csv (frame,lambda,x,y,heading).
void write_dataset(const std::string& dir, const sim::World& world, const sim::CameraModel& cam,
                   const WalkParams& params, int n_frames, std::uint64_t seed);

// Throws pssl::Error("malformed-dataset") naming the offending file.
std::vector<DatasetLabel> read_labels(const std::string& dir);
std::string frame_path(const std::string& dir, int frame);

struct CurvePoint {
  int train_size = 0;
  std::string regressor;  // "knn" or "linear"
  std::string split;      // "train" or "test"
  double mse = 0.0;
  double auc = 0.0;  // NaN when the split holds one class
};

struct OfflineResult {
  std::vector<CurvePoint> curve;
  int train_frames = 0;
  int test_frames = 0;
  // kNN at the largest checkpoint on the test split
  analytics::RocPoint operating_point;
  double target_tpr = 0.0;
  double test_positive_fraction = 0.0;
};

// Reads (or synthesizes, when requested) the dataset, learns a dictionary on
// the first dictionary_frames training images, and evaluates both regressors
// at every checkpoint on the training prefix and on the held-out tail.
OfflineResult run_offline(const config::ExperimentConfig& cfg);

void write_curve_csv(const OfflineResult& res, const std::string& path);
std::string result_to_json(const OfflineResult& res);

}  // namespace pssl::offline

#endif  // PSSL_OFFLINE_HPP
