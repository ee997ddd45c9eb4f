#ifndef PSSL_SCHEMES_HPP
#define PSSL_SCHEMES_HPP

// Closed-loop persistent self-supervised learning experiment: the stereo
// oracle labels monocular features online while a learning scheme decides
// which of the two disparity sources drives the behavior.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pssl/analytics.hpp"
#include "pssl/behavior.hpp"
#include "pssl/image.hpp"
#include "pssl/random.hpp"
#include "pssl/vbow.hpp"
#include "pssl/world.hpp"

namespace pssl::schemes {

enum class SchemeKind {
  ColdTurkey,
  Dagger,
  TrainingWheels,
  // Diagnostic: stereo drives every phase, including Test.
  PureStereo,
};

struct Scheme {
  SchemeKind kind = SchemeKind::TrainingWheels;
  double beta = 0.25;  // Dagger only: probability of stereo control

  static Scheme cold_turkey() { return {SchemeKind::ColdTurkey, 0.0}; }
  static Scheme dagger(double beta = 0.25) { return {SchemeKind::Dagger, beta}; }
  static Scheme training_wheels() { return {SchemeKind::TrainingWheels, 0.0}; }
  static Scheme pure_stereo() { return {SchemeKind::PureStereo, 0.0}; }

  std::string name() const;
  void validate() const;
};

// Accepts "cold_turkey", "dagger", "training_wheels", "pure_stereo".
Scheme parse_scheme(std::string_view name, double beta = 0.25);

enum class PhaseKind { InitialStereo = 0, Learning = 1, Test = 2 };
enum class ControlSource { Stereo = 0, Mono = 1 };

std::string_view to_string(PhaseKind phase);
std::string_view to_string(ControlSource source);

struct PhaseDurations {
  double initial_stereo = 60.0;
  double learning = 240.0;
  double test = 300.0;

  double total() const { return initial_stereo + learning + test; }
  PhaseKind phase_at(double t) const;
  PhaseDurations scaled(double factor) const;
};

// Dagger draws from rng only during Learning.
ControlSource select_control_source(const Scheme& scheme, PhaseKind phase, Rng& rng);

struct SimulationConfig {
  sim::WorldConfig world;
  sim::CameraModel camera;
  behavior::BehaviorConfig behavior;
  Scheme scheme;
  PhaseDurations phases;
  double fps = 10.0;
  double forward_speed = 0.5;
  double wall_margin = 0.1;
  double override_threshold = 10.0;  // px, 1.0 m at bf = 10

  int textons = vbow::kDefaultTextons;
  int patch_size = vbow::kDefaultPatchSize;
  int samples = vbow::kDefaultSamples;
  int kohonen_iterations = vbow::kDefaultKohonenIterations;
  int warmup_frames = 300;

  int knn_k = 5;
  int smooth_window = 4;

  // Identity diagnostic: the mono estimate is replaced by the stereo value.
  bool mono_oracle = false;

  // Throws pssl::Error("invalid-config") naming the field.
  void validate() const;
};

struct FrameRecord {
  int frame = 0;
  double time = 0.0;
  PhaseKind phase = PhaseKind::InitialStereo;
  double x = 0.0, y = 0.0, heading = 0.0;
  double lambda_stereo = 0.0;
  double lambda_mono = 0.0;  // NaN until the estimator has a sample
  ControlSource source = ControlSource::Stereo;
  behavior::Mode mode = behavior::Mode::Forward;  // after the step
  bool turn_started = false;
  bool override_fired = false;
  bool contact = false;
};

struct Counters {
  int overrides_test = 0;
  int overrides_learning = 0;
  int turns_test = 0;
  int override_turns_test = 0;
  int contacts = 0;
  bool operator==(const Counters&) const = default;
};

struct TestMetrics {
  double mse = 0.0;
  double tpr = 0.0;
  double fpr = 0.0;
  double auc = 0.0;
  bool auc_defined = false;
  std::size_t frames = 0;
};

struct ExperimentLog {
  Scheme scheme;
  std::uint64_t seed = 0;
  double fps = 10.0;
  PhaseDurations phases;
  double room_width = 0.0, room_depth = 0.0;
  std::vector<FrameRecord> frames;
  Counters counters;
  // Test-phase turns of the pure-stereo run with the same seed, when known.
  std::optional<int> turns_stereo_baseline;
  TestMetrics metrics;
  std::size_t training_samples = 0;
};

// Counters recomputed from the frame records.
Counters recount(const std::vector<FrameRecord>& frames);

// Test-phase classification quality of the mono estimate against stereo.
TestMetrics test_metrics(const std::vector<FrameRecord>& frames, double threshold);

std::vector<analytics::TrajectorySample> trajectory(const ExperimentLog& log,
                                                    std::optional<PhaseKind> phase);

struct Warmup {
  std::vector<Image> images;
  std::vector<sim::DroneState> poses;
  int contacts = 0;
};

// Stereo-only exploration used to collect dictionary training frames.
Warmup stereo_warmup(const SimulationConfig& cfg, const sim::World& world, std::uint64_t seed);

vbow::TextonDictionary dictionary_bootstrap(const SimulationConfig& cfg, const sim::World& world,
                                            std::uint64_t seed);
vbow::TextonDictionary dictionary_bootstrap(const SimulationConfig& cfg, std::uint64_t seed);

ExperimentLog run_experiment(const SimulationConfig& cfg, std::uint64_t seed);
ExperimentLog run_experiment(const SimulationConfig& cfg, const sim::World& world,
                             const vbow::TextonDictionary& dict, std::uint64_t seed);

// Random start pose in the inner part of the room.
sim::DroneState initial_pose(const SimulationConfig& cfg, Rng& rng);

void write_frame_csv(const ExperimentLog& log, const std::string& path);
// Parses the CSV written above back into frame records.
std::vector<FrameRecord> read_frame_csv(const std::string& path);

}  // namespace pssl::schemes

#endif  // PSSL_SCHEMES_HPP
