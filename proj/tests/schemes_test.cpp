#include "pssl/schemes.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "pssl/error.hpp"

using namespace pssl;
using namespace pssl::schemes;

namespace {

SimulationConfig quick(Scheme scheme) {
  SimulationConfig cfg;
  cfg.scheme = scheme;
  cfg.phases = {5.0, 15.0, 10.0};
  cfg.kohonen_iterations = 5000;
  cfg.warmup_frames = 60;
  return cfg;
}

}  // namespace

TEST_SUITE("schemes") {

TEST_CASE("control source per scheme and phase") {
  Rng rng(1);
  for (auto s : {Scheme::cold_turkey(), Scheme::dagger(), Scheme::training_wheels()}) {
    CHECK(select_control_source(s, PhaseKind::InitialStereo, rng) == ControlSource::Stereo);
    CHECK(select_control_source(s, PhaseKind::Test, rng) == ControlSource::Mono);
  }
  CHECK(select_control_source(Scheme::cold_turkey(), PhaseKind::Learning, rng) == ControlSource::Stereo);
  CHECK(select_control_source(Scheme::training_wheels(), PhaseKind::Learning, rng) == ControlSource::Mono);
  CHECK(select_control_source(Scheme::pure_stereo(), PhaseKind::Test, rng) == ControlSource::Stereo);
}

TEST_CASE("dagger picks stereo with probability beta") {
  Rng rng(2);
  int stereo = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i)
    stereo += select_control_source(Scheme::dagger(0.25), PhaseKind::Learning, rng) == ControlSource::Stereo;
  CHECK(std::abs(static_cast<double>(stereo) / n - 0.25) <= 0.01);
}

TEST_CASE("scheme names round-trip and bad input is rejected") {
  for (auto s : {Scheme::cold_turkey(), Scheme::dagger(), Scheme::training_wheels(), Scheme::pure_stereo()})
    CHECK(parse_scheme(s.name()).kind == s.kind);
  CHECK_THROWS_AS(parse_scheme("autopilot"), Error);
  CHECK_THROWS_AS(Scheme::dagger(1.5).validate(), Error);
}

TEST_CASE("phase timeline") {
  const PhaseDurations p;
  CHECK(p.phase_at(0.0) == PhaseKind::InitialStereo);
  CHECK(p.phase_at(59.99) == PhaseKind::InitialStereo);
  CHECK(p.phase_at(60.0) == PhaseKind::Learning);
  CHECK(p.phase_at(300.0) == PhaseKind::Test);
  const auto half = p.scaled(0.5);
  CHECK(half.total() == 300.0);
}

TEST_CASE("config validation names the field") {
  SimulationConfig cfg;
  cfg.fps = 0.0;
  CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("fps"), Error);
  cfg = SimulationConfig{};
  cfg.override_threshold = 5.0;  // below the turn threshold
  CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("override_threshold"), Error);
  cfg = SimulationConfig{};
  cfg.knn_k = 0;
  CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("knn_k"), Error);
}

TEST_CASE("dictionary bootstrap is deterministic and non-degenerate") {
  const auto cfg = quick(Scheme::cold_turkey());
  const sim::World world(cfg.world);
  const auto a = dictionary_bootstrap(cfg, world, 5);
  const auto b = dictionary_bootstrap(cfg, world, 5);
  CHECK(a.intensity_textons == b.intensity_textons);
  CHECK(a.gradient_textons == b.gradient_textons);
  for (const auto* set : {&a.intensity_textons, &a.gradient_textons}) {
    for (std::size_t i = 0; i < set->size(); ++i)
      for (std::size_t j = i + 1; j < set->size(); ++j) {
        double d = 0;
        for (std::size_t k = 0; k < (*set)[i].values.size(); ++k)
          d += std::abs((*set)[i].values[k] - (*set)[j].values[k]);
        CHECK(d > 0.0);
      }
  }
  const auto warm = stereo_warmup(cfg, world, 5);
  CHECK(warm.contacts == 0);
  CHECK(static_cast<int>(warm.images.size()) == cfg.warmup_frames);
  for (const auto& p : warm.poses) CHECK(world.contains(p.x, p.y));
}

TEST_CASE("short cold turkey run is structurally valid") {
  auto cfg = quick(Scheme::cold_turkey());
  cfg.camera.noise_sigma = 0.0;
  cfg.phases.test = 1.0;
  const auto log = run_experiment(cfg, 3);
  CHECK(log.frames.size() == static_cast<std::size_t>(std::lround(cfg.phases.total() * cfg.fps)));
  CHECK(log.counters == recount(log.frames));
  CHECK(log.counters.overrides_learning == 0);
  CHECK(log.counters.contacts == 0);
  for (std::size_t i = 0; i < log.frames.size(); ++i) {
    const auto& f = log.frames[i];
    CHECK(f.frame == static_cast<int>(i));
    CHECK(f.phase == cfg.phases.phase_at(f.time));
    if (f.phase != PhaseKind::Test) CHECK(f.source == ControlSource::Stereo);
  }
}

TEST_CASE("invariants over full-structure runs of every scheme") {
  for (auto scheme : {Scheme::cold_turkey(), Scheme::dagger(), Scheme::training_wheels()}) {
    CAPTURE(scheme.name());
    const auto cfg = quick(scheme);
    const auto log = run_experiment(cfg, 17);
    CHECK(log.counters == recount(log.frames));
    std::size_t learning_frames = 0;
    for (const auto& f : log.frames) {
      if (f.override_fired) {
        CHECK(f.source == ControlSource::Mono);
        CHECK(f.lambda_stereo > cfg.override_threshold);
        CHECK(f.turn_started);
      }
      if (f.phase == PhaseKind::Test) CHECK(f.source == ControlSource::Mono);
      else ++learning_frames;
    }
    // the estimator stopped growing when Test began
    CHECK(log.training_samples == learning_frames);

    // heatmap mass equals the phase frame count
    const auto test_traj = trajectory(log, PhaseKind::Test);
    CHECK(test_traj.size() == log.frames.size() - learning_frames);
    CHECK(analytics::heatmap(test_traj, analytics::MotionFilter::Any, 20, log.room_width, log.room_depth).total() ==
          static_cast<long>(test_traj.size()));
  }
}

TEST_CASE("identity mono estimate without noise never needs an override") {
  for (auto scheme : {Scheme::dagger(), Scheme::training_wheels(), Scheme::cold_turkey()}) {
    auto cfg = quick(scheme);
    cfg.camera.noise_sigma = 0.0;
    cfg.mono_oracle = true;
    const auto log = run_experiment(cfg, 23);
    CHECK(log.counters.overrides_test == 0);
    CHECK(log.counters.overrides_learning == 0);
  }
}

TEST_CASE("runs are deterministic per seed") {
  const auto cfg = quick(Scheme::dagger());
  const auto a = run_experiment(cfg, 31);
  const auto b = run_experiment(cfg, 31);
  REQUIRE(a.frames.size() == b.frames.size());
  for (std::size_t i = 0; i < a.frames.size(); ++i) {
    CHECK(a.frames[i].x == b.frames[i].x);
    CHECK(a.frames[i].source == b.frames[i].source);
    if (!std::isnan(a.frames[i].lambda_mono)) CHECK(a.frames[i].lambda_mono == b.frames[i].lambda_mono);
  }
  CHECK(a.counters == b.counters);
}

TEST_CASE("frame log CSV round trip") {
  const auto log = run_experiment(quick(Scheme::training_wheels()), 41);
  const auto path = (std::filesystem::temp_directory_path() / "pssl_frames.csv").string();
  write_frame_csv(log, path);
  const auto back = read_frame_csv(path);
  REQUIRE(back.size() == log.frames.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    const auto& a = log.frames[i];
    const auto& b = back[i];
    CHECK(a.x == b.x);
    CHECK(a.heading == b.heading);
    CHECK(a.lambda_stereo == b.lambda_stereo);
    CHECK((std::isnan(a.lambda_mono) ? std::isnan(b.lambda_mono) : a.lambda_mono == b.lambda_mono));
    CHECK(a.mode == b.mode);
    CHECK(a.override_fired == b.override_fired);
  }
  CHECK(recount(back) == log.counters);
  std::filesystem::remove(path);
}

}  // TEST_SUITE
