#include "pssl/schemes.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "pssl/error.hpp"
#include "pssl/estimator.hpp"

namespace pssl::schemes {

namespace {

// Per-run random streams, derived from the run seed.
enum Stream : std::uint64_t {
  kStartPose = 1,
  kFsm = 2,
  kStereoNoise = 3,
  kFeatures = 4,
  kSourceDraw = 5,
  kWarmupPose = 11,
  kWarmupFsm = 12,
  kWarmupNoise = 13,
  kDictionary = 14,
};

void require(bool ok, const std::string& field, const char* what) {
  if (!ok) throw Error("invalid-config", field + ": " + what);
}

// Closed-loop driver shared by the warmup and the experiment: one
// behavior state, one pose, stepped frame by frame.
struct Agent {
  sim::DroneState pose;
  behavior::FsmState fsm;
};

}  // namespace

std::string Scheme::name() const {
  switch (kind) {
    case SchemeKind::ColdTurkey: return "cold_turkey";
    case SchemeKind::Dagger: return "dagger";
    case SchemeKind::TrainingWheels: return "training_wheels";
    case SchemeKind::PureStereo: return "pure_stereo";
  }
  return "unknown";
}

void Scheme::validate() const {
  require(beta >= 0.0 && beta <= 1.0, "scheme.beta", "must lie in [0,1]");
}

Scheme parse_scheme(std::string_view name, double beta) {
  if (name == "cold_turkey") return Scheme::cold_turkey();
  if (name == "dagger") return Scheme::dagger(beta);
  if (name == "training_wheels") return Scheme::training_wheels();
  if (name == "pure_stereo") return Scheme::pure_stereo();
  throw Error("invalid-config", "scheme: unknown scheme '" + std::string(name) + "'");
}

std::string_view to_string(PhaseKind phase) {
  switch (phase) {
    case PhaseKind::InitialStereo: return "initial_stereo";
    case PhaseKind::Learning: return "learning";
    case PhaseKind::Test: return "test";
  }
  return "unknown";
}

std::string_view to_string(ControlSource source) {
  return source == ControlSource::Stereo ? "stereo" : "mono";
}

PhaseKind PhaseDurations::phase_at(double t) const {
  if (t < initial_stereo) return PhaseKind::InitialStereo;
  if (t < initial_stereo + learning) return PhaseKind::Learning;
  return PhaseKind::Test;
}

PhaseDurations PhaseDurations::scaled(double factor) const {
  return {initial_stereo * factor, learning * factor, test * factor};
}

ControlSource select_control_source(const Scheme& scheme, PhaseKind phase, Rng& rng) {
  if (phase == PhaseKind::InitialStereo) return ControlSource::Stereo;
  if (scheme.kind == SchemeKind::PureStereo) return ControlSource::Stereo;
  if (phase == PhaseKind::Test) return ControlSource::Mono;
  switch (scheme.kind) {
    case SchemeKind::ColdTurkey: return ControlSource::Stereo;
    case SchemeKind::Dagger:
      return rng.bernoulli(scheme.beta) ? ControlSource::Stereo : ControlSource::Mono;
    case SchemeKind::TrainingWheels: return ControlSource::Mono;
    case SchemeKind::PureStereo: return ControlSource::Stereo;
  }
  return ControlSource::Stereo;
}

void SimulationConfig::validate() const {
  world.validate();
  camera.validate();
  behavior.validate(camera.disparity_max);
  scheme.validate();
  require(phases.initial_stereo > 0.0, "phases.initial_stereo", "must be > 0");
  require(phases.learning > 0.0, "phases.learning", "must be > 0");
  require(phases.test > 0.0, "phases.test", "must be > 0");
  require(fps > 0.0, "fps", "must be > 0");
  require(forward_speed > 0.0, "forward_speed", "must be > 0");
  require(wall_margin > 0.0 && 2.0 * wall_margin < std::min(world.width, world.depth),
          "wall_margin", "must be > 0 and leave room to move");
  require(override_threshold > behavior.threshold && override_threshold <= camera.disparity_max,
          "override_threshold", "must lie in (behavior.threshold, disparity_max]");
  // A turn step larger than the alignment window could skip the target.
  require(behavior.turn_rate / fps <= 2.0 * behavior.attitude_tolerance, "behavior.turn_rate",
          "per-frame rotation must not exceed twice the attitude tolerance");
  require(textons >= 1, "textons", "must be >= 1");
  require(patch_size >= 1 && patch_size <= camera.width && patch_size <= camera.height,
          "patch_size", "must be >= 1 and fit in the image");
  require(samples >= 1, "samples", "must be >= 1");
  require(kohonen_iterations >= 1, "kohonen_iterations", "must be >= 1");
  require(warmup_frames >= 1, "warmup_frames", "must be >= 1");
  require(knn_k >= 1, "knn_k", "must be >= 1");
  require(smooth_window >= 1, "smooth_window", "must be >= 1");
}

sim::DroneState initial_pose(const SimulationConfig& cfg, Rng& rng) {
  sim::DroneState s;
  const double mx = std::min(1.0, 0.25 * cfg.world.width);
  const double my = std::min(1.0, 0.25 * cfg.world.depth);
  s.x = rng.uniform(mx, cfg.world.width - mx);
  s.y = rng.uniform(my, cfg.world.depth - my);
  s.heading = rng.uniform(-sim::kPi, sim::kPi);
  s.forward_speed = cfg.forward_speed;
  return s;
}

Warmup stereo_warmup(const SimulationConfig& cfg, const sim::World& world, std::uint64_t seed) {
  const Rng root(seed);
  Rng pose_rng = root.split(kWarmupPose);
  Rng fsm_rng = root.split(kWarmupFsm);
  Rng noise_rng = root.split(kWarmupNoise);
  const double dt = 1.0 / cfg.fps;

  Warmup out;
  Agent agent{initial_pose(cfg, pose_rng), {}};
  for (int f = 0; f < cfg.warmup_frames; ++f) {
    out.images.push_back(sim::render_view(world, agent.pose, cfg.camera));
    out.poses.push_back(agent.pose);
    const double lambda = sim::stereo_disparity(world, agent.pose, cfg.camera, noise_rng);
    const auto step = behavior::fsm_step(agent.fsm, lambda, agent.pose.heading, cfg.behavior, fsm_rng);
    agent.fsm = step.next;
    const auto moved = sim::step_dynamics(world, agent.pose, step.command, dt, cfg.wall_margin);
    agent.pose = moved.state;
    if (moved.contact) ++out.contacts;
  }
  return out;
}

vbow::TextonDictionary dictionary_bootstrap(const SimulationConfig& cfg, const sim::World& world,
                                            std::uint64_t seed) {
  cfg.validate();
  const Warmup warmup = stereo_warmup(cfg, world, seed);
  vbow::TrainingOptions opts;
  opts.textons = cfg.textons;
  opts.iterations = cfg.kohonen_iterations;
  opts.patch_w = cfg.patch_size;
  opts.patch_h = cfg.patch_size;
  Rng rng = Rng(seed).split(kDictionary);
  return vbow::train_dictionary(warmup.images, opts, rng);
}

vbow::TextonDictionary dictionary_bootstrap(const SimulationConfig& cfg, std::uint64_t seed) {
  const sim::World world(cfg.world);
  return dictionary_bootstrap(cfg, world, seed);
}

ExperimentLog run_experiment(const SimulationConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const sim::World world(cfg.world);
  const auto dict = dictionary_bootstrap(cfg, world, seed);
  return run_experiment(cfg, world, dict, seed);
}

ExperimentLog run_experiment(const SimulationConfig& cfg, const sim::World& world,
                             const vbow::TextonDictionary& dict, std::uint64_t seed) {
  cfg.validate();
  dict.validate();
  if (dict.textons_per_type() != cfg.textons || dict.w != cfg.patch_size)
    throw Error("invalid-config", "dictionary does not match textons/patch_size");

  const Rng root(seed);
  Rng pose_rng = root.split(kStartPose);
  Rng fsm_rng = root.split(kFsm);
  Rng noise_rng = root.split(kStereoNoise);
  Rng feature_rng = root.split(kFeatures);
  Rng source_rng = root.split(kSourceDraw);

  ExperimentLog log;
  log.scheme = cfg.scheme;
  log.seed = seed;
  log.fps = cfg.fps;
  log.phases = cfg.phases;
  log.room_width = world.width();
  log.room_depth = world.depth();

  const double dt = 1.0 / cfg.fps;
  const auto frames = static_cast<int>(std::llround(cfg.phases.total() * cfg.fps));
  log.frames.reserve(static_cast<std::size_t>(frames));

  estimator::MonoEstimator est(cfg.knn_k, cfg.smooth_window);
  Agent agent{initial_pose(cfg, pose_rng), {}};
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();

  for (int f = 0; f < frames; ++f) {
    const double t = f * dt;
    const PhaseKind phase = cfg.phases.phase_at(t);
    if (phase == PhaseKind::Test && !est.frozen()) est.freeze();

    const Image img = sim::render_view(world, agent.pose, cfg.camera);
    const double lambda_stereo = sim::stereo_disparity(world, agent.pose, cfg.camera, noise_rng);
    const auto features =
        vbow::texton_histogram(img, vbow::gradient_image(img), dict, cfg.samples, feature_rng);

    // Predict before this frame's label is added, so the estimate never
    // sees its own ground truth.
    double lambda_mono = nan;
    if (cfg.mono_oracle) {
      lambda_mono = lambda_stereo;
    } else if (!est.training_set().empty()) {
      lambda_mono = est.smooth(est.knn_predict(features));
    }
    if (phase != PhaseKind::Test) est.add_sample({features, lambda_stereo, t});

    ControlSource source = select_control_source(cfg.scheme, phase, source_rng);
    if (source == ControlSource::Mono && std::isnan(lambda_mono)) source = ControlSource::Stereo;
    const double lambda_used = source == ControlSource::Stereo ? lambda_stereo : lambda_mono;

    auto step = behavior::fsm_step(agent.fsm, lambda_used, agent.pose.heading, cfg.behavior, fsm_rng);
    bool override_fired = false;
    if (source == ControlSource::Mono && lambda_stereo > cfg.override_threshold &&
        step.command.kind == sim::Command::Kind::Forward) {
      // Safety override: stereo vetoes forward flight and forces a new
      // direction pick.
      behavior::FsmState forced = step.next;
      forced.mode = behavior::Mode::PickDirection;
      step = behavior::fsm_step(forced, lambda_used, agent.pose.heading, cfg.behavior, fsm_rng);
      override_fired = true;
    }

    FrameRecord rec;
    rec.frame = f;
    rec.time = t;
    rec.phase = phase;
    rec.x = agent.pose.x;
    rec.y = agent.pose.y;
    rec.heading = agent.pose.heading;
    rec.lambda_stereo = lambda_stereo;
    rec.lambda_mono = lambda_mono;
    rec.source = source;
    rec.mode = step.next.mode;
    rec.turn_started = step.turn_started;
    rec.override_fired = override_fired;

    agent.fsm = step.next;
    const auto moved = sim::step_dynamics(world, agent.pose, step.command, dt, cfg.wall_margin);
    agent.pose = moved.state;
    rec.contact = moved.contact;
    log.frames.push_back(rec);
  }

  log.counters = recount(log.frames);
  if (cfg.scheme.kind == SchemeKind::PureStereo) log.turns_stereo_baseline = log.counters.turns_test;
  log.metrics = test_metrics(log.frames, cfg.behavior.threshold);
  log.training_samples = est.training_set().size();
  return log;
}

Counters recount(const std::vector<FrameRecord>& frames) {
  Counters c;
  for (const auto& r : frames) {
    const bool test = r.phase == PhaseKind::Test;
    if (r.override_fired) (test ? c.overrides_test : c.overrides_learning) += 1;
    if (test && r.turn_started) {
      ++c.turns_test;
      if (r.override_fired) ++c.override_turns_test;
    }
    if (r.contact) ++c.contacts;
  }
  return c;
}

TestMetrics test_metrics(const std::vector<FrameRecord>& frames, double threshold) {
  std::vector<double> est, truth;
  for (const auto& r : frames) {
    if (r.phase != PhaseKind::Test || std::isnan(r.lambda_mono)) continue;
    est.push_back(r.lambda_mono);
    truth.push_back(r.lambda_stereo);
  }
  TestMetrics m;
  m.frames = est.size();
  if (est.empty()) {
    m.mse = m.tpr = m.fpr = m.auc = std::numeric_limits<double>::quiet_NaN();
    return m;
  }
  m.mse = analytics::mse(est, truth);
  const auto conf = analytics::confusion_at(est, truth, threshold, threshold);
  m.tpr = conf.tpr();
  m.fpr = conf.fpr();
  const auto roc = analytics::roc_curve(est, truth, threshold);
  m.auc = roc.auc;
  m.auc_defined = roc.auc_defined;
  return m;
}

std::vector<analytics::TrajectorySample> trajectory(const ExperimentLog& log,
                                                    std::optional<PhaseKind> phase) {
  std::vector<analytics::TrajectorySample> out;
  for (const auto& r : log.frames) {
    if (phase && r.phase != *phase) continue;
    out.push_back({r.x, r.y, r.mode != behavior::Mode::Forward});
  }
  return out;
}

namespace {

std::string fmt_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

constexpr const char* kFrameHeader =
    "frame,time,phase,x,y,heading,lambda_stereo,lambda_mono,source,mode,turn_started,override,"
    "contact";

PhaseKind parse_phase(const std::string& s) {
  if (s == "initial_stereo") return PhaseKind::InitialStereo;
  if (s == "learning") return PhaseKind::Learning;
  if (s == "test") return PhaseKind::Test;
  throw Error("malformed-csv", "unknown phase '" + s + "'");
}

behavior::Mode parse_mode(const std::string& s) {
  if (s == "forward") return behavior::Mode::Forward;
  if (s == "pick_direction") return behavior::Mode::PickDirection;
  if (s == "turning") return behavior::Mode::Turning;
  throw Error("malformed-csv", "unknown mode '" + s + "'");
}

double parse_double(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') throw Error("malformed-csv", "bad number '" + s + "'");
  return v;
}

}  // namespace

void write_frame_csv(const ExperimentLog& log, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("io-error", "cannot write " + path);
  out << kFrameHeader << '\n';
  for (const auto& r : log.frames) {
    out << r.frame << ',' << fmt_double(r.time) << ',' << to_string(r.phase) << ','
        << fmt_double(r.x) << ',' << fmt_double(r.y) << ',' << fmt_double(r.heading) << ','
        << fmt_double(r.lambda_stereo) << ',' << fmt_double(r.lambda_mono) << ','
        << to_string(r.source) << ',' << behavior::to_string(r.mode) << ','
        << int{r.turn_started} << ',' << int{r.override_fired} << ',' << int{r.contact} << '\n';
  }
}

std::vector<FrameRecord> read_frame_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("io-error", "cannot read " + path);
  std::string line;
  if (!std::getline(in, line) || line != kFrameHeader)
    throw Error("malformed-csv", path + ": unexpected header");
  std::vector<FrameRecord> frames;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 13)
      throw Error("malformed-csv", path + ": wrong column count on row " + std::to_string(row));
    try {
      FrameRecord r;
      r.frame = std::stoi(cells[0]);
      r.time = parse_double(cells[1]);
      r.phase = parse_phase(cells[2]);
      r.x = parse_double(cells[3]);
      r.y = parse_double(cells[4]);
      r.heading = parse_double(cells[5]);
      r.lambda_stereo = parse_double(cells[6]);
      r.lambda_mono = parse_double(cells[7]);
      if (cells[8] != "stereo" && cells[8] != "mono")
        throw Error("malformed-csv", "unknown source '" + cells[8] + "'");
      r.source = cells[8] == "stereo" ? ControlSource::Stereo : ControlSource::Mono;
      r.mode = parse_mode(cells[9]);
      r.turn_started = cells[10] == "1";
      r.override_fired = cells[11] == "1";
      r.contact = cells[12] == "1";
      frames.push_back(r);
    } catch (const Error& e) {
      throw Error("malformed-csv", path + " row " + std::to_string(row) + ": " + e.what());
    } catch (const std::exception&) {
      throw Error("malformed-csv", path + ": bad value on row " + std::to_string(row));
    }
  }
  return frames;
}

}  // namespace pssl::schemes
