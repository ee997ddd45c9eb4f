#include "pssl/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "pssl/error.hpp"

namespace pssl::config {

using nlohmann::json;

namespace {

[[noreturn]] void invalid(const std::string& field, const std::string& why) {
  throw Error("invalid-config", field + ": " + why);
}

// Typed access to one JSON object; remembers which keys were consumed so
// leftovers can be reported as unknown.
class Section {
 public:
  Section(const json& obj, std::string prefix) : obj_(obj), prefix_(std::move(prefix)) {
    if (!obj_.is_object()) invalid(prefix_.empty() ? "<root>" : prefix_, "must be an object");
  }

  std::string field(const std::string& key) const { return prefix_.empty() ? key : prefix_ + "." + key; }

  const json* find(const std::string& key) {
    seen_.insert(key);
    const auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  void number(const std::string& key, double& out) {
    if (const json* v = find(key)) {
      if (!v->is_number()) invalid(field(key), "must be a number");
      out = v->get<double>();
    }
  }

  void degrees(const std::string& key, double& radians) {
    double deg = radians * 180.0 / sim::kPi;
    number(key, deg);
    radians = sim::deg_to_rad(deg);
  }

  void integer(const std::string& key, int& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_integer()) invalid(field(key), "must be an integer");
      const auto x = v->get<long long>();
      if (x < -(1LL << 31) || x >= (1LL << 31)) invalid(field(key), "out of range");
      out = static_cast<int>(x);
    }
  }

  void unsigned64(const std::string& key, std::uint64_t& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_unsigned()) invalid(field(key), "must be a non-negative integer");
      out = v->get<std::uint64_t>();
    }
  }

  void boolean(const std::string& key, bool& out) {
    if (const json* v = find(key)) {
      if (!v->is_boolean()) invalid(field(key), "must be true or false");
      out = v->get<bool>();
    }
  }

  void string(const std::string& key, std::string& out) {
    if (const json* v = find(key)) {
      if (!v->is_string()) invalid(field(key), "must be a string");
      out = v->get<std::string>();
    }
  }

  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it)
      if (!seen_.count(it.key())) invalid(field(it.key()), "unknown key");
  }

 private:
  const json& obj_;
  std::string prefix_;
  std::set<std::string> seen_;
};

void read_world(Section& s, sim::WorldConfig& w) {
  s.number("width", w.width);
  s.number("depth", w.depth);
  s.number("wall_height", w.wall_height);
  s.number("camera_height", w.camera_height);
  s.number("texture_scale", w.texture_scale);
  s.integer("texture_length", w.texture_length);
  s.unsigned64("texture_seed", w.texture_seed);
  s.number("floor_near", w.floor_near);
  s.number("floor_far", w.floor_far);
  s.number("ceiling_near", w.ceiling_near);
  s.number("ceiling_far", w.ceiling_far);
  s.number("floor_texture_scale", w.floor_texture_scale);
  s.number("floor_contrast", w.floor_contrast);
  s.number("wall_contrast_variation", w.wall_contrast_variation);
  s.number("wall_brightness_variation", w.wall_brightness_variation);
}

void read_camera(Section& s, sim::CameraModel& c) {
  s.degrees("hfov_deg", c.hfov);
  s.integer("width", c.width);
  s.integer("height", c.height);
  s.number("bf", c.bf);
  s.number("disparity_max", c.disparity_max);
  s.number("noise_sigma", c.noise_sigma);
}

void read_behavior(Section& s, behavior::BehaviorConfig& b) {
  s.number("threshold", b.threshold);
  s.degrees("attitude_tolerance_deg", b.attitude_tolerance);
  s.degrees("turn_rate_deg", b.turn_rate);
}

void read_offline(Section& s, OfflineConfig& o) {
  s.string("dataset_dir", o.dataset_dir);
  s.boolean("synthesize", o.synthesize);
  s.integer("frames", o.frames);
  s.integer("train_frames", o.train_frames);
  if (const json* v = s.find("checkpoints")) {
    if (!v->is_array()) invalid(s.field("checkpoints"), "must be an array of integers");
    o.checkpoints.clear();
    for (const auto& c : *v) {
      if (!c.is_number_integer()) invalid(s.field("checkpoints"), "must be an array of integers");
      o.checkpoints.push_back(c.get<int>());
    }
  }
  s.unsigned64("seed", o.seed);
  s.integer("dictionary_frames", o.dictionary_frames);
  s.integer("k", o.knn_k);
  s.number("target_tpr", o.target_tpr);
  if (const json* v = s.find("world")) {
    Section w(*v, s.field("world"));
    read_world(w, o.world);
    w.finish();
  }
}

template <typename F>
void nested(Section& parent, const std::string& key, F&& read) {
  if (const json* v = parent.find(key)) {
    Section child(*v, parent.field(key));
    read(child);
    child.finish();
  }
}

std::vector<std::uint64_t> read_seeds(Section& root) {
  const json* v = root.find("seeds");
  if (!v) return {1};
  std::vector<std::uint64_t> seeds;
  if (v->is_array()) {
    for (const auto& s : *v) {
      if (!s.is_number_unsigned()) invalid("seeds", "entries must be non-negative integers");
      seeds.push_back(s.get<std::uint64_t>());
    }
    return seeds;
  }
  // {"first": a, "count": n} expands to a, a+1, ..., a+n-1
  Section range(*v, "seeds");
  std::uint64_t first = 1;
  int count = 0;
  range.unsigned64("first", first);
  range.integer("count", count);
  range.finish();
  if (count < 1) invalid("seeds.count", "must be >= 1");
  for (int i = 0; i < count; ++i) seeds.push_back(first + static_cast<std::uint64_t>(i));
  return seeds;
}

nlohmann::ordered_json world_json(const sim::WorldConfig& w) {
  return {{"width", w.width},
                {"depth", w.depth},
                {"wall_height", w.wall_height},
                {"camera_height", w.camera_height},
                {"texture_scale", w.texture_scale},
                {"texture_length", w.texture_length},
                {"texture_seed", w.texture_seed},
                {"floor_near", w.floor_near},
                {"floor_far", w.floor_far},
                {"ceiling_near", w.ceiling_near},
                {"ceiling_far", w.ceiling_far},
                {"floor_texture_scale", w.floor_texture_scale},
                {"floor_contrast", w.floor_contrast},
                {"wall_contrast_variation", w.wall_contrast_variation},
                {"wall_brightness_variation", w.wall_brightness_variation}};
}

}  // namespace

schemes::SimulationConfig ExperimentConfig::effective(const schemes::Scheme& scheme) const {
  schemes::SimulationConfig out = sim;
  out.scheme = scheme;
  out.phases = sim.phases.scaled(time_scale);
  return out;
}

void ExperimentConfig::validate() const {
  if (!(time_scale > 0.0)) invalid("time_scale", "must be > 0");
  if (schemes.empty()) invalid("schemes", "must name at least one scheme");
  std::set<schemes::SchemeKind> kinds;
  for (const auto& s : schemes) {
    if (!kinds.insert(s.kind).second) invalid("schemes", "duplicate scheme " + s.name());
    effective(s).validate();
  }
  if (seeds.empty()) invalid("seeds", "must contain at least one seed");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size())
    invalid("seeds", "must be unique");
  if (output_dir.empty()) invalid("output_dir", "must not be empty");
  if (workers < 1) invalid("workers", "must be >= 1");
  if (bootstrap_iters < 1000) invalid("bootstrap_iters", "must be >= 1000");
  if (heatmap_bins < 1) invalid("heatmap_bins", "must be >= 1");

  const auto& o = offline;
  if (o.frames < 2) invalid("offline.frames", "must be >= 2");
  if (o.train_frames < 1 || o.train_frames >= o.frames)
    invalid("offline.train_frames", "must lie in [1, frames)");
  if (o.checkpoints.empty()) invalid("offline.checkpoints", "must not be empty");
  for (std::size_t i = 0; i < o.checkpoints.size(); ++i) {
    if (o.checkpoints[i] < 1 || o.checkpoints[i] > o.train_frames)
      invalid("offline.checkpoints", "entries must lie in [1, train_frames]");
    if (i > 0 && o.checkpoints[i] <= o.checkpoints[i - 1])
      invalid("offline.checkpoints", "must be strictly increasing");
  }
  if (o.dictionary_frames < 1 || o.dictionary_frames > o.train_frames)
    invalid("offline.dictionary_frames", "must lie in [1, train_frames]");
  if (o.knn_k < 1) invalid("offline.k", "must be >= 1");
  try {
    o.world.validate();
  } catch (const Error& e) {
    // "invalid-config: world.x: ..." -> "offline.world.x: ..."
    const std::string msg = e.what();
    const auto at = msg.find("world.");
    throw Error("invalid-config", "offline." + (at == std::string::npos ? msg : msg.substr(at)));
  }
  if (!(o.target_tpr >= 0.0 && o.target_tpr <= 1.0)) invalid("offline.target_tpr", "must lie in [0,1]");
}

ExperimentConfig parse_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error("invalid-config", std::string("malformed JSON: ") + e.what());
  }
  ExperimentConfig cfg;
  auto& sim = cfg.sim;
  Section root(doc, "");

  cfg.seeds = read_seeds(root);
  double beta = 0.25;
  root.number("dagger_beta", beta);
  if (const json* v = root.find("schemes")) {
    if (!v->is_array()) invalid("schemes", "must be an array of scheme names");
    cfg.schemes.clear();
    for (const auto& name : *v) {
      if (!name.is_string()) invalid("schemes", "must be an array of scheme names");
      try {
        cfg.schemes.push_back(schemes::parse_scheme(name.get<std::string>(), beta));
      } catch (const Error& e) {
        invalid("schemes", e.what());
      }
    }
  } else {
    for (auto& s : cfg.schemes)
      if (s.kind == schemes::SchemeKind::Dagger) s.beta = beta;
  }
  if (const json* v = root.find("dictionary_seed")) {
    if (v->is_null()) {
      cfg.dictionary_seed.reset();
    } else {
      if (!v->is_number_unsigned()) invalid("dictionary_seed", "must be a non-negative integer or null");
      cfg.dictionary_seed = v->get<std::uint64_t>();
    }
  }
  root.boolean("include_stereo_baseline", cfg.include_stereo_baseline);
  root.number("time_scale", cfg.time_scale);
  root.string("output_dir", cfg.output_dir);
  root.integer("workers", cfg.workers);
  root.integer("bootstrap_iters", cfg.bootstrap_iters);
  root.unsigned64("bootstrap_seed", cfg.bootstrap_seed);
  root.integer("heatmap_bins", cfg.heatmap_bins);
  root.boolean("write_frame_logs", cfg.write_frame_logs);

  root.number("fps", sim.fps);
  root.number("forward_speed", sim.forward_speed);
  root.number("wall_margin", sim.wall_margin);
  root.number("override_threshold", sim.override_threshold);
  root.integer("textons", sim.textons);
  root.integer("patch_size", sim.patch_size);
  root.integer("samples", sim.samples);
  root.integer("kohonen_iterations", sim.kohonen_iterations);
  root.integer("warmup_frames", sim.warmup_frames);
  root.integer("knn_k", sim.knn_k);
  root.integer("smooth_window", sim.smooth_window);
  root.boolean("mono_oracle", sim.mono_oracle);

  nested(root, "phases", [&](Section& s) {
    s.number("initial_stereo", sim.phases.initial_stereo);
    s.number("learning", sim.phases.learning);
    s.number("test", sim.phases.test);
  });
  nested(root, "world", [&](Section& s) { read_world(s, sim.world); });
  nested(root, "camera", [&](Section& s) { read_camera(s, sim.camera); });
  nested(root, "behavior", [&](Section& s) { read_behavior(s, sim.behavior); });
  nested(root, "offline", [&](Section& s) { read_offline(s, cfg.offline); });
  root.finish();

  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("invalid-config", "cannot read " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

void apply_env_overrides(ExperimentConfig& cfg) {
  if (const char* dir = std::getenv("PSSL_OUTPUT_DIR"); dir && *dir) cfg.output_dir = dir;
}

std::string to_json(const ExperimentConfig& cfg) {
  const auto& s = cfg.sim;
  nlohmann::ordered_json j;
  j["seeds"] = cfg.seeds;
  auto names = nlohmann::ordered_json::array();
  double beta = 0.25;
  for (const auto& sc : cfg.schemes) {
    names.push_back(sc.name());
    if (sc.kind == schemes::SchemeKind::Dagger) beta = sc.beta;
  }
  j["schemes"] = names;
  j["dagger_beta"] = beta;
  j["dictionary_seed"] = cfg.dictionary_seed ? nlohmann::ordered_json(*cfg.dictionary_seed) : nlohmann::ordered_json(nullptr);
  j["include_stereo_baseline"] = cfg.include_stereo_baseline;
  j["time_scale"] = cfg.time_scale;
  j["output_dir"] = cfg.output_dir;
  j["workers"] = cfg.workers;
  j["bootstrap_iters"] = cfg.bootstrap_iters;
  j["bootstrap_seed"] = cfg.bootstrap_seed;
  j["heatmap_bins"] = cfg.heatmap_bins;
  j["write_frame_logs"] = cfg.write_frame_logs;
  j["fps"] = s.fps;
  j["forward_speed"] = s.forward_speed;
  j["wall_margin"] = s.wall_margin;
  j["override_threshold"] = s.override_threshold;
  j["textons"] = s.textons;
  j["patch_size"] = s.patch_size;
  j["samples"] = s.samples;
  j["kohonen_iterations"] = s.kohonen_iterations;
  j["warmup_frames"] = s.warmup_frames;
  j["knn_k"] = s.knn_k;
  j["smooth_window"] = s.smooth_window;
  j["mono_oracle"] = s.mono_oracle;
  j["phases"] = {{"initial_stereo", s.phases.initial_stereo},
                 {"learning", s.phases.learning},
                 {"test", s.phases.test}};
  j["world"] = world_json(s.world);
  const auto& c = s.camera;
  j["camera"] = {{"hfov_deg", c.hfov * 180.0 / sim::kPi},
                 {"width", c.width},
                 {"height", c.height},
                 {"bf", c.bf},
                 {"disparity_max", c.disparity_max},
                 {"noise_sigma", c.noise_sigma}};
  const auto& b = s.behavior;
  j["behavior"] = {{"threshold", b.threshold},
                   {"attitude_tolerance_deg", b.attitude_tolerance * 180.0 / sim::kPi},
                   {"turn_rate_deg", b.turn_rate * 180.0 / sim::kPi}};
  const auto& o = cfg.offline;
  j["offline"] = {{"dataset_dir", o.dataset_dir},
                  {"synthesize", o.synthesize},
                  {"frames", o.frames},
                  {"train_frames", o.train_frames},
                  {"checkpoints", o.checkpoints},
                  {"seed", o.seed},
                  {"dictionary_frames", o.dictionary_frames},
                  {"k", o.knn_k},
                  {"target_tpr", o.target_tpr},
                  {"world", world_json(o.world)}};
  return j.dump(2);
}

}  // namespace pssl::config
