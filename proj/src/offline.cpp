#include "pssl/offline.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "pssl/error.hpp"
#include "pssl/estimator.hpp"
#include "pssl/random.hpp"
#include "pssl/vbow.hpp"

namespace pssl::offline {

namespace fs = std::filesystem;

namespace {

enum Stream : std::uint64_t { kPose = 1, kFsm = 2, kDictionary = 3, kFeatures = 4 };

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Eval {
  double mse = kNan;
  double auc = kNan;
};

Eval evaluate(const std::vector<double>& pred, const std::vector<double>& truth, double threshold) {
  Eval e;
  e.mse = analytics::mse(pred, truth);
  const auto roc = analytics::roc_curve(pred, truth, threshold);
  e.auc = roc.auc_defined ? roc.auc : kNan;
  return e;
}

}  // namespace

void walk_dataset(const sim::World& world, const sim::CameraModel& cam, const WalkParams& params,
                  int n_frames, std::uint64_t seed, const FrameSink& sink) {
  if (n_frames < 1) throw Error("invalid-argument", "n_frames must be >= 1");
  const Rng root(seed);
  Rng pose_rng = root.split(kPose);
  Rng fsm_rng = root.split(kFsm);
  const double dt = 1.0 / params.fps;

  sim::DroneState pose;
  const double mx = std::min(1.0, 0.25 * world.width());
  const double my = std::min(1.0, 0.25 * world.depth());
  pose.x = pose_rng.uniform(mx, world.width() - mx);
  pose.y = pose_rng.uniform(my, world.depth() - my);
  pose.heading = pose_rng.uniform(-sim::kPi, sim::kPi);
  pose.forward_speed = params.forward_speed;
  behavior::FsmState fsm;

  for (int f = 0; f < n_frames; ++f) {
    const double lambda = sim::stereo_disparity_true(world, pose, cam);
    sink(sim::render_view(world, pose, cam), DatasetLabel{f, lambda, pose.x, pose.y, pose.heading});
    const auto step = behavior::fsm_step(fsm, lambda, pose.heading, params.behavior, fsm_rng);
    fsm = step.next;
    pose = sim::step_dynamics(world, pose, step.command, dt, params.wall_margin).state;
  }
}

std::vector<DatasetFrame> generate_offline_dataset(const sim::World& world, const sim::CameraModel& cam,
                                                   const WalkParams& params, int n_frames,
                                                   std::uint64_t seed) {
  std::vector<DatasetFrame> out;
  walk_dataset(world, cam, params, n_frames, seed,
               [&](const Image& img, const DatasetLabel& label) { out.push_back({img, label}); });
  return out;
}

std::string frame_path(const std::string& dir, int frame) {
  char name[32];
  std::snprintf(name, sizeof name, "frame_%05d.pgm", frame);
  return (fs::path(dir) / name).string();
}

void write_dataset(const std::string& dir, const sim::World& world, const sim::CameraModel& cam,
                   const WalkParams& params, int n_frames, std::uint64_t seed) {
  fs::create_directories(dir);
  const auto labels_path = (fs::path(dir) / "labels.csv").string();
  std::ofstream labels(labels_path);
  if (!labels) throw Error("io-error", "cannot write " + labels_path);
  labels << "frame,lambda,x,y,heading\n";
  walk_dataset(world, cam, params, n_frames, seed, [&](const Image& img, const DatasetLabel& l) {
    write_pgm(img, frame_path(dir, l.frame));
    labels << l.frame << ',' << fmt(l.lambda) << ',' << fmt(l.x) << ',' << fmt(l.y) << ','
           << fmt(l.heading) << '\n';
  });
  if (!labels) throw Error("io-error", "failed writing " + labels_path);
}

std::vector<DatasetLabel> read_labels(const std::string& dir) {
  const auto path = (fs::path(dir) / "labels.csv").string();
  std::ifstream in(path);
  if (!in) throw Error("malformed-dataset", path + ": cannot open");
  std::string line;
  if (!std::getline(in, line) || line != "frame,lambda,x,y,heading")
    throw Error("malformed-dataset", path + ": unexpected header");
  std::vector<DatasetLabel> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    const std::string where = path + ": line " + std::to_string(lineno);
    if (cells.size() != 5) throw Error("malformed-dataset", where + ": expected 5 columns");
    DatasetLabel l;
    try {
      std::size_t used = 0;
      l.frame = std::stoi(cells[0], &used);
      if (used != cells[0].size()) throw std::invalid_argument("frame");
      double* fields[] = {&l.lambda, &l.x, &l.y, &l.heading};
      for (int i = 0; i < 4; ++i) {
        *fields[i] = std::stod(cells[static_cast<std::size_t>(i) + 1], &used);
        if (used != cells[static_cast<std::size_t>(i) + 1].size()) throw std::invalid_argument("value");
      }
    } catch (const std::exception&) {
      throw Error("malformed-dataset", where + ": unparsable value");
    }
    if (l.frame != static_cast<int>(out.size()))
      throw Error("malformed-dataset", where + ": frames must be numbered 0, 1, 2, ...");
    if (!(l.lambda >= 0.0) || !std::isfinite(l.lambda))
      throw Error("malformed-dataset", where + ": lambda must be finite and >= 0");
    out.push_back(l);
  }
  if (out.empty()) throw Error("malformed-dataset", path + ": no frames");
  return out;
}

OfflineResult run_offline(const config::ExperimentConfig& cfg) {
  cfg.validate();
  const auto& oc = cfg.offline;
  const auto& sc = cfg.sim;
  const std::string dir =
      oc.dataset_dir.empty() ? (fs::path(cfg.output_dir) / "dataset").string() : oc.dataset_dir;

  if (oc.synthesize) {
    const sim::World world(oc.world);
    write_dataset(dir, world, sc.camera, WalkParams{sc.behavior, sc.fps, sc.forward_speed, sc.wall_margin},
                  oc.frames, oc.seed);
  }
  const auto labels = read_labels(dir);
  const auto n_train = static_cast<std::size_t>(oc.train_frames);
  if (labels.size() <= n_train)
    throw Error("malformed-dataset", (fs::path(dir) / "labels.csv").string() +
                                         ": needs more frames than offline.train_frames");

  const Rng root(oc.seed);
  std::vector<Image> dict_images;
  for (int f = 0; f < oc.dictionary_frames; ++f) dict_images.push_back(read_pgm(frame_path(dir, f)));
  vbow::TrainingOptions topts;
  topts.textons = sc.textons;
  topts.iterations = sc.kohonen_iterations;
  topts.patch_w = sc.patch_size;
  topts.patch_h = sc.patch_size;
  Rng dict_rng = root.split(kDictionary);
  const auto dict = vbow::train_dictionary(dict_images, topts, dict_rng);
  dict_images.clear();

  Rng feature_rng = root.split(kFeatures);
  std::vector<vbow::FeatureVector> features;
  features.reserve(labels.size());
  for (const auto& l : labels) {
    const Image img = read_pgm(frame_path(dir, l.frame));
    features.push_back(vbow::texton_histogram(img, vbow::gradient_image(img), dict, sc.samples, feature_rng));
  }

  OfflineResult res;
  res.train_frames = static_cast<int>(n_train);
  res.test_frames = static_cast<int>(labels.size() - n_train);
  res.target_tpr = oc.target_tpr;
  const double threshold = sc.behavior.threshold;

  std::vector<double> test_truth;
  for (std::size_t i = n_train; i < labels.size(); ++i) test_truth.push_back(labels[i].lambda);
  std::size_t positives = 0;
  for (double t : test_truth) positives += t > threshold;
  res.test_positive_fraction = static_cast<double>(positives) / static_cast<double>(test_truth.size());

  estimator::MonoEstimator knn(oc.knn_k, 1);
  estimator::TrainingSet set;
  std::size_t added = 0;
  for (int size : oc.checkpoints) {
    const auto n = static_cast<std::size_t>(size);
    for (; added < n; ++added) {
      const estimator::TrainingSample s{features[added], labels[added].lambda, static_cast<double>(added)};
      knn.add_sample(s);
      set.append(s);
    }
    std::vector<double> train_truth(n);
    for (std::size_t i = 0; i < n; ++i) train_truth[i] = labels[i].lambda;

    std::vector<double> knn_train(n), knn_test;
    for (std::size_t i = 0; i < n; ++i) knn_train[i] = knn.knn_predict(features[i]);
    for (std::size_t i = n_train; i < labels.size(); ++i) knn_test.push_back(knn.knn_predict(features[i]));

    const Eval ktr = evaluate(knn_train, train_truth, threshold);
    const Eval kte = evaluate(knn_test, test_truth, threshold);
    res.curve.push_back({size, "knn", "train", ktr.mse, ktr.auc});
    res.curve.push_back({size, "knn", "test", kte.mse, kte.auc});

    Eval ltr, lte;
    try {
      const auto model = estimator::linear_fit(set, n);
      std::vector<double> lin_train(n), lin_test;
      for (std::size_t i = 0; i < n; ++i) lin_train[i] = model.predict(features[i]);
      for (std::size_t i = n_train; i < labels.size(); ++i) lin_test.push_back(model.predict(features[i]));
      ltr = evaluate(lin_train, train_truth, threshold);
      lte = evaluate(lin_test, test_truth, threshold);
    } catch (const Error& e) {
      if (e.code() != "insufficient-samples") throw;
    }
    res.curve.push_back({size, "linear", "train", ltr.mse, ltr.auc});
    res.curve.push_back({size, "linear", "test", lte.mse, lte.auc});

    if (size == oc.checkpoints.back())
      res.operating_point = analytics::operating_point(analytics::roc_curve(knn_test, test_truth, threshold),
                                                       oc.target_tpr);
  }
  return res;
}

void write_curve_csv(const OfflineResult& res, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("io-error", "cannot write " + path);
  out << "train_size,regressor,split,mse,auc\n";
  for (const auto& p : res.curve)
    out << p.train_size << ',' << p.regressor << ',' << p.split << ',' << fmt(p.mse) << ',' << fmt(p.auc)
        << '\n';
  if (!out) throw Error("io-error", "failed writing " + path);
}

std::string result_to_json(const OfflineResult& res) {
  using nlohmann::ordered_json;
  auto num = [](double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); };
  ordered_json j;
  j["train_frames"] = res.train_frames;
  j["test_frames"] = res.test_frames;
  j["test_positive_fraction"] = res.test_positive_fraction;
  j["operating_point"] = {{"regressor", "knn"},
                          {"target_tpr", res.target_tpr},
                          {"threshold", num(res.operating_point.threshold)},
                          {"tpr", res.operating_point.tpr},
                          {"fpr", res.operating_point.fpr}};
  auto curve = ordered_json::array();
  for (const auto& p : res.curve)
    curve.push_back({{"train_size", p.train_size},
                     {"regressor", p.regressor},
                     {"split", p.split},
                     {"mse", num(p.mse)},
                     {"auc", num(p.auc)}});
  j["curve"] = curve;
  return j.dump(2) + "\n";
}

}  // namespace pssl::offline
