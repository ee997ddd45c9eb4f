#include "pssl/estimator.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "pssl/error.hpp"

namespace pssl::estimator {

void TrainingSet::append(const TrainingSample& sample) {
  const std::size_t d = sample.features.histogram.size() + 1;
  if (labels_.empty()) {
    dim_ = d;
  } else if (d != dim_) {
    throw Error("dimension-mismatch", "feature length differs from the training set");
  }
  flat_.insert(flat_.end(), sample.features.histogram.begin(), sample.features.histogram.end());
  flat_.push_back(sample.features.entropy);
  labels_.push_back(sample.disparity);
  timestamps_.push_back(sample.timestamp);
}

TrainingSample TrainingSet::sample(std::size_t i) const {
  const auto f = features(i);
  TrainingSample s;
  s.features.histogram.assign(f.begin(), f.end() - 1);
  s.features.entropy = f.back();
  s.disparity = labels_[i];
  s.timestamp = timestamps_[i];
  return s;
}

void write_training_csv(const TrainingSet& set, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("io-error", "cannot write " + path);
  const std::size_t d = set.dimension();
  for (std::size_t j = 0; j < d; ++j) out << 'f' << j << ',';
  out << "disparity,timestamp\n";
  char buf[32];
  for (std::size_t i = 0; i < set.size(); ++i) {
    for (double v : set.features(i)) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out << buf << ',';
    }
    std::snprintf(buf, sizeof buf, "%.17g", set.disparity(i));
    out << buf << ',';
    std::snprintf(buf, sizeof buf, "%.17g", set.timestamp(i));
    out << buf << '\n';
  }
}

TrainingSet read_training_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("io-error", "cannot read " + path);
  std::string line;
  if (!std::getline(in, line)) throw Error("malformed-csv", path + ": missing header");
  const auto columns = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
  if (columns < 4) throw Error("malformed-csv", path + ": too few columns");
  TrainingSet set;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::vector<double> values;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str()) throw Error("malformed-csv", path + ": bad number on row " + std::to_string(row));
      values.push_back(v);
    }
    if (values.size() != columns)
      throw Error("malformed-csv", path + ": wrong column count on row " + std::to_string(row));
    TrainingSample s;
    s.features.histogram.assign(values.begin(), values.end() - 3);
    s.features.entropy = values[columns - 3];
    s.disparity = values[columns - 2];
    s.timestamp = values[columns - 1];
    set.append(s);
  }
  return set;
}

MonoEstimator::MonoEstimator(int k, int smooth_window) : k_(k), smooth_window_(smooth_window) {
  if (k < 1) throw Error("invalid-config", "k must be at least 1");
  if (smooth_window < 1) throw Error("invalid-config", "smooth_window must be at least 1");
}

void MonoEstimator::add_sample(const TrainingSample& sample) {
  if (frozen_) throw Error("learning-frozen", "the training set is frozen");
  set_.append(sample);
}

double MonoEstimator::knn_predict(const vbow::FeatureVector& query) const {
  return knn_predict(query.flatten());
}

double MonoEstimator::knn_predict(std::span<const double> query) const {
  if (set_.empty()) throw Error("untrained", "no training samples");
  const std::size_t d = set_.dimension();
  if (query.size() != d) throw Error("dimension-mismatch", "query length differs from the training set");

  // Sorted (distance, index) list of the best k; strict comparison on
  // insertion keeps the earlier sample on equal distance.
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(k_), set_.size());
  std::vector<std::pair<double, std::size_t>> best;
  best.reserve(k + 1);
  for (std::size_t i = 0; i < set_.size(); ++i) {
    const auto f = set_.features(i);
    double dist = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = f[j] - query[j];
      dist += diff * diff;
    }
    if (best.size() == k && dist >= best.back().first) continue;
    auto pos = std::upper_bound(best.begin(), best.end(), dist,
                                [](double v, const auto& e) { return v < e.first; });
    best.insert(pos, {dist, i});
    if (best.size() > k) best.pop_back();
  }
  double sum = 0.0;
  for (const auto& [dist, idx] : best) sum += set_.disparity(idx);
  return sum / static_cast<double>(best.size());
}

double MonoEstimator::smooth(double raw) {
  recent_.push_back(raw);
  while (recent_.size() > static_cast<std::size_t>(smooth_window_)) recent_.pop_front();
  double sum = 0.0;
  for (double v : recent_) sum += v;
  return sum / static_cast<double>(recent_.size());
}

double LinearModel::predict(const vbow::FeatureVector& f) const { return predict(f.flatten()); }

double LinearModel::predict(std::span<const double> f) const {
  if (f.size() != static_cast<std::size_t>(slopes.size()))
    throw Error("dimension-mismatch", "feature length differs from the model");
  double y = intercept;
  for (std::size_t j = 0; j < f.size(); ++j) y += slopes[static_cast<Eigen::Index>(j)] * f[j];
  return y;
}

LinearModel linear_fit(const TrainingSet& set) { return linear_fit(set, set.size()); }

LinearModel linear_fit(const TrainingSet& set, std::size_t prefix) {
  prefix = std::min(prefix, set.size());
  const auto d = static_cast<Eigen::Index>(set.dimension());
  if (prefix == 0 || static_cast<Eigen::Index>(prefix) < d + 1)
    throw Error("insufficient-samples", "linear fit needs at least dim+1 samples");

  const auto rows = static_cast<Eigen::Index>(prefix);
  Eigen::MatrixXd design(rows, d + 1);
  Eigen::VectorXd target(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto f = set.features(static_cast<std::size_t>(i));
    for (Eigen::Index j = 0; j < d; ++j) design(i, j) = f[static_cast<std::size_t>(j)];
    design(i, d) = 1.0;
    target(i) = set.disparity(static_cast<std::size_t>(i));
  }

  // Complete orthogonal decomposition gives the minimum-norm least-squares
  // solution when columns are dependent; the histogram bins always sum to
  // one, so the intercept column is collinear with them.
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(design);
  const Eigen::VectorXd w = cod.solve(target);

  LinearModel model;
  model.slopes = w.head(d);
  model.intercept = w(d);
  model.degenerate = cod.rank() < d + 1;
  return model;
}

}  // namespace pssl::estimator
