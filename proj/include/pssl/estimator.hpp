#ifndef PSSL_ESTIMATOR_HPP
#define PSSL_ESTIMATOR_HPP

#include <cstddef>
#include <deque>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pssl/vbow.hpp"

namespace pssl::estimator {

struct TrainingSample {
  vbow::FeatureVector features;
  double disparity = 0.0;  // stereo label, px
  double timestamp = 0.0;  // s
};

// Append-only store of labeled feature vectors. Features are also kept in a
// flat row-major buffer so neighbor search scans contiguous memory.
class TrainingSet {
 public:
  void append(const TrainingSample& sample);

  std::size_t size() const { return labels_.size(); }
  bool empty() const { return labels_.empty(); }
  std::size_t dimension() const { return dim_; }

  std::span<const double> features(std::size_t i) const {
    return {flat_.data() + i * dim_, dim_};
  }
  double disparity(std::size_t i) const { return labels_[i]; }
  double timestamp(std::size_t i) const { return timestamps_[i]; }
  std::span<const double> disparities() const { return labels_; }

  TrainingSample sample(std::size_t i) const;

 private:
  std::size_t dim_ = 0;
  std::vector<double> flat_;
  std::vector<double> labels_;
  std::vector<double> timestamps_;
};

// CSV: one row per sample, f0..f{2n}, disparity, timestamp.
void write_training_csv(const TrainingSet& set, const std::string& path);
TrainingSet read_training_csv(const std::string& path);

// kNN regressor over an aggregated training set plus a moving-average filter
// on its outputs.
class MonoEstimator {
 public:
  explicit MonoEstimator(int k = 5, int smooth_window = 4);

  // Throws pssl::Error("learning-frozen") once freeze() has been called.
  void add_sample(const TrainingSample& sample);
  void freeze() { frozen_ = true; }
  bool frozen() const { return frozen_; }

  // Unweighted mean label of the k nearest samples; ties at equal distance
  // keep the lower sample index. Throws pssl::Error("untrained").
  double knn_predict(const vbow::FeatureVector& query) const;
  double knn_predict(std::span<const double> query) const;

  // Pushes raw into the ring buffer and returns the mean of the retained values.
  double smooth(double raw);
  void reset_smoothing() { recent_.clear(); }

  int k() const { return k_; }
  int smooth_window() const { return smooth_window_; }
  const TrainingSet& training_set() const { return set_; }

 private:
  int k_;
  int smooth_window_;
  bool frozen_ = false;
  TrainingSet set_;
  std::deque<double> recent_;
};

struct LinearModel {
  Eigen::VectorXd slopes;
  double intercept = 0.0;
  bool degenerate = false;  // design matrix was rank deficient

  double predict(const vbow::FeatureVector& f) const;
  double predict(std::span<const double> f) const;
};

// Least squares with intercept; minimum-norm solution when rank deficient.
// Throws pssl::Error("insufficient-samples") if fewer than dim+1 samples.
LinearModel linear_fit(const TrainingSet& set);
LinearModel linear_fit(const TrainingSet& set, std::size_t prefix);

}  // namespace pssl::estimator

#endif  // PSSL_ESTIMATOR_HPP
