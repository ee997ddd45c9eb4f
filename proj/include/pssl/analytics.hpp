#ifndef PSSL_ANALYTICS_HPP
#define PSSL_ANALYTICS_HPP

// Collision and spurious-turn risk model, classification metrics, position
// heatmaps and a bootstrap significance test.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "pssl/random.hpp"

namespace pssl::analytics {

// --- collision / spurious-turn model -------------------------------------

// (1 - tpr)^s, evaluated as exp(s * log1p(-tpr)).
double collision_prob_iid(double tpr, int s);

// Product form over one approach: every sample of the negative phase must
// be a true negative, then every sample of the positive phase a false
// negative. Evaluated in log space.
double collision_prob_product(std::span<const double> p_true_negative,
                              std::span<const double> p_false_negative);

// Probability that a negative classification is followed by another one
// when each classification repeats the previous with probability p_ident
// and is drawn independently otherwise.
double persistence_transition(double p_ident, double tpr);

// persistence_transition(p_ident, tpr)^(s - 1). Requires s >= 2.
double collision_prob_markov(double p_ident, double tpr, int s);

// Turns per metre: fpr * fps / speed. Throws pssl::Error("invalid-argument")
// for speed <= 0.
double spurious_turn_rate(double fpr, double fps, double speed);

// Row-stochastic transition matrix of a user-supplied chain.
struct MarkovChain {
  std::size_t states = 0;
  std::vector<double> transition;  // row-major states x states

  double at(std::size_t from, std::size_t to) const { return transition[from * states + to]; }
  // Throws pssl::Error("invalid-chain").
  void validate() const;
};

// Probability mass in `target` after `steps` forward iterations starting
// from `start` with certainty.
double absorption_probability(const MarkovChain& chain, std::size_t start, std::size_t target,
                              int steps);

// --- classification metrics -------------------------------------------------

struct RocPoint {
  double threshold = 0.0;  // predicted positive iff estimate >= threshold
  double fpr = 0.0;
  double tpr = 0.0;
};

struct RocCurve {
  std::vector<RocPoint> points;  // FPR ascending, from (0,0) to (1,1)
  double auc = 0.0;
  bool auc_defined = true;  // false when the labels hold a single class
  std::size_t positives = 0;
  std::size_t negatives = 0;
};

struct Confusion {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  double tpr() const;
  double fpr() const;
};

// Labels are truth > t_gt; thresholds sweep every distinct estimate plus
// +/- infinity. Throws pssl::Error("length-mismatch") / ("empty-input").
RocCurve roc_curve(std::span<const double> estimates, std::span<const double> truth,
                   double t_gt);

// Confusion counts with prediction estimate > t_pred and truth > t_gt.
Confusion confusion_at(std::span<const double> estimates, std::span<const double> truth,
                       double t_pred, double t_gt);

// The point whose TPR is nearest the target (lower FPR on ties).
RocPoint operating_point(const RocCurve& curve, double target_tpr);

double mse(std::span<const double> estimates, std::span<const double> truth);

struct BootstrapResult {
  double observed_diff = 0.0;  // mean(a) - mean(b)
  double p_value = 1.0;
};

// Two-sided test of equal means: both groups are resampled with replacement
// from the pooled data and p = (1 + #{|diff*| >= |diff|}) / (1 + iters).
BootstrapResult bootstrap_mean_diff_test(std::span<const double> a, std::span<const double> b,
                                         int iters, Rng& rng);

// --- heatmaps ---------------------------------------------------------------

enum class MotionFilter { Any, Turning, Forward };

struct TrajectorySample {
  double x = 0.0;
  double y = 0.0;
  bool turning = false;
};

struct Heatmap {
  int bins = 0;
  std::vector<long> counts;  // row-major, row index from y

  long at(int col, int row) const { return counts[static_cast<std::size_t>(row) * bins + col]; }
  long total() const;
};

// Position histogram over [0,extent_x) x [0,extent_y). Throws
// pssl::Error("invalid-argument") for bins < 1.
Heatmap heatmap(std::span<const TrajectorySample> trajectory, MotionFilter filter, int bins,
                double extent_x, double extent_y);

void write_heatmap_csv(const Heatmap& map, const std::string& path);
// Binary P5, counts scaled so the maximum maps to 255.
void write_heatmap_pgm(const Heatmap& map, const std::string& path);

}  // namespace pssl::analytics

#endif  // PSSL_ANALYTICS_HPP
