#include "pssl/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "pssl/error.hpp"

namespace pssl::analytics {

namespace {

void require_probability(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0))
    throw Error("invalid-argument", std::string(name) + " must lie in [0,1]");
}

double mean(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

void check_pair(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error("length-mismatch", "estimates and truth differ in length");
  if (a.empty()) throw Error("empty-input", "no samples");
}

}  // namespace

double collision_prob_iid(double tpr, int s) {
  require_probability(tpr, "tpr");
  if (s < 1) throw Error("invalid-argument", "s must be >= 1");
  return std::exp(static_cast<double>(s) * std::log1p(-tpr));
}

double collision_prob_product(std::span<const double> p_true_negative,
                              std::span<const double> p_false_negative) {
  double log_p = 0.0;
  for (auto seq : {p_true_negative, p_false_negative}) {
    for (double p : seq) {
      require_probability(p, "per-sample probability");
      log_p += std::log(p);
    }
  }
  return std::exp(log_p);
}

double persistence_transition(double p_ident, double tpr) {
  require_probability(p_ident, "p_ident");
  require_probability(tpr, "tpr");
  return 1.0 - (1.0 - p_ident) * tpr;
}

double collision_prob_markov(double p_ident, double tpr, int s) {
  if (s < 2) throw Error("invalid-argument", "s must be >= 2");
  require_probability(p_ident, "p_ident");
  require_probability(tpr, "tpr");
  // log of 1 - (1 - p_ident) * tpr; reduces to the iid form at p_ident = 0
  return std::exp(static_cast<double>(s - 1) * std::log1p(-(1.0 - p_ident) * tpr));
}

double spurious_turn_rate(double fpr, double fps, double speed) {
  require_probability(fpr, "fpr");
  if (!(speed > 0.0)) throw Error("invalid-argument", "speed must be > 0");
  if (!(fps > 0.0)) throw Error("invalid-argument", "fps must be > 0");
  return fpr * fps / speed;
}

void MarkovChain::validate() const {
  if (states == 0 || transition.size() != states * states)
    throw Error("invalid-chain", "transition matrix must be states x states");
  for (std::size_t i = 0; i < states; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < states; ++j) {
      const double p = at(i, j);
      if (!(p >= 0.0 && p <= 1.0)) throw Error("invalid-chain", "entries must lie in [0,1]");
      row += p;
    }
    if (std::abs(row - 1.0) > 1e-9) throw Error("invalid-chain", "rows must sum to 1");
  }
}

double absorption_probability(const MarkovChain& chain, std::size_t start, std::size_t target,
                              int steps) {
  chain.validate();
  if (start >= chain.states || target >= chain.states)
    throw Error("invalid-argument", "state index out of range");
  if (steps < 0) throw Error("invalid-argument", "steps must be >= 0");
  std::vector<double> dist(chain.states, 0.0), next(chain.states);
  dist[start] = 1.0;
  for (int s = 0; s < steps; ++s) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t i = 0; i < chain.states; ++i) {
      if (dist[i] == 0.0) continue;
      for (std::size_t j = 0; j < chain.states; ++j) next[j] += dist[i] * chain.at(i, j);
    }
    dist.swap(next);
  }
  return dist[target];
}

double Confusion::tpr() const {
  const auto p = tp + fn;
  return p == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(p);
}

double Confusion::fpr() const {
  const auto n = fp + tn;
  return n == 0 ? 0.0 : static_cast<double>(fp) / static_cast<double>(n);
}

RocCurve roc_curve(std::span<const double> estimates, std::span<const double> truth,
                   double t_gt) {
  check_pair(estimates, truth);
  std::vector<std::size_t> order(estimates.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return estimates[a] > estimates[b]; });

  RocCurve curve;
  for (double t : truth) (t > t_gt ? curve.positives : curve.negatives) += 1;
  const auto pos = static_cast<double>(curve.positives);
  const auto neg = static_cast<double>(curve.negatives);
  auto rate = [](std::size_t k, double total) { return total > 0.0 ? k / total : 0.0; };

  constexpr double inf = std::numeric_limits<double>::infinity();
  curve.points.push_back({inf, 0.0, 0.0});
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double value = estimates[order[i]];
    // every sample sharing this estimate flips to positive together
    while (i < order.size() && estimates[order[i]] == value) {
      (truth[order[i]] > t_gt ? tp : fp) += 1;
      ++i;
    }
    curve.points.push_back({value, rate(fp, neg), rate(tp, pos)});
  }
  curve.points.push_back({-inf, neg > 0.0 ? 1.0 : 0.0, pos > 0.0 ? 1.0 : 0.0});

  curve.auc_defined = curve.positives > 0 && curve.negatives > 0;
  if (!curve.auc_defined) {
    curve.auc = std::numeric_limits<double>::quiet_NaN();
    return curve;
  }
  double auc = 0.0;
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    const auto& a = curve.points[i - 1];
    const auto& b = curve.points[i];
    auc += (b.fpr - a.fpr) * (a.tpr + b.tpr) * 0.5;
  }
  curve.auc = std::clamp(auc, 0.0, 1.0);
  return curve;
}

Confusion confusion_at(std::span<const double> estimates, std::span<const double> truth,
                       double t_pred, double t_gt) {
  check_pair(estimates, truth);
  Confusion c;
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    const bool predicted = estimates[i] > t_pred;
    const bool actual = truth[i] > t_gt;
    if (predicted && actual) ++c.tp;
    else if (predicted) ++c.fp;
    else if (actual) ++c.fn;
    else ++c.tn;
  }
  return c;
}

RocPoint operating_point(const RocCurve& curve, double target_tpr) {
  if (curve.points.empty()) throw Error("empty-input", "empty ROC curve");
  RocPoint best = curve.points.front();
  double best_gap = std::abs(best.tpr - target_tpr);
  for (const auto& p : curve.points) {
    const double gap = std::abs(p.tpr - target_tpr);
    if (gap < best_gap || (gap == best_gap && p.fpr < best.fpr)) {
      best = p;
      best_gap = gap;
    }
  }
  return best;
}

double mse(std::span<const double> estimates, std::span<const double> truth) {
  check_pair(estimates, truth);
  double acc = 0.0;
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    const double d = estimates[i] - truth[i];
    acc += d * d;
  }
  return acc / static_cast<double>(estimates.size());
}

BootstrapResult bootstrap_mean_diff_test(std::span<const double> a, std::span<const double> b,
                                         int iters, Rng& rng) {
  if (a.empty() || b.empty()) throw Error("empty-input", "both groups need samples");
  if (iters < 1) throw Error("invalid-argument", "iters must be >= 1");
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());

  BootstrapResult res;
  res.observed_diff = mean(a) - mean(b);
  const double observed = std::abs(res.observed_diff);
  long extreme = 0;
  for (int it = 0; it < iters; ++it) {
    double sa = 0.0, sb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sa += pooled[rng.index(pooled.size())];
    for (std::size_t i = 0; i < b.size(); ++i) sb += pooled[rng.index(pooled.size())];
    const double diff = sa / static_cast<double>(a.size()) - sb / static_cast<double>(b.size());
    if (std::abs(diff) >= observed) ++extreme;
  }
  res.p_value = static_cast<double>(extreme + 1) / static_cast<double>(iters + 1);
  return res;
}

long Heatmap::total() const { return std::accumulate(counts.begin(), counts.end(), 0L); }

Heatmap heatmap(std::span<const TrajectorySample> trajectory, MotionFilter filter, int bins,
                double extent_x, double extent_y) {
  if (bins < 1) throw Error("invalid-argument", "bins must be >= 1");
  if (!(extent_x > 0.0 && extent_y > 0.0)) throw Error("invalid-argument", "extent must be > 0");
  Heatmap map;
  map.bins = bins;
  map.counts.assign(static_cast<std::size_t>(bins) * bins, 0);
  auto cell = [bins](double v, double extent) {
    return std::clamp(static_cast<int>(std::floor(v / extent * bins)), 0, bins - 1);
  };
  for (const auto& s : trajectory) {
    if (filter == MotionFilter::Turning && !s.turning) continue;
    if (filter == MotionFilter::Forward && s.turning) continue;
    const int col = cell(s.x, extent_x);
    const int row = cell(s.y, extent_y);
    ++map.counts[static_cast<std::size_t>(row) * bins + col];
  }
  return map;
}

void write_heatmap_csv(const Heatmap& map, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("io-error", "cannot write " + path);
  for (int row = 0; row < map.bins; ++row) {
    for (int col = 0; col < map.bins; ++col) {
      if (col) out << ',';
      out << map.at(col, row);
    }
    out << '\n';
  }
}

void write_heatmap_pgm(const Heatmap& map, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("io-error", "cannot write " + path);
  out << "P5\n" << map.bins << ' ' << map.bins << "\n255\n";
  const long peak = map.counts.empty() ? 0 : *std::max_element(map.counts.begin(), map.counts.end());
  // image row 0 is the far (max y) side of the room
  for (int row = map.bins - 1; row >= 0; --row) {
    for (int col = 0; col < map.bins; ++col) {
      const long c = map.at(col, row);
      const auto v = peak > 0 ? static_cast<unsigned char>((c * 255 + peak / 2) / peak) : 0;
      out.put(static_cast<char>(v));
    }
  }
}

}  // namespace pssl::analytics
