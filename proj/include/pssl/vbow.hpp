#ifndef PSSL_VBOW_HPP
#define PSSL_VBOW_HPP

// Visual bag of words: texton dictionaries learned by winner-take-all
// Kohonen clustering, and the texton histogram + entropy feature vector
// fed to the monocular disparity estimator.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "pssl/image.hpp"
#include "pssl/random.hpp"

namespace pssl::vbow {

inline constexpr int kDefaultPatchSize = 5;
inline constexpr int kDefaultTextons = 10;
inline constexpr int kDefaultSamples = 500;
inline constexpr int kDefaultKohonenIterations = 50000;

struct Patch {
  int w = kDefaultPatchSize;
  int h = kDefaultPatchSize;
  std::vector<double> values;

  bool operator==(const Patch&) const = default;
};

struct PatchPosition {
  int x = 0;
  int y = 0;
  bool operator==(const PatchPosition&) const = default;
};

struct TextonDictionary {
  int w = kDefaultPatchSize;
  int h = kDefaultPatchSize;
  std::vector<Patch> intensity_textons;
  std::vector<Patch> gradient_textons;

  int textons_per_type() const { return static_cast<int>(intensity_textons.size()); }
  // Length of the feature vector: 2n histogram bins plus entropy.
  int feature_length() const { return 2 * textons_per_type() + 1; }

  // Throws pssl::Error("invalid-dictionary") on unequal sizes, bad shapes
  // or non-finite centroids.
  void validate() const;

  bool operator==(const TextonDictionary&) const = default;
};

struct FeatureVector {
  std::vector<double> histogram;  // intensity bins, then gradient bins
  double entropy = 0.0;           // normalized to [0, 1]

  // histogram followed by entropy; the vector the regressors consume.
  std::vector<double> flatten() const;

  bool operator==(const FeatureVector&) const = default;
};

struct TrainingOptions {
  int textons = kDefaultTextons;
  int iterations = kDefaultKohonenIterations;
  int patch_w = kDefaultPatchSize;
  int patch_h = kDefaultPatchSize;
  double rate_start = 0.1;
  double rate_end = 0.01;
};

// Central-difference gradient magnitude (one-sided at the borders), scaled
// into [0, 1] by the largest attainable magnitude sqrt(2).
Image gradient_image(const Image& img);

std::vector<PatchPosition> sample_positions(int width, int height, int patch_w,
                                            int patch_h, int count, Rng& rng);

Patch patch_at(const Image& img, PatchPosition pos, int patch_w, int patch_h);

// m patches at uniformly random top-left corners.
// Throws pssl::Error("image-too-small") or ("invalid-argument").
std::vector<Patch> extract_patches(const Image& img, int count, Rng& rng,
                                   int patch_w = kDefaultPatchSize,
                                   int patch_h = kDefaultPatchSize);

// Winner-take-all Kohonen clustering of one patch family. Each presentation
// draws an image and a position uniformly; the learning rate decays linearly
// from rate_start to rate_end.
std::vector<Patch> kohonen_cluster(std::span<const Image> images, const TrainingOptions& opts,
                                   Rng& rng);

// Intensity textons from the images, gradient textons from their gradient
// images. Throws pssl::Error("no-images") on an empty list.
TextonDictionary train_dictionary(std::span<const Image> images, const TrainingOptions& opts,
                                  Rng& rng);

// Index of the closest centroid (Euclidean), lowest index on ties.
// Throws pssl::Error("shape-mismatch") / ("empty-dictionary").
std::size_t nearest_texton(const Patch& patch, std::span<const Patch> centroids);

// -sum p log2 p / log2(len); throws pssl::Error("negative-bin").
double shannon_entropy(std::span<const double> hist);

// Each sampled location adds one count to the intensity half and one to the
// gradient half; all 2n bins are normalized jointly.
FeatureVector texton_histogram(const Image& img, const TextonDictionary& dict, int samples,
                               Rng& rng);

// Same as above when the gradient image is already available.
FeatureVector texton_histogram(const Image& img, const Image& gradient,
                               const TextonDictionary& dict, int samples, Rng& rng);

// JSON: {"n":..,"w":..,"h":..,"intensity":[[..],..],"gradient":[[..],..]}
std::string dictionary_to_json(const TextonDictionary& dict);
TextonDictionary dictionary_from_json(const std::string& text);
void save_dictionary(const TextonDictionary& dict, const std::string& path);
TextonDictionary load_dictionary(const std::string& path);

}  // namespace pssl::vbow

#endif  // PSSL_VBOW_HPP
