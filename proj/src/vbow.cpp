#include "pssl/vbow.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "pssl/error.hpp"

namespace pssl::vbow {

namespace {

constexpr double kSqrt2 = 1.41421356237309504880;

double squared_distance(const double* a, const double* b, std::size_t len) {
  double acc = 0.0;
  for (std::size_t i = 0; i < len; ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

// Copies the patch at pos into out (row-major, patch_w * patch_h values).
void read_patch(const Image& img, PatchPosition pos, int patch_w, int patch_h, double* out) {
  const auto px = img.pixels();
  for (int r = 0; r < patch_h; ++r) {
    const double* row = px.data() + static_cast<std::size_t>(pos.y + r) * img.width() + pos.x;
    std::copy(row, row + patch_w, out + static_cast<std::size_t>(r) * patch_w);
  }
}

std::size_t nearest_index(const double* sample, const std::vector<double>& flat_centroids,
                          std::size_t count, std::size_t len) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < count; ++c) {
    const double d = squared_distance(sample, flat_centroids.data() + c * len, len);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

std::vector<double> flatten_centroids(const std::vector<Patch>& centroids) {
  std::vector<double> flat;
  for (const auto& c : centroids) flat.insert(flat.end(), c.values.begin(), c.values.end());
  return flat;
}

void check_patch_fits(const Image& img, int patch_w, int patch_h) {
  if (patch_w < 1 || patch_h < 1) throw Error("invalid-argument", "patch size must be positive");
  if (img.width() < patch_w || img.height() < patch_h)
    throw Error("image-too-small", "image is smaller than the patch");
}

nlohmann::json patches_to_json(const std::vector<Patch>& patches) {
  auto arr = nlohmann::json::array();
  for (const auto& p : patches) arr.push_back(p.values);
  return arr;
}

std::vector<Patch> patches_from_json(const nlohmann::json& arr, int w, int h) {
  std::vector<Patch> out;
  for (const auto& item : arr) {
    Patch p{w, h, item.get<std::vector<double>>()};
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace

void TextonDictionary::validate() const {
  if (intensity_textons.empty())
    throw Error("invalid-dictionary", "dictionary needs at least one texton per type");
  if (intensity_textons.size() != gradient_textons.size())
    throw Error("invalid-dictionary", "intensity and gradient texton counts differ");
  const std::size_t len = static_cast<std::size_t>(w) * h;
  for (const auto* family : {&intensity_textons, &gradient_textons}) {
    for (const auto& p : *family) {
      if (p.w != w || p.h != h || p.values.size() != len)
        throw Error("invalid-dictionary", "texton shape differs from dictionary header");
      for (double v : p.values) {
        if (!std::isfinite(v)) throw Error("invalid-dictionary", "non-finite centroid value");
      }
    }
  }
}

std::vector<double> FeatureVector::flatten() const {
  std::vector<double> out(histogram);
  out.push_back(entropy);
  return out;
}

Image gradient_image(const Image& img) {
  const int w = img.width();
  const int h = img.height();
  std::vector<double> out(img.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double gx = 0.0;
      double gy = 0.0;
      if (w > 1) {
        if (x == 0) gx = img.at(1, y) - img.at(0, y);
        else if (x == w - 1) gx = img.at(w - 1, y) - img.at(w - 2, y);
        else gx = 0.5 * (img.at(x + 1, y) - img.at(x - 1, y));
      }
      if (h > 1) {
        if (y == 0) gy = img.at(x, 1) - img.at(x, 0);
        else if (y == h - 1) gy = img.at(x, h - 1) - img.at(x, h - 2);
        else gy = 0.5 * (img.at(x, y + 1) - img.at(x, y - 1));
      }
      out[static_cast<std::size_t>(y) * w + x] = std::min(1.0, std::sqrt(gx * gx + gy * gy) / kSqrt2);
    }
  }
  return Image(w, h, std::move(out));
}

std::vector<PatchPosition> sample_positions(int width, int height, int patch_w, int patch_h,
                                            int count, Rng& rng) {
  if (count < 1) throw Error("invalid-argument", "patch count must be at least 1");
  if (width < patch_w || height < patch_h)
    throw Error("image-too-small", "image is smaller than the patch");
  const auto span_x = static_cast<std::size_t>(width - patch_w + 1);
  const auto span_y = static_cast<std::size_t>(height - patch_h + 1);
  std::vector<PatchPosition> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const int x = static_cast<int>(rng.index(span_x));
    const int y = static_cast<int>(rng.index(span_y));
    out.push_back({x, y});
  }
  return out;
}

Patch patch_at(const Image& img, PatchPosition pos, int patch_w, int patch_h) {
  check_patch_fits(img, patch_w, patch_h);
  if (pos.x < 0 || pos.y < 0 || pos.x + patch_w > img.width() || pos.y + patch_h > img.height())
    throw Error("invalid-argument", "patch position outside the image");
  Patch p{patch_w, patch_h, std::vector<double>(static_cast<std::size_t>(patch_w) * patch_h)};
  read_patch(img, pos, patch_w, patch_h, p.values.data());
  return p;
}

std::vector<Patch> extract_patches(const Image& img, int count, Rng& rng, int patch_w,
                                   int patch_h) {
  check_patch_fits(img, patch_w, patch_h);
  const auto positions = sample_positions(img.width(), img.height(), patch_w, patch_h, count, rng);
  std::vector<Patch> out;
  out.reserve(positions.size());
  for (const auto& pos : positions) out.push_back(patch_at(img, pos, patch_w, patch_h));
  return out;
}

std::vector<Patch> kohonen_cluster(std::span<const Image> images, const TrainingOptions& opts,
                                   Rng& rng) {
  if (images.empty()) throw Error("no-images", "dictionary training needs at least one image");
  if (opts.textons < 1) throw Error("invalid-argument", "texton count must be at least 1");
  if (opts.iterations < 1) throw Error("invalid-argument", "iterations must be at least 1");
  for (const auto& img : images) check_patch_fits(img, opts.patch_w, opts.patch_h);

  const std::size_t len = static_cast<std::size_t>(opts.patch_w) * opts.patch_h;
  const auto n = static_cast<std::size_t>(opts.textons);
  std::vector<double> sample(len);

  auto draw = [&](double* out) {
    const Image& img = images[rng.index(images.size())];
    const int x = static_cast<int>(rng.index(static_cast<std::size_t>(img.width() - opts.patch_w + 1)));
    const int y = static_cast<int>(rng.index(static_cast<std::size_t>(img.height() - opts.patch_h + 1)));
    read_patch(img, {x, y}, opts.patch_w, opts.patch_h, out);
  };

  // Initial centroids are random patches; exact duplicates are redrawn a
  // bounded number of times so flat regions do not collapse the dictionary.
  std::vector<double> centroids(n * len);
  for (std::size_t c = 0; c < n; ++c) {
    double* dst = centroids.data() + c * len;
    for (int attempt = 0; attempt < 100; ++attempt) {
      draw(dst);
      bool duplicate = false;
      for (std::size_t prev = 0; prev < c && !duplicate; ++prev)
        duplicate = squared_distance(dst, centroids.data() + prev * len, len) == 0.0;
      if (!duplicate) break;
    }
  }

  const double denom = opts.iterations > 1 ? static_cast<double>(opts.iterations - 1) : 1.0;
  for (int it = 0; it < opts.iterations; ++it) {
    const double rate = opts.rate_start + (opts.rate_end - opts.rate_start) * (it / denom);
    draw(sample.data());
    const std::size_t winner = nearest_index(sample.data(), centroids, n, len);
    double* c = centroids.data() + winner * len;
    for (std::size_t i = 0; i < len; ++i) c[i] += rate * (sample[i] - c[i]);
  }

  std::vector<Patch> out;
  out.reserve(n);
  for (std::size_t c = 0; c < n; ++c) {
    out.push_back({opts.patch_w, opts.patch_h,
                   std::vector<double>(centroids.begin() + c * len, centroids.begin() + (c + 1) * len)});
  }
  return out;
}

TextonDictionary train_dictionary(std::span<const Image> images, const TrainingOptions& opts,
                                  Rng& rng) {
  if (images.empty()) throw Error("no-images", "dictionary training needs at least one image");
  std::vector<Image> gradients;
  gradients.reserve(images.size());
  for (const auto& img : images) gradients.push_back(gradient_image(img));

  TextonDictionary dict;
  dict.w = opts.patch_w;
  dict.h = opts.patch_h;
  dict.intensity_textons = kohonen_cluster(images, opts, rng);
  dict.gradient_textons = kohonen_cluster(gradients, opts, rng);
  return dict;
}

std::size_t nearest_texton(const Patch& patch, std::span<const Patch> centroids) {
  if (centroids.empty()) throw Error("empty-dictionary", "no centroids to compare against");
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    const Patch& ref = centroids[c];
    if (ref.w != patch.w || ref.h != patch.h || ref.values.size() != patch.values.size())
      throw Error("shape-mismatch", "patch and centroid shapes differ");
    const double d = squared_distance(patch.values.data(), ref.values.data(), patch.values.size());
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

double shannon_entropy(std::span<const double> hist) {
  double h = 0.0;
  for (double p : hist) {
    if (p < 0.0) throw Error("negative-bin", "histogram bins must be non-negative");
    if (p > 0.0) h -= p * std::log2(p);
  }
  if (hist.size() < 2) return 0.0;
  return std::clamp(h / std::log2(static_cast<double>(hist.size())), 0.0, 1.0);
}

FeatureVector texton_histogram(const Image& img, const TextonDictionary& dict, int samples,
                               Rng& rng) {
  return texton_histogram(img, gradient_image(img), dict, samples, rng);
}

FeatureVector texton_histogram(const Image& img, const Image& gradient,
                               const TextonDictionary& dict, int samples, Rng& rng) {
  check_patch_fits(img, dict.w, dict.h);
  const auto positions = sample_positions(img.width(), img.height(), dict.w, dict.h, samples, rng);
  const std::size_t n = dict.intensity_textons.size();
  const std::size_t len = static_cast<std::size_t>(dict.w) * dict.h;
  const auto intensity = flatten_centroids(dict.intensity_textons);
  const auto grad = flatten_centroids(dict.gradient_textons);

  std::vector<double> counts(2 * n, 0.0);
  std::vector<double> patch(len);
  for (const auto& pos : positions) {
    read_patch(img, pos, dict.w, dict.h, patch.data());
    counts[nearest_index(patch.data(), intensity, n, len)] += 1.0;
    read_patch(gradient, pos, dict.w, dict.h, patch.data());
    counts[n + nearest_index(patch.data(), grad, n, len)] += 1.0;
  }
  const double total = 2.0 * static_cast<double>(positions.size());
  for (double& c : counts) c /= total;

  FeatureVector fv;
  fv.entropy = shannon_entropy(counts);
  fv.histogram = std::move(counts);
  return fv;
}

std::string dictionary_to_json(const TextonDictionary& dict) {
  dict.validate();
  nlohmann::json j;
  j["n"] = dict.textons_per_type();
  j["w"] = dict.w;
  j["h"] = dict.h;
  j["intensity"] = patches_to_json(dict.intensity_textons);
  j["gradient"] = patches_to_json(dict.gradient_textons);
  return j.dump(1);
}

TextonDictionary dictionary_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error("invalid-dictionary", e.what());
  }
  TextonDictionary dict;
  try {
    dict.w = j.at("w").get<int>();
    dict.h = j.at("h").get<int>();
    const int n = j.at("n").get<int>();
    dict.intensity_textons = patches_from_json(j.at("intensity"), dict.w, dict.h);
    dict.gradient_textons = patches_from_json(j.at("gradient"), dict.w, dict.h);
    if (dict.textons_per_type() != n)
      throw Error("invalid-dictionary", "header n does not match texton count");
  } catch (const nlohmann::json::exception& e) {
    throw Error("invalid-dictionary", e.what());
  }
  dict.validate();
  return dict;
}

void save_dictionary(const TextonDictionary& dict, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("io-error", "cannot write " + path);
  out << dictionary_to_json(dict) << '\n';
}

TextonDictionary load_dictionary(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("io-error", "cannot read " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return dictionary_from_json(buf.str());
}

}  // namespace pssl::vbow
