#ifndef PSSL_IMAGE_HPP
#define PSSL_IMAGE_HPP

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace pssl {

// Row-major grayscale frame with intensities in [0, 1].
class Image {
 public:
  Image() = default;
  Image(int width, int height, double fill = 0.0);
  // Throws pssl::Error("invalid-image") if the buffer size or any value is off.
  Image(int width, int height, std::vector<double> pixels);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return pixels_.size(); }

  double at(int x, int y) const { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }
  double& at(int x, int y) { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }

  std::span<const double> pixels() const { return pixels_; }
  std::span<double> pixels() { return pixels_; }

  bool operator==(const Image&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> pixels_;
};

// Binary P5 with maxval 255; intensities are rounded to 8 bits.
void write_pgm(const Image& img, const std::string& path);
// Accepts P5 with maxval <= 255 and '#' comment lines in the header. Throws
// pssl::Error("malformed-pgm") with the path in the message.
Image read_pgm(const std::string& path);

}  // namespace pssl

#endif  // PSSL_IMAGE_HPP
