#include "pssl/image.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <string>

#include "pssl/error.hpp"

namespace pssl {

Image::Image(int width, int height, double fill)
    : width_(width), height_(height),
      pixels_(static_cast<std::size_t>(width > 0 ? width : 0) * (height > 0 ? height : 0), fill) {
  if (width <= 0 || height <= 0) throw Error("invalid-image", "dimensions must be positive");
  if (!(fill >= 0.0 && fill <= 1.0)) throw Error("invalid-image", "fill outside [0,1]");
}

Image::Image(int width, int height, std::vector<double> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  if (width <= 0 || height <= 0) throw Error("invalid-image", "dimensions must be positive");
  if (pixels_.size() != static_cast<std::size_t>(width) * height)
    throw Error("invalid-image", "pixel count does not match width*height");
  for (double v : pixels_) {
    if (!(v >= 0.0 && v <= 1.0)) throw Error("invalid-image", "pixel value outside [0,1]");
  }
}

void write_pgm(const Image& img, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("io-error", "cannot write " + path);
  out << "P5\n" << img.width() << ' ' << img.height() << "\n255\n";
  std::string row(static_cast<std::size_t>(img.width()), '\0');
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x)
      row[static_cast<std::size_t>(x)] = static_cast<char>(std::lround(img.at(x, y) * 255.0));
    out.write(row.data(), static_cast<std::streamsize>(row.size()));
  }
  if (!out) throw Error("io-error", "failed writing " + path);
}

namespace {

// Next whitespace-delimited header token, skipping comments.
bool header_token(std::istream& in, std::string& tok) {
  tok.clear();
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) return true;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  return !tok.empty();
}

}  // namespace

Image read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("malformed-pgm", path + ": cannot open");
  std::string magic, w, h, maxval;
  if (!header_token(in, magic) || magic != "P5") throw Error("malformed-pgm", path + ": not a P5 file");
  if (!header_token(in, w) || !header_token(in, h) || !header_token(in, maxval))
    throw Error("malformed-pgm", path + ": truncated header");
  int width = 0, height = 0, maxv = 0;
  try {
    width = std::stoi(w);
    height = std::stoi(h);
    maxv = std::stoi(maxval);
  } catch (const std::exception&) {
    throw Error("malformed-pgm", path + ": non-numeric header field");
  }
  if (width <= 0 || height <= 0 || maxv <= 0 || maxv > 255)
    throw Error("malformed-pgm", path + ": unsupported dimensions or maxval");
  std::string raw(static_cast<std::size_t>(width) * height, '\0');
  in.read(raw.data(), static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size()))
    throw Error("malformed-pgm", path + ": truncated pixel data");
  std::vector<double> px(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const auto v = static_cast<unsigned char>(raw[i]);
    if (v > maxv) throw Error("malformed-pgm", path + ": pixel above maxval");
    px[i] = static_cast<double>(v) / maxv;
  }
  return Image(width, height, std::move(px));
}

}  // namespace pssl
