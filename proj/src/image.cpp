#include "dagnas/image.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

#include "dagnas/errors.hpp"

namespace dagnas {

GrayImage::GrayImage(std::size_t width, std::size_t height, std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  if (width == 0 || height == 0) throw std::invalid_argument("image dimensions must be positive");
  if (pixels_.size() != width * height) throw std::invalid_argument("pixel count does not match dimensions");
}

GrayImage::GrayImage(std::size_t width, std::size_t height, std::uint8_t fill)
    : GrayImage(width, height, std::vector<std::uint8_t>(width * height, fill)) {}

namespace {

class HeaderReader {
 public:
  explicit HeaderReader(const std::string& s) : s_(s) {}

  void skip_blanks_and_comments() {
    while (pos_ < s_.size()) {
      if (std::isspace(static_cast<unsigned char>(s_[pos_]))) {
        ++pos_;
      } else if (s_[pos_] == '#') {
        while (pos_ < s_.size() && s_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  unsigned long number(const char* what) {
    skip_blanks_and_comments();
    const std::size_t start = pos_;
    unsigned long v = 0;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
      v = v * 10 + static_cast<unsigned long>(s_[pos_] - '0');
      if (v > 1'000'000'000UL) throw std::invalid_argument(std::string("PGM ") + what + " too large");
      ++pos_;
    }
    if (pos_ == start) throw std::invalid_argument(std::string("PGM: expected ") + what);
    return v;
  }

  std::size_t pos() const { return pos_; }
  void advance(std::size_t n) { pos_ += n; }

 private:
  const std::string& s_;
  std::size_t pos_ = 0;
};

}  // namespace

GrayImage parse_pgm(const std::string& bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '2' && bytes[1] != '5'))
    throw std::invalid_argument("not a P2/P5 PGM file");
  const bool binary = bytes[1] == '5';
  HeaderReader rd(bytes);
  rd.advance(2);
  const unsigned long width = rd.number("width");
  const unsigned long height = rd.number("height");
  const unsigned long maxval = rd.number("maxval");
  if (width == 0 || height == 0) throw std::invalid_argument("PGM dimensions must be positive");
  if (maxval != 255) throw std::invalid_argument("PGM maxval must be 255, got " + std::to_string(maxval));

  const std::size_t count = width * height;
  std::vector<std::uint8_t> pixels(count);
  if (binary) {
    // Exactly one whitespace byte separates the header from the raster.
    std::size_t p = rd.pos();
    if (p >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[p])))
      throw std::invalid_argument("PGM: missing separator before raster");
    ++p;
    if (bytes.size() - p < count) throw std::invalid_argument("PGM raster is truncated");
    for (std::size_t i = 0; i < count; ++i) pixels[i] = static_cast<std::uint8_t>(bytes[p + i]);
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      unsigned long v = 0;
      try {
        v = rd.number("pixel value");
      } catch (const std::invalid_argument&) {
        throw std::invalid_argument("PGM raster is truncated");
      }
      if (v > 255) throw std::invalid_argument("PGM pixel value exceeds maxval");
      pixels[i] = static_cast<std::uint8_t>(v);
    }
  }
  return GrayImage(width, height, std::move(pixels));
}

GrayImage load_pgm(const std::filesystem::path& path) { return parse_pgm(read_file(path)); }

std::string encode_pgm(const GrayImage& img) {
  std::string out = "P5\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
  out.append(img.pixels().begin(), img.pixels().end());
  return out;
}

TrainingMatrix brightness_dataset(const GrayImage& img, std::size_t points) {
  if (points < kMinPoints || points > kMaxPoints)
    throw std::invalid_argument("number of points must be in [2, 18], got " + std::to_string(points));
  int left = 0, right = 0, up = 0;
  for (std::size_t j = 0; j < points; ++j) {
    left = std::max(left, -kPreviousPoints[j].dx);
    right = std::max(right, kPreviousPoints[j].dx);
    up = std::max(up, -kPreviousPoints[j].dy);
  }
  TrainingMatrix data(points - 1);
  std::vector<double> x(points - 1);
  const int w = static_cast<int>(img.width());
  const int h = static_cast<int>(img.height());
  for (int y = up; y < h; ++y)
    for (int px = left; px < w - right; ++px) {
      const double base = img.at(px + kPreviousPoints[0].dx, y + kPreviousPoints[0].dy);
      for (std::size_t j = 1; j < points; ++j)
        x[j - 1] = (img.at(px + kPreviousPoints[j].dx, y + kPreviousPoints[j].dy) - base) / 100.0;
      data.add_row((img.at(px, y) - base) / 100.0, x);
    }
  return data;
}

TrainingMatrix xy_dataset(const GrayImage& img) {
  TrainingMatrix data(2);
  auto scaled = [](std::size_t v, std::size_t extent) {
    return extent > 1 ? static_cast<double>(v) / static_cast<double>(extent - 1) : 0.0;
  };
  for (std::size_t y = 0; y < img.height(); ++y)
    for (std::size_t x = 0; x < img.width(); ++x) {
      const double xy[2] = {scaled(x, img.width()), scaled(y, img.height())};
      data.add_row(img.at(x, y) / 255.0, xy);
    }
  return data;
}

}  // namespace dagnas
