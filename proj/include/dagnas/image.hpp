#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dagnas/training.hpp"

namespace dagnas {

/// 8-bit grayscale image, row-major.
class GrayImage {
 public:
  GrayImage(std::size_t width, std::size_t height, std::vector<std::uint8_t> pixels);
  GrayImage(std::size_t width, std::size_t height, std::uint8_t fill = 0);

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  std::uint8_t at(std::size_t x, std::size_t y) const { return pixels_[y * width_ + x]; }
  void set(std::size_t x, std::size_t y, std::uint8_t v) { pixels_[y * width_ + x] = v; }
  const std::vector<std::uint8_t>& pixels() const { return pixels_; }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;

 private:
  std::size_t width_;
  std::size_t height_;
  std::vector<std::uint8_t> pixels_;
};

/// Parses ASCII (P2) or binary (P5) PGM with maxval 255. Throws
/// std::invalid_argument on a malformed header, another maxval, or truncated data.
GrayImage parse_pgm(const std::string& bytes);
/// Throws IoError if the file cannot be read.
GrayImage load_pgm(const std::filesystem::path& path);
/// Binary P5.
std::string encode_pgm(const GrayImage& img);

struct PixelOffset {
  int dx;
  int dy;
};

/// Neighbours that precede a pixel in raster order, in the order the
/// brightness predictor consumes them. Entry 0 is the left neighbour.
inline constexpr std::array<PixelOffset, 18> kPreviousPoints = {{
    {-1, 0},  {0, -1},  {-1, -1}, {1, -1},  {-2, 0},  {0, -2},
    {-2, -1}, {-1, -2}, {1, -2},  {2, -1},  {-2, -2}, {2, -2},
    {-3, 0},  {0, -3},  {-3, -1}, {-1, -3}, {1, -3},  {3, -1},
}};

inline constexpr std::size_t kMinPoints = 2;
inline constexpr std::size_t kMaxPoints = kPreviousPoints.size();

/// Brightness prediction from `points` previous pixels. The left neighbour
/// is the base: the target is (B(x,y) - base)/100 and the inputs are
/// (B(neighbour j) - base)/100 for neighbours 1..points-1. Pixels whose
/// neighbourhood leaves the image are skipped. Rows are in raster order.
/// Throws std::invalid_argument unless 2 <= points <= 18.
TrainingMatrix brightness_dataset(const GrayImage& img, std::size_t points);

/// One row per pixel in raster order: inputs (x/(w-1), y/(h-1)) (0 along a
/// unit dimension), target B/255.
TrainingMatrix xy_dataset(const GrayImage& img);

}  // namespace dagnas
