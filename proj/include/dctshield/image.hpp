#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace dctshield {

inline constexpr int kBlockSize = 8;
inline constexpr int kBlockArea = kBlockSize * kBlockSize;

/// Raised for unreadable/unwritable files and malformed or unsupported
/// image payloads. The CLI maps it to exit code 2.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// 8-bit luminance raster, row-major. Always at least 8x8.
class GrayImage {
 public:
  GrayImage(int width, int height, std::vector<std::uint8_t> samples);
  GrayImage(int width, int height, std::uint8_t fill);

  int width() const { return width_; }
  int height() const { return height_; }
  std::uint8_t at(int x, int y) const { return samples_[static_cast<std::size_t>(y) * width_ + x]; }
  std::uint8_t& at(int x, int y) { return samples_[static_cast<std::size_t>(y) * width_ + x]; }
  const std::vector<std::uint8_t>& samples() const { return samples_; }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;

 private:
  int width_;
  int height_;
  std::vector<std::uint8_t> samples_;
};

/// One 8x8 block of real-valued pixels, row-major: index = row * 8 + col.
using PixelBlock = std::array<double, kBlockArea>;

/// The image cut into 8x8 blocks, blocks stored left to right, top to bottom.
/// Values are real so post-processing overflow survives until assembly.
struct BlockGrid {
  int blocks_x = 0;
  int blocks_y = 0;
  std::vector<PixelBlock> blocks;

  std::size_t size() const { return blocks.size(); }
  int width() const { return blocks_x * kBlockSize; }
  int height() const { return blocks_y * kBlockSize; }
};

/// Luma of an 8-bit RGB triple with weights 0.299/0.587/0.114,
/// rounded half away from zero in integer arithmetic.
std::uint8_t luma(std::uint8_t r, std::uint8_t g, std::uint8_t b);

/// Reads a binary PGM (P5, maxval 255) or an 8-bit PNG. Color PNGs are
/// converted to luminance; alpha is discarded.
GrayImage load_image(const std::filesystem::path& path);

void save_pgm(const GrayImage& img, const std::filesystem::path& path);
void save_png(const GrayImage& img, const std::filesystem::path& path);
/// Dispatches on the extension: ".png" writes PNG, anything else PGM.
void save_image(const GrayImage& img, const std::filesystem::path& path);

/// Splits into floor(w/8) x floor(h/8) blocks; trailing columns/rows are cropped.
BlockGrid partition_blocks(const GrayImage& img);

/// Inverse of partition_blocks. Each value is rounded half away from zero
/// and clipped to [0, 255].
GrayImage assemble_blocks(const BlockGrid& grid);

/// The image cropped to the largest multiple-of-8 dimensions.
GrayImage crop_to_blocks(const GrayImage& img);

}  // namespace dctshield
