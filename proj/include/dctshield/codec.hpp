#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "dctshield/image.hpp"
#include "dctshield/parallel.hpp"

namespace dctshield {

/// DCT frequency position (i = vertical, j = horizontal), both in 0..7.
struct Subband {
  int i = 0;
  int j = 0;

  constexpr int index() const { return i * kBlockSize + j; }
  static constexpr Subband from_index(int k) { return {k / kBlockSize, k % kBlockSize}; }
  constexpr bool is_dc() const { return i == 0 && j == 0; }
  friend constexpr bool operator==(Subband, Subband) = default;
};

/// 8x8 real coefficients, index = i * 8 + j.
using CoeffBlock = std::array<double, kBlockArea>;
/// 8x8 integer quantization levels X', same indexing as CoeffBlock.
using LevelBlock = std::array<std::int32_t, kBlockArea>;

/// 8x8 quantization steps, every step >= 1.
class QuantTable {
 public:
  explicit QuantTable(const std::array<int, kBlockArea>& steps);
  static QuantTable uniform(int step);

  int step(Subband s) const { return steps_[s.index()]; }
  int operator[](int index) const { return steps_[index]; }
  const std::array<int, kBlockArea>& steps() const { return steps_; }

  friend bool operator==(const QuantTable&, const QuantTable&) = default;

 private:
  std::array<int, kBlockArea> steps_;
};

/// Per-block DCT coefficients. Shape matches the originating BlockGrid.
struct CoefficientPlane {
  int blocks_x = 0;
  int blocks_y = 0;
  std::vector<CoeffBlock> blocks;

  std::size_t size() const { return blocks.size(); }
  /// Values of one subband across all blocks, in block order.
  std::vector<double> subband_values(Subband s) const;
};

struct QuantizedPlane {
  int blocks_x = 0;
  int blocks_y = 0;
  std::vector<LevelBlock> blocks;

  std::size_t size() const { return blocks.size(); }
  std::vector<std::int32_t> subband_levels(Subband s) const;
};

/// Round half away from zero (the tie rule used everywhere in this library).
inline double round_half_away(double x) { return std::round(x); }

/// 2-D DCT of one block with orthonormal scaling 1/sqrt(2N) C(i) C(j),
/// C(0) = 1/sqrt(2). With level_shift the block is centered on 128 first.
CoeffBlock forward_dct(const PixelBlock& block, bool level_shift = true);

/// Exact adjoint of forward_dct. No rounding or clipping.
PixelBlock inverse_dct(const CoeffBlock& coeffs, bool level_shift = true);

CoefficientPlane forward_dct_plane(const BlockGrid& grid, bool level_shift = true,
                                   Exec exec = Exec::parallel);
BlockGrid inverse_dct_plane(const CoefficientPlane& plane, bool level_shift = true,
                            Exec exec = Exec::parallel);

/// The Annex K reference luminance table (quality 50).
const std::array<int, kBlockArea>& reference_luminance_table();

/// Reference table scaled by the usual IJG quality rule. Throws
/// std::invalid_argument outside 1..100.
QuantTable quality_to_table(int quality);

/// X' = round(X / Q) per subband.
QuantizedPlane quantize(const CoefficientPlane& plane, const QuantTable& table);
/// Y = Q * X'.
CoefficientPlane dequantize(const QuantizedPlane& levels, const QuantTable& table);

/// Standard JPEG zigzag scan, starting at (0,0) and ending at (7,7).
const std::array<Subband, kBlockArea>& zigzag_positions();

struct JpegResult {
  GrayImage decompressed;
  QuantizedPlane levels;
  QuantTable table;
};

/// Block DCT, quantization, dequantization, inverse DCT, rounding and
/// clipping. Output dimensions are cropped to multiples of 8.
JpegResult jpeg_pipeline(const GrayImage& img, int quality, Exec exec = Exec::parallel);

/// Pixel-domain synthesis shared by the codec and the anti-forensic path:
/// inverse DCT, round, clip, assemble.
GrayImage synthesize(const CoefficientPlane& plane, Exec exec = Exec::parallel);

/// 10 log10(255^2 / MSE); +infinity when the images are identical.
double psnr(const GrayImage& a, const GrayImage& b);

// Coefficient dumps. CSV header: block_x,block_y,i,j,level. The binary form
// is little-endian int32, blocks in row-major order, each block's 64 levels
// row-major, no header.
void write_levels_csv(const QuantizedPlane& levels, const std::filesystem::path& path);
void write_coefficients_csv(const CoefficientPlane& plane, const std::filesystem::path& path);
void write_levels_binary(const QuantizedPlane& levels, const std::filesystem::path& path);
QuantizedPlane read_levels_binary(const std::filesystem::path& path, int blocks_x, int blocks_y);

}  // namespace dctshield
