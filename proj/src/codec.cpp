#include "dctshield/codec.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace dctshield {

namespace {

// basis[u][x] = a(u) cos((2x + 1) u pi / 16), a(0) = sqrt(1/8), a(u) = 1/2
struct DctBasis {
  std::array<std::array<double, kBlockSize>, kBlockSize> m{};

  DctBasis() {
    for (int u = 0; u < kBlockSize; ++u) {
      const double a = u == 0 ? std::sqrt(1.0 / kBlockSize) : std::sqrt(2.0 / kBlockSize);
      for (int x = 0; x < kBlockSize; ++x)
        m[u][x] = a * std::cos((2 * x + 1) * u * std::numbers::pi / (2.0 * kBlockSize));
    }
  }
};

const DctBasis& basis() {
  static const DctBasis b;
  return b;
}

constexpr double kLevelShift = 128.0;

void check_shape(std::size_t blocks, std::size_t expected) {
  if (blocks != expected) throw std::invalid_argument("plane block count does not match its dimensions");
}

std::array<Subband, kBlockArea> make_zigzag() {
  std::array<Subband, kBlockArea> order{};
  int k = 0;
  for (int diag = 0; diag < 2 * kBlockSize - 1; ++diag) {
    // even anti-diagonals run bottom-left to top-right, odd ones the reverse
    const int lo = std::max(0, diag - (kBlockSize - 1));
    const int hi = std::min(diag, kBlockSize - 1);
    if (diag % 2 == 0)
      for (int i = hi; i >= lo; --i) order[k++] = {i, diag - i};
    else
      for (int i = lo; i <= hi; ++i) order[k++] = {i, diag - i};
  }
  return order;
}

void put_le32(std::ostream& out, std::int32_t v) {
  const auto u = static_cast<std::uint32_t>(v);
  const char bytes[4] = {static_cast<char>(u & 0xff), static_cast<char>((u >> 8) & 0xff),
                         static_cast<char>((u >> 16) & 0xff), static_cast<char>((u >> 24) & 0xff)};
  out.write(bytes, 4);
}

}  // namespace

QuantTable::QuantTable(const std::array<int, kBlockArea>& steps) : steps_(steps) {
  for (int s : steps_)
    if (s < 1) throw std::invalid_argument("quantization steps must be >= 1");
}

QuantTable QuantTable::uniform(int step) {
  std::array<int, kBlockArea> steps;
  steps.fill(step);
  return QuantTable(steps);
}

std::vector<double> CoefficientPlane::subband_values(Subband s) const {
  std::vector<double> out(blocks.size());
  for (std::size_t b = 0; b < blocks.size(); ++b) out[b] = blocks[b][s.index()];
  return out;
}

std::vector<std::int32_t> QuantizedPlane::subband_levels(Subband s) const {
  std::vector<std::int32_t> out(blocks.size());
  for (std::size_t b = 0; b < blocks.size(); ++b) out[b] = blocks[b][s.index()];
  return out;
}

CoeffBlock forward_dct(const PixelBlock& block, bool level_shift) {
  const auto& c = basis().m;
  const double shift = level_shift ? kLevelShift : 0.0;
  // rows first: tmp[x][v] = sum_y P(x, y) c[v][y]
  std::array<double, kBlockArea> tmp{};
  for (int x = 0; x < kBlockSize; ++x)
    for (int v = 0; v < kBlockSize; ++v) {
      double acc = 0.0;
      for (int y = 0; y < kBlockSize; ++y) acc += (block[x * kBlockSize + y] - shift) * c[v][y];
      tmp[x * kBlockSize + v] = acc;
    }
  CoeffBlock out{};
  for (int u = 0; u < kBlockSize; ++u)
    for (int v = 0; v < kBlockSize; ++v) {
      double acc = 0.0;
      for (int x = 0; x < kBlockSize; ++x) acc += c[u][x] * tmp[x * kBlockSize + v];
      out[u * kBlockSize + v] = acc;
    }
  return out;
}

PixelBlock inverse_dct(const CoeffBlock& coeffs, bool level_shift) {
  const auto& c = basis().m;
  const double shift = level_shift ? kLevelShift : 0.0;
  std::array<double, kBlockArea> tmp{};
  for (int x = 0; x < kBlockSize; ++x)
    for (int v = 0; v < kBlockSize; ++v) {
      double acc = 0.0;
      for (int u = 0; u < kBlockSize; ++u) acc += c[u][x] * coeffs[u * kBlockSize + v];
      tmp[x * kBlockSize + v] = acc;
    }
  PixelBlock out{};
  for (int x = 0; x < kBlockSize; ++x)
    for (int y = 0; y < kBlockSize; ++y) {
      double acc = 0.0;
      for (int v = 0; v < kBlockSize; ++v) acc += tmp[x * kBlockSize + v] * c[v][y];
      out[x * kBlockSize + y] = acc + shift;
    }
  return out;
}

CoefficientPlane forward_dct_plane(const BlockGrid& grid, bool level_shift, Exec exec) {
  check_shape(grid.blocks.size(), static_cast<std::size_t>(grid.blocks_x) * grid.blocks_y);
  CoefficientPlane plane{grid.blocks_x, grid.blocks_y, std::vector<CoeffBlock>(grid.blocks.size())};
  const auto n = static_cast<std::ptrdiff_t>(grid.blocks.size());
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t b = 0; b < n; ++b) plane.blocks[b] = forward_dct(grid.blocks[b], level_shift);
  } else {
    for (std::ptrdiff_t b = 0; b < n; ++b) plane.blocks[b] = forward_dct(grid.blocks[b], level_shift);
  }
  return plane;
}

BlockGrid inverse_dct_plane(const CoefficientPlane& plane, bool level_shift, Exec exec) {
  check_shape(plane.blocks.size(), static_cast<std::size_t>(plane.blocks_x) * plane.blocks_y);
  BlockGrid grid{plane.blocks_x, plane.blocks_y, std::vector<PixelBlock>(plane.blocks.size())};
  const auto n = static_cast<std::ptrdiff_t>(plane.blocks.size());
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t b = 0; b < n; ++b) grid.blocks[b] = inverse_dct(plane.blocks[b], level_shift);
  } else {
    for (std::ptrdiff_t b = 0; b < n; ++b) grid.blocks[b] = inverse_dct(plane.blocks[b], level_shift);
  }
  return grid;
}

const std::array<int, kBlockArea>& reference_luminance_table() {
  static constexpr std::array<int, kBlockArea> kTable = {
      16, 11, 10, 16, 24,  40,  51,  61,   //
      12, 12, 14, 19, 26,  58,  60,  55,   //
      14, 13, 16, 24, 40,  57,  69,  56,   //
      14, 17, 22, 29, 51,  87,  80,  62,   //
      18, 22, 37, 56, 68,  109, 103, 77,   //
      24, 35, 55, 64, 81,  104, 113, 92,   //
      49, 64, 78, 87, 103, 121, 120, 101,  //
      72, 92, 95, 98, 112, 100, 103, 99};
  return kTable;
}

QuantTable quality_to_table(int quality) {
  if (quality < 1 || quality > 100)
    throw std::invalid_argument("quality must be in 1..100, got " + std::to_string(quality));
  const int scale = quality < 50 ? 5000 / quality : 200 - 2 * quality;
  std::array<int, kBlockArea> steps{};
  const auto& base = reference_luminance_table();
  for (int k = 0; k < kBlockArea; ++k) steps[k] = std::clamp((base[k] * scale + 50) / 100, 1, 255);
  return QuantTable(steps);
}

QuantizedPlane quantize(const CoefficientPlane& plane, const QuantTable& table) {
  QuantizedPlane out{plane.blocks_x, plane.blocks_y, std::vector<LevelBlock>(plane.blocks.size())};
  for (std::size_t b = 0; b < plane.blocks.size(); ++b)
    for (int k = 0; k < kBlockArea; ++k)
      out.blocks[b][k] = static_cast<std::int32_t>(round_half_away(plane.blocks[b][k] / table[k]));
  return out;
}

CoefficientPlane dequantize(const QuantizedPlane& levels, const QuantTable& table) {
  CoefficientPlane out{levels.blocks_x, levels.blocks_y, std::vector<CoeffBlock>(levels.blocks.size())};
  for (std::size_t b = 0; b < levels.blocks.size(); ++b)
    for (int k = 0; k < kBlockArea; ++k)
      out.blocks[b][k] = static_cast<double>(table[k]) * levels.blocks[b][k];
  return out;
}

const std::array<Subband, kBlockArea>& zigzag_positions() {
  static const auto order = make_zigzag();
  return order;
}

GrayImage synthesize(const CoefficientPlane& plane, Exec exec) {
  return assemble_blocks(inverse_dct_plane(plane, true, exec));
}

JpegResult jpeg_pipeline(const GrayImage& img, int quality, Exec exec) {
  QuantTable table = quality_to_table(quality);
  const CoefficientPlane coeffs = forward_dct_plane(partition_blocks(img), true, exec);
  QuantizedPlane levels = quantize(coeffs, table);
  GrayImage decompressed = synthesize(dequantize(levels, table), exec);
  return {std::move(decompressed), std::move(levels), table};
}

double psnr(const GrayImage& a, const GrayImage& b) {
  if (a.width() != b.width() || a.height() != b.height())
    throw std::invalid_argument("psnr: image dimensions differ");
  double sse = 0.0;
  for (std::size_t k = 0; k < a.samples().size(); ++k) {
    const double d = static_cast<double>(a.samples()[k]) - b.samples()[k];
    sse += d * d;
  }
  if (sse == 0.0) return std::numeric_limits<double>::infinity();
  const double mse = sse / static_cast<double>(a.samples().size());
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

void write_levels_csv(const QuantizedPlane& levels, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "block_x,block_y,i,j,level\n";
  for (int by = 0; by < levels.blocks_y; ++by)
    for (int bx = 0; bx < levels.blocks_x; ++bx) {
      const auto& blk = levels.blocks[static_cast<std::size_t>(by) * levels.blocks_x + bx];
      for (int k = 0; k < kBlockArea; ++k)
        out << bx << ',' << by << ',' << k / kBlockSize << ',' << k % kBlockSize << ',' << blk[k] << '\n';
    }
  if (!out) throw IoError("write failed: " + path.string());
}

void write_coefficients_csv(const CoefficientPlane& plane, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "block_x,block_y,i,j,level\n";
  char buf[32];
  for (int by = 0; by < plane.blocks_y; ++by)
    for (int bx = 0; bx < plane.blocks_x; ++bx) {
      const auto& blk = plane.blocks[static_cast<std::size_t>(by) * plane.blocks_x + bx];
      for (int k = 0; k < kBlockArea; ++k) {
        std::snprintf(buf, sizeof buf, "%.17g", blk[k]);
        out << bx << ',' << by << ',' << k / kBlockSize << ',' << k % kBlockSize << ',' << buf << '\n';
      }
    }
  if (!out) throw IoError("write failed: " + path.string());
}

void write_levels_binary(const QuantizedPlane& levels, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& blk : levels.blocks)
    for (std::int32_t v : blk) put_le32(out, v);
  if (!out) throw IoError("write failed: " + path.string());
}

QuantizedPlane read_levels_binary(const std::filesystem::path& path, int blocks_x, int blocks_y) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  QuantizedPlane levels{blocks_x, blocks_y,
                        std::vector<LevelBlock>(static_cast<std::size_t>(blocks_x) * blocks_y)};
  for (auto& blk : levels.blocks)
    for (auto& v : blk) {
      unsigned char b[4];
      if (!in.read(reinterpret_cast<char*>(b), 4)) throw IoError(path.string() + ": truncated level dump");
      v = static_cast<std::int32_t>(std::uint32_t{b[0]} | std::uint32_t{b[1]} << 8 |
                                    std::uint32_t{b[2]} << 16 | std::uint32_t{b[3]} << 24);
    }
  return levels;
}

}  // namespace dctshield
