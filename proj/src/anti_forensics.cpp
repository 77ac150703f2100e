#include "dctshield/anti_forensics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "dctshield/rng.hpp"

namespace dctshield {

namespace {

void check_sampler_args(double lambda, int step) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("dither: lambda must be positive");
  if (step < 1) throw std::invalid_argument("dither: step must be >= 1");
}

double clamp_to_open_bin(double n, double half) {
  const double hi = std::nextafter(half, 0.0);
  return std::clamp(n, -hi, hi);
}

// Inverse CDF of the exponential with the given rate truncated to [0, width).
double truncated_exponential(double lambda, double width, double u) {
  return -std::log1p(u * std::expm1(-lambda * width)) / lambda;
}

}  // namespace

double sample_dither_zero(double lambda, int step, double u) {
  check_sampler_args(lambda, step);
  const double half = step / 2.0;
  // v in (-1, 1) picks the sign; |v| is the CDF level of the magnitude
  const double v = 2.0 * u - 1.0;
  const double magnitude = truncated_exponential(lambda, half, std::abs(v));
  return clamp_to_open_bin(std::copysign(magnitude, v), half);
}

double sample_dither_nonzero(double lambda, int step, int sign, double u) {
  check_sampler_args(lambda, step);
  if (sign != 1 && sign != -1) throw std::invalid_argument("dither: sign must be +1 or -1");
  const double half = step / 2.0;
  // t = n + Q/2 for positive coefficients, Q/2 - n for negative ones
  const double t = truncated_exponential(lambda, static_cast<double>(step), u);
  return clamp_to_open_bin(sign > 0 ? t - half : half - t, half);
}

double sample_dither_uniform(int step, double u) {
  if (step < 1) throw std::invalid_argument("dither: step must be >= 1");
  const double half = step / 2.0;
  return clamp_to_open_bin((u - 0.5) * step, half);
}

CoefficientPlane apply_dither(const QuantizedPlane& levels, const QuantTable& table,
                              const std::array<LaplacianFit, kBlockArea>& fits, const DitherConfig& cfg,
                              Exec exec) {
  enum class Mode : std::uint8_t { laplacian, uniform, none };
  std::array<Mode, kBlockArea> mode{};
  std::vector<CounterStream> streams;
  streams.reserve(kBlockArea);
  for (int k = 0; k < kBlockArea; ++k) {
    const Subband s = Subband::from_index(k);
    if (fits[k].subband != s || fits[k].step != table[k])
      throw std::invalid_argument("apply_dither: missing or mismatched fit for subband (" + std::to_string(s.i) +
                                  "," + std::to_string(s.j) + ")");
    if (s.is_dc())
      mode[k] = cfg.dc_fallback == DcFallback::uniform ? Mode::uniform : Mode::none;
    else if (fits[k].degenerate())
      mode[k] = cfg.degenerate_fallback == DegenerateFallback::uniform ? Mode::uniform : Mode::none;
    else
      mode[k] = Mode::laplacian;
    streams.emplace_back(cfg.seed, kDitherTagBase + static_cast<std::uint64_t>(k));
  }

  CoefficientPlane out{levels.blocks_x, levels.blocks_y, std::vector<CoeffBlock>(levels.blocks.size())};
  auto dither_block = [&](std::size_t b) {
    const LevelBlock& x = levels.blocks[b];
    CoeffBlock& z = out.blocks[b];
    for (int k = 0; k < kBlockArea; ++k) {
      const int q = table[k];
      const double y = static_cast<double>(q) * x[k];
      double n = 0.0;
      if (mode[k] != Mode::none) {
        const double u = streams[k].uniform_open(b);
        if (mode[k] == Mode::uniform)
          n = sample_dither_uniform(q, u);
        else if (x[k] == 0)
          n = sample_dither_zero(fits[k].lambda_ml, q, u);
        else
          n = sample_dither_nonzero(fits[k].lambda_ml, q, x[k] > 0 ? 1 : -1, u);
      }
      double zk = y + n;
      // Y + N can round onto a bin edge for large |Y|; pull it back inside
      while (round_half_away(zk / q) != x[k]) zk = std::nextafter(zk, y);
      z[k] = zk;
    }
  };

  const auto n_blocks = static_cast<std::ptrdiff_t>(levels.blocks.size());
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t b = 0; b < n_blocks; ++b) dither_block(static_cast<std::size_t>(b));
  } else {
    for (std::ptrdiff_t b = 0; b < n_blocks; ++b) dither_block(static_cast<std::size_t>(b));
  }
  return out;
}

GrayImage deblock(const GrayImage& img, int window, std::uint64_t seed, Exec exec) {
  if (window < 1 || window % 2 == 0) throw std::invalid_argument("deblock: window must be a positive odd size");
  if (window == 1) return img;

  const int w = img.width();
  const int h = img.height();
  const int r = window / 2;
  const CounterStream noise(seed, kDeblockTag);
  GrayImage out(w, h, std::uint8_t{0});

  auto filter_row = [&](int y) {
    std::vector<std::uint8_t> win(static_cast<std::size_t>(window) * window);
    for (int x = 0; x < w; ++x) {
      std::size_t k = 0;
      for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx)
          win[k++] = img.at(std::clamp(x + dx, 0, w - 1), std::clamp(y + dy, 0, h - 1));
      auto mid = win.begin() + static_cast<std::ptrdiff_t>(win.size() / 2);
      std::nth_element(win.begin(), mid, win.end());
      const auto pos = static_cast<std::uint64_t>(y) * static_cast<std::uint64_t>(w) + static_cast<std::uint64_t>(x);
      const double perturbed = *mid + (2.0 * noise.uniform_open(pos) - 1.0);
      out.at(x, y) = static_cast<std::uint8_t>(std::clamp(round_half_away(perturbed), 0.0, 255.0));
    }
  };

  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) filter_row(y);
  } else {
    for (int y = 0; y < h; ++y) filter_row(y);
  }
  return out;
}

AntiForensicResult antiforensic_pipeline_detailed(const GrayImage& img, int quality, const DitherConfig& cfg,
                                                  Exec exec) {
  JpegResult jpeg = jpeg_pipeline(img, quality, exec);
  const auto fits = fit_subbands(jpeg.levels, jpeg.table, exec);
  CoefficientPlane dithered = apply_dither(jpeg.levels, jpeg.table, fits, cfg, exec);
  GrayImage out = synthesize(dithered, exec);
  if (cfg.deblock) out = deblock(out, cfg.deblock_window, cfg.seed, exec);
  return {std::move(out), std::move(jpeg.decompressed), jpeg.table, std::move(jpeg.levels), fits,
          std::move(dithered)};
}

GrayImage antiforensic_pipeline(const GrayImage& img, int quality, const DitherConfig& cfg, Exec exec) {
  return antiforensic_pipeline_detailed(img, quality, cfg, exec).image;
}

}  // namespace dctshield
