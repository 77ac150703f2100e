#pragma once

#include <array>
#include <cstdint>
#include <random>

#include "dctshield/codec.hpp"
#include "dctshield/coeff_model.hpp"

namespace dctshield {

/// What the DC subband receives. The Laplacian model does not describe DC.
enum class DcFallback { uniform, none };
/// What an AC subband whose fit is degenerate (typically all-zero) receives.
enum class DegenerateFallback { none, uniform };

struct DitherConfig {
  std::uint64_t seed = 0;
  bool deblock = true;
  int deblock_window = 3;
  DcFallback dc_fallback = DcFallback::uniform;
  DegenerateFallback degenerate_fallback = DegenerateFallback::none;
};

/// Dither for a coefficient quantized to zero: density proportional to
/// exp(-lambda |n|) on the bin (-Q/2, Q/2), drawn by inverting the CDF at u.
/// u must lie in (0, 1).
double sample_dither_zero(double lambda, int step, double u);

/// Dither for a nonzero coefficient with the given sign: density
/// proportional to exp(-sign * lambda * (n + Q/2)) on (-Q/2, Q/2), i.e. the
/// mass leans toward zero magnitude.
double sample_dither_nonzero(double lambda, int step, int sign, double u);

/// Uniform dither over the bin, used for DC and degenerate fallbacks.
double sample_dither_uniform(int step, double u);

template <class Urbg>
double open_uniform(Urbg& gen) {
  // generate_canonical can return 0; reject it to keep the support open
  for (;;) {
    const double u = std::generate_canonical<double, 53>(gen);
    if (u > 0.0 && u < 1.0) return u;
  }
}

template <class Urbg>
double sample_dither_zero(double lambda, int step, Urbg& gen) {
  return sample_dither_zero(lambda, step, open_uniform(gen));
}

template <class Urbg>
double sample_dither_nonzero(double lambda, int step, int sign, Urbg& gen) {
  return sample_dither_nonzero(lambda, step, sign, open_uniform(gen));
}

/// Z = Y + N for every coefficient. Subband k draws from its own counter
/// stream keyed by (seed, k) at position = block index, so the output is
/// independent of thread count. Every Z re-quantizes to its original level.
CoefficientPlane apply_dither(const QuantizedPlane& levels, const QuantTable& table,
                              const std::array<LaplacianFit, kBlockArea>& fits, const DitherConfig& cfg,
                              Exec exec = Exec::parallel);

/// Median filter with an odd square window (edge samples replicated), then
/// zero-mean uniform noise of amplitude 1 drawn per pixel, rounded and
/// clipped. A 1x1 window returns the input unchanged.
GrayImage deblock(const GrayImage& img, int window, std::uint64_t seed, Exec exec = Exec::parallel);

struct AntiForensicResult {
  GrayImage image;
  GrayImage jpeg;
  QuantTable table;
  QuantizedPlane levels;
  std::array<LaplacianFit, kBlockArea> fits;
  CoefficientPlane dithered;
};

/// JPEG pipeline, per-subband Laplacian fits, dither, synthesis and the
/// optional deblocking pass.
AntiForensicResult antiforensic_pipeline_detailed(const GrayImage& img, int quality, const DitherConfig& cfg,
                                                  Exec exec = Exec::parallel);

GrayImage antiforensic_pipeline(const GrayImage& img, int quality, const DitherConfig& cfg,
                                Exec exec = Exec::parallel);

}  // namespace dctshield
