#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "dctshield/codec.hpp"
#include "dctshield/coeff_model.hpp"

namespace dctshield {

/// Tuning of the histogram power-spectrum step estimator.
struct StepEstimatorConfig {
  // |coefficient| quantile that bounds the histogram range
  double range_quantile = 0.999;
  // DFT length is the next power of two >= max(min_length, oversample * span)
  std::size_t min_length = 1024;
  std::size_t oversample = 8;
  // centered moving average applied to the second difference
  int smoothing = 5;
  // a minimum counts only if it is at least this fraction as deep as the
  // second-difference dip at zero frequency
  double depth_fraction = 0.2;
  // allowed offset of a counted minimum from the comb position j*L/q:
  // max(min_tolerance, period_tolerance * L/q) bins
  double min_tolerance = 2.0;
  double period_tolerance = 0.05;
};

struct StepEstimate {
  Subband subband;
  int estimated_step = 1;
  int num_minima = 0;
  // |DFT|^2 of the histogram over the full circle, index = frequency bin
  std::vector<double> spectrum;
  std::string note;
};

/// Quantization step of one subband from its histogram: power spectrum of
/// the histogram, second difference, moving-average smoothing, count of
/// strict local minima consistent with a comb, step = count + 1.
StepEstimate estimate_quant_step(const SubbandHistogram& hist, const StepEstimatorConfig& cfg = {});

struct TableEstimate {
  QuantTable table = QuantTable::uniform(1);
  std::array<StepEstimate, kBlockArea> steps;
  std::vector<std::string> notes;
};

/// Runs estimate_quant_step on the rounded coefficients of all 64 subbands.
TableEstimate estimate_quant_table(const CoefficientPlane& plane, const StepEstimatorConfig& cfg = {},
                                   Exec exec = Exec::parallel);

/// B = sum_k |D(k) - Q(k) round(D(k) / Q(k))| over the 64 coefficients of one
/// block, taken in zigzag order with matching steps.
double block_artifact(std::span<const double, kBlockArea> coeffs_zigzag, std::span<const int, kBlockArea> steps_zigzag);

enum class Verdict { consistent_with_uncompressed, jpeg_compressed };
std::string to_string(Verdict v);

inline constexpr double kDefaultBamThreshold = 1.0;

struct ForensicReport {
  QuantTable estimated_table = QuantTable::uniform(1);
  int blocks_x = 0;
  int blocks_y = 0;
  std::vector<double> per_block_b;
  double bam = 0.0;
  std::size_t n_blocks = 0;
  Verdict verdict = Verdict::consistent_with_uncompressed;
  double threshold_used = kDefaultBamThreshold;
  std::vector<std::string> notes;
};

/// Block DCT (level-shifted) of the image, coefficients rounded to integers,
/// table estimate, per-block B and their mean. Verdict is jpeg_compressed
/// iff BAM > threshold.
ForensicReport compute_bam(const GrayImage& img, double threshold = kDefaultBamThreshold,
                           const StepEstimatorConfig& cfg = {}, Exec exec = Exec::parallel);

/// Same measure on an already extracted coefficient plane.
ForensicReport compute_bam(const CoefficientPlane& plane, double threshold = kDefaultBamThreshold,
                           const StepEstimatorConfig& cfg = {}, Exec exec = Exec::parallel);

nlohmann::json report_to_json(const ForensicReport& report);

struct ForgeryMapConfig {
  // a block is an outlier when B > median + iqr_factor * max(IQR, min_iqr)
  double iqr_factor = 5.0;
  double min_iqr = 1.0;
  // flagged when the largest 4-connected outlier cluster has this many blocks
  int min_cluster = 16;
  // blocks holding a 0 or 255 sample carry clipping residue unrelated to
  // their compression history; keep them out of the statistics
  bool skip_saturated = true;
};

struct ForgeryMap {
  int blocks_x = 0;
  int blocks_y = 0;
  std::vector<double> b;          // blocks_y x blocks_x, row-major
  std::vector<bool> outlier;
  std::vector<bool> saturated;    // excluded from median, IQR, percentiles and outliers
  double median = 0.0;
  double iqr = 0.0;
  double outlier_threshold = 0.0;
  // (p90 + 1) / (p10 + 1); 1 for a uniform map
  double inconsistency = 1.0;
  int outlier_count = 0;
  int saturated_count = 0;
  int largest_cluster = 0;
  bool flagged = false;
};

ForgeryMap forgery_map(const GrayImage& img, const ForgeryMapConfig& map_cfg = {},
                       const StepEstimatorConfig& cfg = {}, Exec exec = Exec::parallel);
/// `saturated` marks blocks to leave out (see saturated_blocks); empty means none.
ForgeryMap forgery_map_from(const ForensicReport& report, const ForgeryMapConfig& map_cfg = {},
                            const std::vector<bool>& saturated = {});

/// Per block (row-major, image cropped to whole blocks): does it contain a 0 or 255 sample?
std::vector<bool> saturated_blocks(const GrayImage& img);

void write_forgery_csv(const ForgeryMap& map, const std::filesystem::path& path);
/// B normalized to 0..255 (max B maps to 255), each block painted as an 8x8 tile.
GrayImage forgery_heatmap(const ForgeryMap& map);

/// Linear-interpolated percentile (p in [0, 100]) of unsorted values.
double percentile(std::vector<double> values, double p);

}  // namespace dctshield
