#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>

#include "dctshield/codec.hpp"

namespace dctshield {

/// Unit-width histogram of one subband. Real coefficients are rounded to the
/// nearest integer (half away from zero) before counting.
struct SubbandHistogram {
  Subband subband;
  std::map<std::int64_t, std::int64_t> counts;
  std::int64_t total = 0;
};

SubbandHistogram subband_histogram(const CoefficientPlane& plane, Subband s);
SubbandHistogram subband_histogram(const QuantizedPlane& levels, Subband s);
SubbandHistogram histogram_of(std::span<const double> values, Subband s = {});

/// Writes `value,count` rows to dir/hist_i_j.csv and returns the file path.
std::filesystem::path write_histogram_csv(const SubbandHistogram& hist, const std::filesystem::path& dir);

enum class FitStatus {
  ok,
  all_zero,            // N1 = 0: nothing to fit
  negative_radicand,   // the closed form has no real root
  gamma_out_of_range,  // root outside (0, 1), so lambda would be <= 0 or undefined
  model_mismatch,      // DC subband: fit is computed but the Laplacian model is not trusted
};

std::string to_string(FitStatus status);

/// Maximum-likelihood Laplacian rate estimated from dequantized values.
struct LaplacianFit {
  Subband subband;
  double lambda_ml = 0.0;
  std::int64_t n_total = 0;
  std::int64_t n_zero = 0;
  std::int64_t n_nonzero = 0;
  double s_abs_sum = 0.0;
  double gamma = 0.0;
  int step = 1;
  FitStatus status = FitStatus::all_zero;

  bool degenerate() const { return status != FitStatus::ok; }
};

/// Closed-form ML fit of a Laplacian to values on the lattice step * Z.
/// gamma = exp(-lambda Q / 2) is the positive root of
///   (2 N Q + 4 S) g^2 + 2 N0 Q g - (4 S - 2 N1 Q) = 0
/// and lambda = -(2 / Q) ln(gamma). Degenerate inputs are flagged in the
/// returned status; only an empty input or step < 1 throws.
LaplacianFit fit_laplacian(std::span<const double> dequantized, int step, Subband s = {});

/// Same fit from sufficient statistics.
LaplacianFit fit_laplacian_counts(std::int64_t n_zero, std::int64_t n_nonzero, double s_abs_sum, int step,
                                  Subband s = {});

/// Fits all 64 subbands of a quantized plane. The DC fit is marked
/// model_mismatch when it would otherwise be ok.
std::array<LaplacianFit, kBlockArea> fit_subbands(const QuantizedPlane& levels, const QuantTable& table,
                                                  Exec exec = Exec::parallel);

}  // namespace dctshield
