#include "dctshield/coeff_model.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <stdexcept>

namespace dctshield {

SubbandHistogram histogram_of(std::span<const double> values, Subband s) {
  SubbandHistogram hist{s, {}, 0};
  for (double v : values) ++hist.counts[static_cast<std::int64_t>(round_half_away(v))];
  hist.total = static_cast<std::int64_t>(values.size());
  return hist;
}

SubbandHistogram subband_histogram(const CoefficientPlane& plane, Subband s) {
  const auto values = plane.subband_values(s);
  return histogram_of(values, s);
}

SubbandHistogram subband_histogram(const QuantizedPlane& levels, Subband s) {
  SubbandHistogram hist{s, {}, 0};
  for (const auto& blk : levels.blocks) ++hist.counts[blk[s.index()]];
  hist.total = static_cast<std::int64_t>(levels.blocks.size());
  return hist;
}

std::filesystem::path write_histogram_csv(const SubbandHistogram& hist, const std::filesystem::path& dir) {
  const auto path = dir / ("hist_" + std::to_string(hist.subband.i) + "_" + std::to_string(hist.subband.j) + ".csv");
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "value,count\n";
  for (const auto& [value, count] : hist.counts) out << value << ',' << count << '\n';
  if (!out) throw IoError("write failed: " + path.string());
  return path;
}

std::string to_string(FitStatus status) {
  switch (status) {
    case FitStatus::ok: return "ok";
    case FitStatus::all_zero: return "all-zero subband";
    case FitStatus::negative_radicand: return "negative radicand";
    case FitStatus::gamma_out_of_range: return "gamma outside (0,1)";
    case FitStatus::model_mismatch: return "model-mismatch";
  }
  return "unknown";
}

LaplacianFit fit_laplacian_counts(std::int64_t n_zero, std::int64_t n_nonzero, double s_abs_sum, int step,
                                  Subband s) {
  if (step < 1) throw std::invalid_argument("fit_laplacian: step must be >= 1");
  if (n_zero < 0 || n_nonzero < 0 || n_zero + n_nonzero == 0)
    throw std::invalid_argument("fit_laplacian: no observations");

  LaplacianFit fit;
  fit.subband = s;
  fit.step = step;
  fit.n_zero = n_zero;
  fit.n_nonzero = n_nonzero;
  fit.n_total = n_zero + n_nonzero;
  fit.s_abs_sum = s_abs_sum;
  if (n_nonzero == 0) {
    fit.status = FitStatus::all_zero;
    return fit;
  }

  const long double q = step;
  const long double a = 2.0L * fit.n_total * q + 4.0L * s_abs_sum;
  const long double b = n_zero * q;
  const long double c = 4.0L * s_abs_sum - 2.0L * n_nonzero * q;
  const long double radicand = b * b + a * c;
  if (radicand < 0) {
    fit.status = FitStatus::negative_radicand;
    return fit;
  }
  // (-b + sqrt(b^2 + a c)) / a, rearranged to avoid cancellation when b dominates
  const long double root = std::sqrt(radicand);
  const long double gamma = b + root > 0 ? c / (b + root) : 0.0L;
  fit.gamma = static_cast<double>(gamma);
  if (!(gamma > 0 && gamma < 1)) {
    fit.status = FitStatus::gamma_out_of_range;
    return fit;
  }
  fit.lambda_ml = static_cast<double>(-2.0L / q * std::log(gamma));
  fit.status = FitStatus::ok;
  return fit;
}

LaplacianFit fit_laplacian(std::span<const double> dequantized, int step, Subband s) {
  if (dequantized.empty()) throw std::invalid_argument("fit_laplacian: empty input");
  std::int64_t n_zero = 0;
  double s_abs = 0.0;
  for (double y : dequantized) {
    if (y == 0.0) ++n_zero;
    s_abs += std::abs(y);
  }
  const auto n_nonzero = static_cast<std::int64_t>(dequantized.size()) - n_zero;
  return fit_laplacian_counts(n_zero, n_nonzero, s_abs, step, s);
}

std::array<LaplacianFit, kBlockArea> fit_subbands(const QuantizedPlane& levels, const QuantTable& table,
                                                  Exec exec) {
  std::array<LaplacianFit, kBlockArea> fits;
  auto fit_one = [&](int k) {
    const Subband s = Subband::from_index(k);
    std::int64_t n_zero = 0;
    std::int64_t abs_levels = 0;
    for (const auto& blk : levels.blocks) {
      if (blk[k] == 0) ++n_zero;
      abs_levels += std::abs(static_cast<std::int64_t>(blk[k]));
    }
    const auto n_nonzero = static_cast<std::int64_t>(levels.blocks.size()) - n_zero;
    LaplacianFit fit = fit_laplacian_counts(n_zero, n_nonzero, static_cast<double>(abs_levels) * table[k],
                                            table[k], s);
    if (s.is_dc() && fit.status == FitStatus::ok) fit.status = FitStatus::model_mismatch;
    fits[k] = fit;
  };
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
    for (int k = 0; k < kBlockArea; ++k) fit_one(k);
  } else {
    for (int k = 0; k < kBlockArea; ++k) fit_one(k);
  }
  return fits;
}

}  // namespace dctshield
