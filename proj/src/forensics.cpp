#include "dctshield/forensics.hpp"

#include <fftw3.h>

#include <algorithm>
#include <bit>
#include <map>
#include <cmath>
#include <fstream>
#include <mutex>
#include <numeric>
#include <stdexcept>

namespace dctshield {

namespace {

// FFTW planning is not thread-safe; execution on distinct plans is.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwBuffers {
  double* in = nullptr;
  fftw_complex* out = nullptr;
  fftw_plan plan = nullptr;

  explicit FftwBuffers(std::size_t n) {
    std::lock_guard lock(fftw_planner_mutex());
    in = fftw_alloc_real(n);
    out = fftw_alloc_complex(n / 2 + 1);
    plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in, out, FFTW_ESTIMATE);
  }
  ~FftwBuffers() {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(plan);
    fftw_free(out);
    fftw_free(in);
  }
  FftwBuffers(const FftwBuffers&) = delete;
  FftwBuffers& operator=(const FftwBuffers&) = delete;
};

std::size_t next_pow2(std::size_t n) { return std::bit_ceil(std::max<std::size_t>(n, 1)); }

// Smallest |v| such that at least `quantile` of the mass lies at or below it.
std::int64_t abs_quantile(const SubbandHistogram& hist, double quantile) {
  std::map<std::int64_t, std::int64_t> by_abs;
  for (const auto& [v, c] : hist.counts) by_abs[v < 0 ? -v : v] += c;
  const double target = quantile * static_cast<double>(hist.total);
  std::int64_t cumulative = 0;
  for (const auto& [a, c] : by_abs) {
    cumulative += c;
    if (static_cast<double>(cumulative) >= target) return a;
  }
  return by_abs.empty() ? 0 : by_abs.rbegin()->first;
}

std::vector<double> circular_moving_average(const std::vector<double>& x, int length) {
  const auto n = static_cast<std::ptrdiff_t>(x.size());
  const std::ptrdiff_t half = length / 2;
  std::vector<double> out(x.size());
  for (std::ptrdiff_t f = 0; f < n; ++f) {
    double acc = 0.0;
    for (std::ptrdiff_t o = -half; o <= half; ++o) acc += x[static_cast<std::size_t>(((f + o) % n + n) % n)];
    out[static_cast<std::size_t>(f)] = acc / static_cast<double>(2 * half + 1);
  }
  return out;
}

// Largest q whose comb positions j*L/q (j = 1..q-1) each have a candidate
// minimum nearby. Returns 1 when no q >= 2 fits.
int largest_consistent_comb(const std::vector<std::size_t>& candidates, std::size_t length,
                            const StepEstimatorConfig& cfg) {
  const auto len = static_cast<double>(length);
  for (int q = static_cast<int>(candidates.size()) + 1; q >= 2; --q) {
    const double period = len / q;
    const double tol = std::max(cfg.min_tolerance, cfg.period_tolerance * period);
    bool all_present = true;
    for (int j = 1; j < q && all_present; ++j) {
      const double target = j * period;
      auto it = std::lower_bound(candidates.begin(), candidates.end(), static_cast<std::size_t>(std::max(0.0, target - tol)));
      all_present = it != candidates.end() && std::abs(static_cast<double>(*it) - target) <= tol;
    }
    if (all_present) return q;
  }
  return 1;
}

std::array<int, kBlockArea> steps_in_zigzag(const QuantTable& table) {
  std::array<int, kBlockArea> z{};
  const auto& order = zigzag_positions();
  for (int k = 0; k < kBlockArea; ++k) z[k] = table.step(order[k]);
  return z;
}

}  // namespace

StepEstimate estimate_quant_step(const SubbandHistogram& hist, const StepEstimatorConfig& cfg) {
  StepEstimate est;
  est.subband = hist.subband;
  if (hist.total <= 0) throw std::invalid_argument("estimate_quant_step: empty histogram");
  if (hist.counts.size() <= 1) {
    est.note = "insufficient-support";
    return est;
  }

  const std::int64_t range = std::max<std::int64_t>(abs_quantile(hist, cfg.range_quantile), 1);
  const auto span = static_cast<std::size_t>(2 * range + 1);
  const std::size_t length = next_pow2(std::max(cfg.min_length, cfg.oversample * span));

  FftwBuffers fft(length);
  std::fill(fft.in, fft.in + length, 0.0);
  const auto len = static_cast<std::int64_t>(length);
  for (const auto& [v, c] : hist.counts)
    if (v >= -range && v <= range) fft.in[((v % len) + len) % len] += static_cast<double>(c);
  fftw_execute(fft.plan);

  est.spectrum.assign(length, 0.0);
  for (std::size_t f = 0; f <= length / 2; ++f) {
    const double p = fft.out[f][0] * fft.out[f][0] + fft.out[f][1] * fft.out[f][1];
    est.spectrum[f] = p;
    est.spectrum[(length - f) % length] = p;
  }

  std::vector<double> second(length);
  for (std::size_t f = 0; f < length; ++f)
    second[f] = est.spectrum[(f + 1) % length] - 2.0 * est.spectrum[f] + est.spectrum[(f + length - 1) % length];
  const std::vector<double> smooth = circular_moving_average(second, cfg.smoothing);

  const double reference = smooth[0];
  if (!(reference < 0.0)) {
    est.note = "flat-spectrum";
    return est;
  }
  std::vector<std::size_t> candidates;
  for (std::size_t f = 1; f < length; ++f) {
    const double s = smooth[f];
    if (s < smooth[f - 1] && s < smooth[(f + 1) % length] && s <= cfg.depth_fraction * reference)
      candidates.push_back(f);
  }
  const int q = largest_consistent_comb(candidates, length, cfg);
  est.num_minima = q - 1;
  est.estimated_step = q;
  if (q == 1 && !candidates.empty()) est.note = "minima-not-periodic";
  return est;
}

TableEstimate estimate_quant_table(const CoefficientPlane& plane, const StepEstimatorConfig& cfg, Exec exec) {
  TableEstimate result;
  if (plane.blocks.empty()) throw std::invalid_argument("estimate_quant_table: empty plane");
  auto one = [&](int k) {
    const Subband s = Subband::from_index(k);
    result.steps[k] = estimate_quant_step(subband_histogram(plane, s), cfg);
  };
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic)
    for (int k = 0; k < kBlockArea; ++k) one(k);
  } else {
    for (int k = 0; k < kBlockArea; ++k) one(k);
  }

  std::array<int, kBlockArea> steps{};
  for (int k = 0; k < kBlockArea; ++k) {
    steps[k] = result.steps[k].estimated_step;
    if (!result.steps[k].note.empty())
      result.notes.push_back("subband (" + std::to_string(k / kBlockSize) + "," + std::to_string(k % kBlockSize) +
                             "): " + result.steps[k].note);
  }
  if (plane.blocks.size() < 64) result.notes.insert(result.notes.begin(), "low-confidence: fewer than 64 blocks");
  result.table = QuantTable(steps);
  return result;
}

double block_artifact(std::span<const double, kBlockArea> coeffs_zigzag, std::span<const int, kBlockArea> steps_zigzag) {
  double b = 0.0;
  for (int k = 0; k < kBlockArea; ++k) {
    const int q = steps_zigzag[k];
    if (q < 1) throw std::invalid_argument("block_artifact: step must be >= 1");
    b += std::abs(coeffs_zigzag[k] - q * round_half_away(coeffs_zigzag[k] / q));
  }
  return b;
}

std::string to_string(Verdict v) {
  return v == Verdict::jpeg_compressed ? "jpeg-compressed" : "consistent-with-uncompressed";
}

ForensicReport compute_bam(const CoefficientPlane& plane, double threshold, const StepEstimatorConfig& cfg,
                           Exec exec) {
  CoefficientPlane rounded = plane;
  for (auto& blk : rounded.blocks)
    for (auto& v : blk) v = round_half_away(v);

  TableEstimate estimate = estimate_quant_table(rounded, cfg, exec);
  const auto steps = steps_in_zigzag(estimate.table);
  const auto& order = zigzag_positions();

  ForensicReport report;
  report.estimated_table = estimate.table;
  report.blocks_x = plane.blocks_x;
  report.blocks_y = plane.blocks_y;
  report.n_blocks = plane.blocks.size();
  report.per_block_b.resize(plane.blocks.size());
  report.threshold_used = threshold;
  report.notes = std::move(estimate.notes);

  auto one = [&](std::size_t b) {
    std::array<double, kBlockArea> zz{};
    for (int k = 0; k < kBlockArea; ++k) zz[k] = rounded.blocks[b][order[k].index()];
    report.per_block_b[b] = block_artifact(zz, steps);
  };
  const auto n = static_cast<std::ptrdiff_t>(plane.blocks.size());
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t b = 0; b < n; ++b) one(static_cast<std::size_t>(b));
  } else {
    for (std::ptrdiff_t b = 0; b < n; ++b) one(static_cast<std::size_t>(b));
  }

  // sequential sum so the mean does not depend on the thread split
  const double total = std::accumulate(report.per_block_b.begin(), report.per_block_b.end(), 0.0);
  report.bam = report.n_blocks == 0 ? 0.0 : total / static_cast<double>(report.n_blocks);
  report.verdict = report.bam > threshold ? Verdict::jpeg_compressed : Verdict::consistent_with_uncompressed;
  return report;
}

ForensicReport compute_bam(const GrayImage& img, double threshold, const StepEstimatorConfig& cfg, Exec exec) {
  return compute_bam(forward_dct_plane(partition_blocks(img), true, exec), threshold, cfg, exec);
}

nlohmann::json report_to_json(const ForensicReport& report) {
  nlohmann::json table = nlohmann::json::array();
  for (int i = 0; i < kBlockSize; ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int j = 0; j < kBlockSize; ++j) row.push_back(report.estimated_table.step({i, j}));
    table.push_back(row);
  }
  return {
      {"bam", report.bam},
      {"verdict", to_string(report.verdict)},
      {"threshold", report.threshold_used},
      {"table", table},
      {"blocks_x", report.blocks_x},
      {"blocks_y", report.blocks_y},
      {"per_block_b", report.per_block_b},
      {"notes", report.notes},
  };
}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) throw std::invalid_argument("percentile of empty set");
  std::sort(values.begin(), values.end());
  const double pos = std::clamp(p, 0.0, 100.0) / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::vector<bool> saturated_blocks(const GrayImage& img) {
  const int bx = img.width() / kBlockSize;
  const int by = img.height() / kBlockSize;
  std::vector<bool> out(static_cast<std::size_t>(bx) * by, false);
  for (int y = 0; y < by * kBlockSize; ++y)
    for (int x = 0; x < bx * kBlockSize; ++x) {
      const auto v = img.at(x, y);
      if (v == 0 || v == 255) out[static_cast<std::size_t>(y / kBlockSize) * bx + x / kBlockSize] = true;
    }
  return out;
}

ForgeryMap forgery_map_from(const ForensicReport& report, const ForgeryMapConfig& map_cfg,
                            const std::vector<bool>& saturated) {
  ForgeryMap map;
  map.blocks_x = report.blocks_x;
  map.blocks_y = report.blocks_y;
  map.b = report.per_block_b;
  map.outlier.assign(map.b.size(), false);
  if (!saturated.empty() && saturated.size() != map.b.size())
    throw std::invalid_argument("forgery_map: saturation mask does not match the block grid");
  map.saturated = map_cfg.skip_saturated && !saturated.empty() ? saturated : std::vector<bool>(map.b.size(), false);
  map.saturated_count = static_cast<int>(std::count(map.saturated.begin(), map.saturated.end(), true));

  std::vector<double> usable;
  for (std::size_t k = 0; k < map.b.size(); ++k)
    if (!map.saturated[k]) usable.push_back(map.b[k]);
  if (usable.empty()) return map;

  map.median = percentile(usable, 50.0);
  map.iqr = percentile(usable, 75.0) - percentile(usable, 25.0);
  map.outlier_threshold = map.median + map_cfg.iqr_factor * std::max(map.iqr, map_cfg.min_iqr);
  map.inconsistency = (percentile(usable, 90.0) + 1.0) / (percentile(usable, 10.0) + 1.0);
  for (std::size_t k = 0; k < map.b.size(); ++k) {
    map.outlier[k] = !map.saturated[k] && map.b[k] > map.outlier_threshold;
    map.outlier_count += map.outlier[k] ? 1 : 0;
  }

  // 4-connected components over the outlier mask
  std::vector<bool> seen(map.b.size(), false);
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < map.b.size(); ++start) {
    if (!map.outlier[start] || seen[start]) continue;
    int size = 0;
    stack.push_back(start);
    seen[start] = true;
    while (!stack.empty()) {
      const std::size_t k = stack.back();
      stack.pop_back();
      ++size;
      const int x = static_cast<int>(k % map.blocks_x);
      const int y = static_cast<int>(k / map.blocks_x);
      const int nx[4] = {x - 1, x + 1, x, x};
      const int ny[4] = {y, y, y - 1, y + 1};
      for (int d = 0; d < 4; ++d) {
        if (nx[d] < 0 || ny[d] < 0 || nx[d] >= map.blocks_x || ny[d] >= map.blocks_y) continue;
        const auto nk = static_cast<std::size_t>(ny[d]) * map.blocks_x + nx[d];
        if (map.outlier[nk] && !seen[nk]) {
          seen[nk] = true;
          stack.push_back(nk);
        }
      }
    }
    map.largest_cluster = std::max(map.largest_cluster, size);
  }
  map.flagged = map.largest_cluster >= map_cfg.min_cluster;
  return map;
}

ForgeryMap forgery_map(const GrayImage& img, const ForgeryMapConfig& map_cfg, const StepEstimatorConfig& cfg,
                       Exec exec) {
  return forgery_map_from(compute_bam(img, kDefaultBamThreshold, cfg, exec), map_cfg, saturated_blocks(img));
}

void write_forgery_csv(const ForgeryMap& map, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out.precision(10);
  for (int y = 0; y < map.blocks_y; ++y) {
    for (int x = 0; x < map.blocks_x; ++x) {
      if (x) out << ',';
      out << map.b[static_cast<std::size_t>(y) * map.blocks_x + x];
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

GrayImage forgery_heatmap(const ForgeryMap& map) {
  const double peak = map.b.empty() ? 0.0 : *std::max_element(map.b.begin(), map.b.end());
  GrayImage img(map.blocks_x * kBlockSize, map.blocks_y * kBlockSize, std::uint8_t{0});
  for (int by = 0; by < map.blocks_y; ++by)
    for (int bx = 0; bx < map.blocks_x; ++bx) {
      const double v = map.b[static_cast<std::size_t>(by) * map.blocks_x + bx];
      const auto level = static_cast<std::uint8_t>(peak > 0 ? std::lround(255.0 * v / peak) : 0);
      for (int r = 0; r < kBlockSize; ++r)
        for (int c = 0; c < kBlockSize; ++c) img.at(bx * kBlockSize + c, by * kBlockSize + r) = level;
    }
  return img;
}

}  // namespace dctshield
