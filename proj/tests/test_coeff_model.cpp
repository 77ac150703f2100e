#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "dctshield/coeff_model.hpp"
#include "oracles.hpp"
#include "test_data.hpp"

using namespace dctshield;

namespace {

std::vector<double> quantized_laplacian(double lambda, int q, int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<double> v(static_cast<std::size_t>(n));
  for (auto& x : v) x = q * std::round(oracle::laplacian(lambda, rng) / q);
  return v;
}

// The likelihood oracle evaluated on grouped values; same result as the
// per-sample sum, far fewer logs.
double grouped_mle(const std::vector<double>& v, int q) {
  std::map<double, double> counts;
  for (double x : v) counts[x] += 1.0;
  return oracle::golden_max(
      [&](double lam) {
        double ll = 0.0;
        for (auto [x, c] : counts)
          ll += c * std::log(oracle::laplacian_cdf(lam, x + q / 2.0) - oracle::laplacian_cdf(lam, x - q / 2.0));
        return ll;
      },
      1e-5, 50.0);
}

}  // namespace

TEST(SubbandHistogram, AllZeroPlane) {
  const CoefficientPlane p{4, 3, std::vector<CoeffBlock>(12)};
  const SubbandHistogram h = subband_histogram(p, {2, 5});
  EXPECT_EQ(h.total, 12);
  ASSERT_EQ(h.counts.size(), 1u);
  EXPECT_EQ(h.counts.at(0), 12);
}

TEST(SubbandHistogram, DequantizedLatticeAndConservation) {
  const JpegResult r = jpeg_pipeline(testdata::load("camera"), 50);
  const CoefficientPlane y = dequantize(r.levels, QuantTable::uniform(10));
  for (int k = 0; k < 64; ++k) {
    const SubbandHistogram h = subband_histogram(y, Subband::from_index(k));
    EXPECT_EQ(h.total, static_cast<std::int64_t>(y.size()));
    std::int64_t sum = 0;
    for (auto [v, c] : h.counts) {
      EXPECT_EQ(v % 10, 0);
      sum += c;
    }
    EXPECT_EQ(sum, h.total);
  }
}

TEST(SubbandHistogram, RoundsRealValues) {
  const std::vector<double> v = {0.4, 0.5, -0.5, -1.49, 2.51};
  const SubbandHistogram h = histogram_of(v);
  EXPECT_EQ(h.counts.at(0), 1);
  EXPECT_EQ(h.counts.at(1), 1);
  EXPECT_EQ(h.counts.at(-1), 2);
  EXPECT_EQ(h.counts.at(3), 1);
}

TEST(FitLaplacian, AllZeroIsDegenerate) {
  const std::vector<double> v(100, 0.0);
  const LaplacianFit f = fit_laplacian(v, 8);
  EXPECT_EQ(f.status, FitStatus::all_zero);
  EXPECT_TRUE(f.degenerate());
  EXPECT_EQ(f.n_zero, 100);
}

TEST(FitLaplacian, RejectsBadInput) {
  EXPECT_THROW(fit_laplacian(std::vector<double>{}, 8), std::invalid_argument);
  EXPECT_THROW(fit_laplacian(std::vector<double>{1.0}, 0), std::invalid_argument);
}

TEST(FitLaplacian, MatchesLikelihoodOracle) {
  const auto v = quantized_laplacian(0.1, 10, 100000, 17);
  const LaplacianFit f = fit_laplacian(v, 10);
  ASSERT_EQ(f.status, FitStatus::ok);
  const double ref = grouped_mle(v, 10);
  EXPECT_NEAR(f.lambda_ml / ref, 1.0, 0.02);
  // both are the exact maximizer, so they agree far more tightly than 2%
  EXPECT_NEAR(f.lambda_ml / ref, 1.0, 1e-6);
  EXPECT_NEAR(f.lambda_ml, 0.1, 0.005);
}

TEST(FitLaplacian, NoZerosSpecialCase) {
  // every observation at +-Q: closed form reduces to
  // gamma^2 = (4S - 2 N1 Q) / (4S + 2 N1 Q)
  std::vector<double> v;
  for (int k = 0; k < 300; ++k) v.push_back(k % 3 ? 20.0 : -40.0);
  const LaplacianFit f = fit_laplacian(v, 20);
  ASSERT_EQ(f.status, FitStatus::ok);
  const double s = f.s_abs_sum, n1 = 300, q = 20;
  EXPECT_NEAR(f.gamma, std::sqrt((4 * s - 2 * n1 * q) / (4 * s + 2 * n1 * q)), 1e-12);
  EXPECT_NEAR(f.lambda_ml / grouped_mle(v, 20), 1.0, 1e-6);
}

TEST(FitLaplacian, NoZerosAtHalfStepBoundIsDegenerate) {
  // S = N1 Q / 2 is impossible for nonzero lattice values, but the counts
  // form accepts it and must refuse to produce a rate
  const LaplacianFit f = fit_laplacian_counts(0, 10, 50.0, 10);
  EXPECT_TRUE(f.degenerate());
}

TEST(FitLaplacian, ScaleConsistency) {
  const auto v = quantized_laplacian(0.2, 4, 20000, 3);
  const LaplacianFit a = fit_laplacian(v, 4);
  std::vector<double> w = v;
  for (auto& x : w) x *= 3.0;
  const LaplacianFit b = fit_laplacian(w, 12);
  EXPECT_NEAR(b.lambda_ml * 3.0, a.lambda_ml, 1e-9 * a.lambda_ml);
}

TEST(FitLaplacian, DecreasesWithSpread) {
  double prev = std::numeric_limits<double>::infinity();
  for (double s = 1600.0; s < 40000.0; s *= 1.5) {
    const LaplacianFit f = fit_laplacian_counts(700, 300, s, 5);
    ASSERT_EQ(f.status, FitStatus::ok);
    EXPECT_LT(f.lambda_ml, prev);
    prev = f.lambda_ml;
  }
}

TEST(FitLaplacian, PermutationInvariant) {
  auto v = quantized_laplacian(0.05, 16, 5000, 8);
  const double a = fit_laplacian(v, 16).lambda_ml;
  std::shuffle(v.begin(), v.end(), std::mt19937(1));
  EXPECT_EQ(fit_laplacian(v, 16).lambda_ml, a);
}

TEST(FitLaplacian, TwentyConfigurations) {
  int k = 0;
  for (double lambda : {0.02, 0.05, 0.1, 0.3, 0.8})
    for (int q : {2, 5, 10, 24}) {
      const auto v = quantized_laplacian(lambda, q, 20000, 100 + k++);
      const LaplacianFit f = fit_laplacian(v, q);
      if (f.degenerate()) continue;
      EXPECT_NEAR(f.lambda_ml / grouped_mle(v, q), 1.0, 0.02) << lambda << " " << q;
    }
}

TEST(FitSubbands, DcMarkedAndAllZeroDetected) {
  const JpegResult r = jpeg_pipeline(testdata::load("camera"), 75);
  const auto fits = fit_subbands(r.levels, r.table);
  EXPECT_EQ(fits[0].status, FitStatus::model_mismatch);
  for (int k = 0; k < 64; ++k) {
    EXPECT_EQ(fits[k].subband, Subband::from_index(k));
    EXPECT_EQ(fits[k].step, r.table[k]);
    EXPECT_EQ(fits[k].n_total, static_cast<std::int64_t>(r.levels.size()));
    const auto lv = r.levels.subband_levels(Subband::from_index(k));
    const bool all_zero = std::all_of(lv.begin(), lv.end(), [](int x) { return x == 0; });
    EXPECT_EQ(fits[k].status == FitStatus::all_zero, all_zero) << k;
  }
  const auto serial = fit_subbands(r.levels, r.table, Exec::serial);
  for (int k = 0; k < 64; ++k) EXPECT_EQ(serial[k].lambda_ml, fits[k].lambda_ml);
}
