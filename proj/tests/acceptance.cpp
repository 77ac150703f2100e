// Acceptance suite: one [PASS]/[FAIL] line per criterion.
//   acceptance               run all ten
//   acceptance --criterion N run one; exit status 1 if it fails
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "CLI11.hpp"

#include "dctshield/anti_forensics.hpp"
#include "dctshield/codec.hpp"
#include "dctshield/coeff_model.hpp"
#include "dctshield/forensics.hpp"
#include "dctshield/harness.hpp"
#include "oracles.hpp"
#include "test_data.hpp"

using namespace dctshield;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// 1. forward -> inverse round trip and agreement with the literal double sum
Outcome dct_round_trip() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 255.0);
  double err_fwd = 0.0, err_inv = 0.0, err_rt = 0.0;
  for (int n = 0; n < 10000; ++n) {
    PixelBlock b{};
    for (auto& v : b) v = u(rng);
    const CoeffBlock d = forward_dct(b);
    const CoeffBlock d_ref = oracle::dct_double_sum(b);
    const PixelBlock back = inverse_dct(d);
    const PixelBlock back_ref = oracle::idct_double_sum(d_ref);
    for (int k = 0; k < 64; ++k) {
      err_fwd = std::max(err_fwd, std::abs(d[k] - d_ref[k]));
      err_inv = std::max(err_inv, std::abs(back[k] - back_ref[k]));
      err_rt = std::max(err_rt, std::abs(back[k] - b[k]));
    }
  }
  const double secs = seconds_since(t0);
  const double worst = std::max({err_fwd, err_inv, err_rt});
  return {worst < 1e-6 && secs < 5.0,
          fmt("10^4 blocks, max |fwd-oracle|=%.2e |inv-oracle|=%.2e |roundtrip|=%.2e (limit 1e-6), %.2f s (limit 5 s)",
              err_fwd, err_inv, err_rt, secs)};
}

// 2. every dequantized coefficient sits on its step lattice
Outcome lattice_comb() {
  std::size_t coeffs = 0, violations = 0;
  for (const auto& name : testdata::pristine_corpus()) {
    const JpegResult r = jpeg_pipeline(testdata::load(name), 75);
    const CoefficientPlane y = dequantize(r.levels, r.table);
    for (const auto& blk : y.blocks)
      for (int k = 0; k < 64; ++k) {
        ++coeffs;
        violations += std::fmod(blk[k], r.table[k]) != 0.0;
      }
  }
  return {violations == 0, fmt("%zu coefficients at quality 75, %zu off-lattice", coeffs, violations)};
}

// 3. closed-form lambda against a numeric maximizer of the quantized likelihood
Outcome lambda_ml() {
  int configs = 0, within = 0;
  double worst = 0.0;
  std::uint64_t seed = 300;
  for (double lambda : {0.02, 0.05, 0.1, 0.2, 0.5})
    for (int q : {2, 5, 10, 20}) {
      ++configs;
      std::mt19937_64 rng(seed++);
      std::vector<double> v(10000);
      for (auto& x : v) x = q * std::round(oracle::laplacian(lambda, rng) / q);
      const LaplacianFit f = fit_laplacian(v, q);
      if (f.degenerate()) {
        worst = INFINITY;
        continue;
      }
      const double ref = oracle::quantized_mle(v, q);
      const double rel = std::abs(f.lambda_ml - ref) / ref;
      worst = std::max(worst, rel);
      within += rel < 0.02;
    }
  return {within == configs, fmt("%d/%d (lambda, Q) configurations within 2%%, worst relative error %.2e", within,
                                 configs, worst)};
}

// 4. dithered coefficients follow the fitted Laplacian
struct SubbandP {
  Subband subband;
  double p;
};

// Chi-square p-value per non-degenerate subband with >= 10^4 coefficients,
// 50 bins equiprobable under the fitted Laplacian.
std::vector<SubbandP> dither_pvalues(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const QuantTable table = quality_to_table(75);
  const QuantizedPlane levels = oracle::synthetic_levels(128, 80, table, 60.0, rng);
  const auto fits = fit_subbands(levels, table);
  DitherConfig cfg;
  cfg.seed = seed;
  const CoefficientPlane z = apply_dither(levels, table, fits, cfg);

  constexpr int kBins = 50;
  const boost::math::chi_squared dist(kBins - 2);  // one fitted parameter
  std::vector<SubbandP> out;
  for (int k = 0; k < 64; ++k) {
    const LaplacianFit& f = fits[k];
    if (f.degenerate() || f.n_total < 10000) continue;
    std::vector<double> edges;
    for (int e = 1; e < kBins; ++e) edges.push_back(oracle::laplacian_quantile(f.lambda_ml, double(e) / kBins));
    std::vector<double> observed(kBins, 0.0);
    for (const auto& blk : z.blocks)
      observed[std::upper_bound(edges.begin(), edges.end(), blk[k]) - edges.begin()] += 1.0;
    const double expected = double(z.size()) / kBins;
    double stat = 0.0;
    for (double o : observed) stat += (o - expected) * (o - expected) / expected;
    out.push_back({f.subband, boost::math::cdf(boost::math::complement(dist, stat))});
  }
  return out;
}

Outcome dither_distribution() {
  // the verdict uses seed 4 only; the other seeds report how often a single
  // subband test rejects, which should be close to 1%
  const auto primary = dither_pvalues(4);
  int passed = 0;
  SubbandP worst{{}, 1.0};
  for (const auto& sp : primary) {
    passed += sp.p >= 0.01;
    if (sp.p < worst.p) worst = sp;
  }
  std::size_t tests = 0, rejections = 0;
  for (std::uint64_t seed = 100; seed < 110; ++seed)
    for (const auto& sp : dither_pvalues(seed)) {
      ++tests;
      rejections += sp.p < 0.01;
    }
  const int tested = static_cast<int>(primary.size());
  return {tested > 0 && passed == tested,
          fmt("%d/%d non-degenerate subbands (10240 coefficients each) pass chi-square at 0.01, min p=%.4f at (%d,%d); "
              "calibration over 10 more seeds: %zu/%zu single-subband rejections (%.2f%%, 1%% expected)",
              passed, tested, worst.p, worst.subband.i, worst.subband.j, rejections, tests,
              100.0 * rejections / tests)};
}

// 5. re-quantizing Z gives back X'
Outcome bin_consistency() {
  std::size_t total = 0, bad = 0;
  for (const auto& name : testdata::pristine_corpus())
    for (int q : {50, 75, 90}) {
      const JpegResult r = jpeg_pipeline(testdata::load(name), q);
      const auto fits = fit_subbands(r.levels, r.table);
      for (std::uint64_t seed : {1u, 2u}) {
        DitherConfig cfg;
        cfg.seed = seed;
        const QuantizedPlane back = quantize(apply_dither(r.levels, r.table, fits, cfg), r.table);
        for (std::size_t b = 0; b < back.size(); ++b)
          for (int k = 0; k < 64; ++k) {
            ++total;
            bad += back.blocks[b][k] != r.levels.blocks[b][k];
          }
      }
    }
  return {bad == 0, fmt("%zu coefficients (6 images x 3 qualities x 2 seeds), %zu changed level", total, bad)};
}

// 6. step estimator on synthetic subbands
Outcome quantizer_oracle() {
  int comb = 0, comb_ok = 0, flat = 0, flat_ok = 0;
  std::uint64_t seed = 600;
  std::string misses;
  for (int q : {2, 4, 8, 16})
    for (double lambda : {0.05, 0.1, 0.3}) {
      std::mt19937_64 rng(seed++);
      std::vector<double> v(10000);
      for (auto& x : v) x = q * std::round(oracle::laplacian(lambda, rng) / q);
      const int est = estimate_quant_step(histogram_of(v)).estimated_step;
      ++comb;
      if (est == q)
        ++comb_ok;
      else
        misses += fmt(" q=%d,lambda=%.2f->%d", q, lambda, est);
    }
  for (double lambda : {0.05, 0.1, 0.3})
    for (int rep = 0; rep < 3; ++rep) {
      std::mt19937_64 rng(seed++);
      std::vector<double> v(10000);
      for (auto& x : v) x = oracle::laplacian(lambda, rng);
      ++flat;
      const int est = estimate_quant_step(histogram_of(v)).estimated_step;
      if (est == 1)
        ++flat_ok;
      else
        misses += fmt(" unquantized lambda=%.2f->%d", lambda, est);
    }
  return {comb_ok * 10 >= comb * 9 && flat_ok == flat,
          fmt("quantized exact %d/%d (need >= 90%%), unquantized step 1 %d/%d (need all)%s", comb_ok, comb, flat_ok,
              flat, misses.c_str())};
}

// 7. BAM before and after the attack
Outcome bam_separation() {
  bool ok = true;
  std::string rows;
  for (const auto& name : testdata::pristine_corpus()) {
    DitherConfig cfg;
    cfg.seed = 1;
    const AntiForensicResult r = antiforensic_pipeline_detailed(testdata::load(name), 75, cfg);
    const ForensicReport j = compute_bam(r.jpeg);
    const ForensicReport a = compute_bam(r.image);
    const double ratio = j.bam / std::max(a.bam, 1e-3);
    const bool row = ratio > 1e3 && j.verdict == Verdict::jpeg_compressed &&
                     a.verdict == Verdict::consistent_with_uncompressed;
    ok = ok && row;
    rows += fmt(" %s:%.3f/%.3f(x%.0f)", name.c_str(), j.bam, a.bam, ratio);
  }
  return {ok, "quality 75, BAM jpeg/attack per image:" + rows};
}

// 8. PSNR of the attacked image against the original
Outcome fidelity() {
  bool ok = true;
  std::string rows, filtered;
  for (const auto& name : testdata::pristine_corpus()) {
    const GrayImage img = testdata::load(name);
    const GrayImage ref = crop_to_blocks(img);
    DitherConfig cfg;
    cfg.seed = 1;
    cfg.deblock = false;
    const double p90 = psnr(ref, antiforensic_pipeline(img, 90, cfg));
    const double p50 = psnr(ref, antiforensic_pipeline(img, 50, cfg));
    cfg.deblock = true;
    const double f90 = psnr(ref, antiforensic_pipeline(img, 90, cfg));
    const double f50 = psnr(ref, antiforensic_pipeline(img, 50, cfg));
    ok = ok && p90 >= 40.0 && p50 >= 30.0;
    rows += fmt(" %s:%.2f/%.2f", name.c_str(), p90, p50);
    filtered += fmt(" %s:%.2f/%.2f", name.c_str(), f90, f50);
  }
  return {ok, "dither only, PSNR dB q90/q50 (need >=40/>=30):" + rows + "; with deblocking:" + filtered};
}

// 9. cut-and-paste composite flagged, concealed composite not
Outcome forgery_demo() {
  const fs::path dir = fs::temp_directory_path() / "dctshield_acceptance_forge";
  fs::create_directories(dir);
  ForgeDemoOptions opts;
  opts.background = testdata::path("camera");
  opts.patch = testdata::path("astronaut");
  opts.x = opts.y = 192;
  opts.dither.seed = 1;
  opts.output = dir / "forged.pgm";
  const ForgeryMap plain = run_forge_demo(opts).map;
  opts.conceal = true;
  opts.output = dir / "concealed.pgm";
  const ForgeryMap hidden = run_forge_demo(opts).map;
  return {plain.flagged && !hidden.flagged,
          fmt("q60 background + q90 patch: largest outlier cluster %d (flag at %d), after conceal %d; "
              "inconsistency %.2f -> %.2f",
              plain.largest_cluster, opts.map.min_cluster, hidden.largest_cluster, plain.inconsistency,
              hidden.inconsistency)};
}

// 10. same seed, different thread counts, same bytes
Outcome determinism() {
  const fs::path dir = fs::temp_directory_path() / "dctshield_acceptance_threads";
  fs::create_directories(dir);
  std::vector<std::string> images;
  bool all_ran = true;
  for (int threads : {1, 4, 1, 7}) {
    const fs::path out = dir / fmt("t%d_%zu.pgm", threads, images.size());
    const std::string cmd = fmt("DCT_SHIELD_THREADS=%d %s antiforensic %s --quality 75 --seed 11 -o %s >/dev/null",
                                threads, DCTSHIELD_CLI, testdata::path("camera").c_str(), out.c_str());
    all_ran = all_ran && std::system(cmd.c_str()) == 0;
    std::ifstream in(out, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    images.push_back(ss.str());
  }
  const bool same = !images[0].empty() && std::all_of(images.begin(), images.end(),
                                                      [&](const std::string& s) { return s == images[0]; });
  return {all_ran && same, fmt("4 CLI runs with DCT_SHIELD_THREADS=1,4,1,7: %s (%zu bytes)",
                               same ? "byte-identical" : "outputs differ", images[0].size())};
}

const std::vector<std::pair<const char*, std::function<Outcome()>>> kCriteria = {
    {"DCT round trip", dct_round_trip},
    {"lattice comb", lattice_comb},
    {"lambda ML", lambda_ml},
    {"dither distribution", dither_distribution},
    {"bin consistency", bin_consistency},
    {"quantizer estimation", quantizer_oracle},
    {"BAM separation", bam_separation},
    {"fidelity", fidelity},
    {"forgery demo", forgery_demo},
    {"determinism", determinism},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  int only = 0;
  app.add_option("--criterion", only, "Run a single criterion (1-10)")->check(CLI::Range(1, 10));
  CLI11_PARSE(app, argc, argv);

  int failures = 0;
  for (std::size_t n = 1; n <= kCriteria.size(); ++n) {
    if (only != 0 && static_cast<std::size_t>(only) != n) continue;
    const auto& [name, run] = kCriteria[n - 1];
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("[%s] criterion %zu (%s): %s\n", o.pass ? "PASS" : "FAIL", n, name, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
