// Serial reference kernels against their OpenMP versions on one test image.
#include <benchmark/benchmark.h>

#include "dctshield/anti_forensics.hpp"
#include "dctshield/codec.hpp"
#include "dctshield/forensics.hpp"
#include "dctshield/image.hpp"

using namespace dctshield;

namespace {

const GrayImage& image() {
  static const GrayImage img = load_image(DCTSHIELD_DATA_DIR "/astronaut.pgm");
  return img;
}

Exec exec_of(const benchmark::State& state) { return state.range(0) ? Exec::parallel : Exec::serial; }

void BM_ForwardDct(benchmark::State& state) {
  const BlockGrid grid = partition_blocks(image());
  for (auto _ : state) benchmark::DoNotOptimize(forward_dct_plane(grid, true, exec_of(state)));
}

void BM_ApplyDither(benchmark::State& state) {
  const JpegResult jpeg = jpeg_pipeline(image(), 75);
  const auto fits = fit_subbands(jpeg.levels, jpeg.table);
  const DitherConfig cfg{};
  for (auto _ : state) benchmark::DoNotOptimize(apply_dither(jpeg.levels, jpeg.table, fits, cfg, exec_of(state)));
}

void BM_Deblock(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(deblock(image(), 3, 1, exec_of(state)));
}

void BM_EstimateTable(benchmark::State& state) {
  const CoefficientPlane plane = forward_dct_plane(partition_blocks(jpeg_pipeline(image(), 75).decompressed));
  for (auto _ : state) benchmark::DoNotOptimize(estimate_quant_table(plane, {}, exec_of(state)));
}

}  // namespace

// Arg 0 = serial, 1 = parallel
BENCHMARK(BM_ForwardDct)->Arg(0)->Arg(1)->UseRealTime()->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ApplyDither)->Arg(0)->Arg(1)->UseRealTime()->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Deblock)->Arg(0)->Arg(1)->UseRealTime()->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EstimateTable)->Arg(0)->Arg(1)->UseRealTime()->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
