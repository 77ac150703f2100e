#include <cmath>
#include <cstdio>
#include <exception>
#include <iostream>
#include <map>
#include <stdexcept>
#include <string>

#include "CLI11.hpp"

#include "dctshield/harness.hpp"
#include "dctshield/image.hpp"
#include "dctshield/parallel.hpp"

namespace fs = std::filesystem;
using namespace dctshield;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kIo = 2, kInvariant = 3 };

const std::map<std::string, DcFallback> kDcFallbacks = {{"uniform", DcFallback::uniform},
                                                        {"none", DcFallback::none}};
const std::map<std::string, DegenerateFallback> kDegenerateFallbacks = {{"none", DegenerateFallback::none},
                                                                        {"uniform", DegenerateFallback::uniform}};

void add_dither_flags(CLI::App* cmd, DitherConfig& cfg, bool& no_deblock) {
  cmd->add_option("--seed", cfg.seed, "Dither and deblock seed")->capture_default_str();
  cmd->add_flag("--no-deblock", no_deblock, "Skip the median-filter deblocking pass");
  cmd->add_option("--deblock-window", cfg.deblock_window, "Odd median window size")->capture_default_str();
  cmd->add_option("--dc-fallback", cfg.dc_fallback, "Dither for the DC subband")
      ->transform(CLI::CheckedTransformer(kDcFallbacks, CLI::ignore_case));
  cmd->add_option("--degenerate-fallback", cfg.degenerate_fallback,
                  "Dither for AC subbands whose fit is degenerate")
      ->transform(CLI::CheckedTransformer(kDegenerateFallbacks, CLI::ignore_case));
}

void print_map_summary(const ForgeryMap& map) {
  std::printf("forgery: outliers=%d saturated=%d largest_cluster=%d inconsistency=%.4f flagged=%s\n",
              map.outlier_count, map.saturated_count, map.largest_cluster, map.inconsistency,
              map.flagged ? "yes" : "no");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"JPEG compression forensics and anti-forensic dithering", "dct-shield"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  CompressOptions compress;
  auto* c = app.add_subcommand("compress", "Run the block-DCT compression pipeline");
  c->add_option("input", compress.input, "Input PGM/PNG")->required();
  c->add_option("-o,--output", compress.output, "Output image (default <stem>.q<Q>.pgm)");
  c->add_option("-q,--quality", compress.quality, "Quality 1..100")->check(CLI::Range(1, 100))->capture_default_str();
  c->add_option("--dump-coeffs", compress.dump_coeffs, "Quantized levels as CSV, or raw int32 if the name ends in .bin");

  AntiForensicOptions attack;
  bool attack_no_deblock = false;
  auto* a = app.add_subcommand("antiforensic", "Compress, then hide the compression with dither");
  a->add_option("input", attack.input, "Input PGM/PNG")->required();
  a->add_option("-o,--output", attack.output, "Output image (default <stem>.af.q<Q>.pgm)");
  a->add_option("-q,--quality", attack.quality, "Quality 1..100")->check(CLI::Range(1, 100))->capture_default_str();
  a->add_option("--dump-coeffs", attack.dump_coeffs, "Dithered coefficients as CSV");
  add_dither_flags(a, attack.dither, attack_no_deblock);

  DetectOptions detect;
  auto* d = app.add_subcommand("detect", "Estimate the quantization table and the blocking artifact measure");
  d->add_option("input", detect.input, "Input PGM/PNG")->required();
  d->add_option("--threshold", detect.threshold, "BAM above this means jpeg-compressed")->capture_default_str();
  d->add_option("--report", detect.report, "JSON report path");
  d->add_option("--map", detect.map_csv, "Per-block B grid as CSV");
  d->add_option("--heatmap", detect.heatmap, "Per-block B heatmap image");

  ForgeDemoOptions forge;
  bool forge_no_deblock = false;
  auto* f = app.add_subcommand("forge-demo", "Build a cut-and-paste composite and map it");
  f->add_option("background", forge.background, "Background image")->required();
  f->add_option("patch", forge.patch, "Image the pasted region comes from")->required();
  f->add_option("x", forge.x, "Destination column")->required();
  f->add_option("y", forge.y, "Destination row")->required();
  f->add_option("--width", forge.width)->capture_default_str();
  f->add_option("--height", forge.height)->capture_default_str();
  f->add_option("--src-x", forge.src_x, "Source column in the patch image (default x)");
  f->add_option("--src-y", forge.src_y, "Source row in the patch image (default y)");
  f->add_option("--quality-bg", forge.quality_bg)->check(CLI::Range(1, 100))->capture_default_str();
  f->add_option("--quality-patch", forge.quality_patch)->check(CLI::Range(1, 100))->capture_default_str();
  f->add_flag("--conceal", forge.conceal, "Anti-forensic pass at the background quality after pasting");
  f->add_option("-o,--output", forge.output, "Composite image; map files share its stem")->capture_default_str();
  add_dither_flags(f, forge.dither, forge_no_deblock);

  EvaluateOptions eval;
  bool eval_no_deblock = false;
  auto* e = app.add_subcommand("evaluate", "Metrics over a corpus directory");
  e->add_option("corpus", eval.corpus, "Directory of PGM/PNG images")->required();
  e->add_option("--qualities", eval.qualities)->delimiter(',')->capture_default_str();
  e->add_option("--seeds", eval.seeds)->delimiter(',')->capture_default_str();
  e->add_option("--out", eval.out)->capture_default_str();
  e->add_option("--threshold", eval.threshold)->capture_default_str();
  add_dither_flags(e, eval.dither, eval_no_deblock);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    return app.exit(err) == 0 ? kOk : kUsage;
  }

  try {
    configure_threads_from_env();
    if (*c) {
      const auto out = run_compress(compress);
      std::printf("wrote %s (%dx%d)\n", out.output.c_str(), out.result.decompressed.width(),
                  out.result.decompressed.height());
    } else if (*a) {
      attack.dither.deblock = !attack_no_deblock;
      const auto out = run_antiforensic(attack);
      std::printf("wrote %s psnr=%.2f dB vs compressed\n", out.output.c_str(),
                  psnr(out.result.jpeg, out.result.image));
    } else if (*d) {
      const auto out = run_detect(detect);
      std::printf("bam=%.6f threshold=%g verdict=%s\n", out.report.bam, out.report.threshold_used,
                  to_string(out.report.verdict).c_str());
      for (const auto& note : out.report.notes) std::printf("note: %s\n", note.c_str());
      print_map_summary(out.map);
    } else if (*f) {
      forge.dither.deblock = !forge_no_deblock;
      const auto out = run_forge_demo(forge);
      std::printf("wrote %s\n", out.output.c_str());
      print_map_summary(out.map);
    } else if (*e) {
      eval.dither.deblock = !eval_no_deblock;
      const auto rows = run_evaluate(eval);
      std::printf("wrote %zu rows to %s\n", rows.size(), eval.out.c_str());
    }
  } catch (const IoError& err) {
    std::fprintf(stderr, "dct-shield: %s\n", err.what());
    return kIo;
  } catch (const fs::filesystem_error& err) {
    std::fprintf(stderr, "dct-shield: %s\n", err.what());
    return kIo;
  } catch (const std::invalid_argument& err) {
    std::fprintf(stderr, "dct-shield: %s\n", err.what());
    return kUsage;
  } catch (const std::exception& err) {
    std::fprintf(stderr, "dct-shield: internal error: %s\n", err.what());
    return kInvariant;
  }
  return kOk;
}
