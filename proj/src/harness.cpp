#include "dctshield/harness.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <cstdio>
#include <exception>
#include <fstream>
#include <stdexcept>

#include "dctshield/image.hpp"
#include "dctshield/parallel.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace dctshield {

namespace {

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

fs::path sibling(const fs::path& input, const std::string& suffix) {
  return input.parent_path() / (input.stem().string() + suffix);
}

json dither_flags(const DitherConfig& cfg) {
  return {{"deblock", cfg.deblock},
          {"deblock_window", cfg.deblock_window},
          {"dc_fallback", cfg.dc_fallback == DcFallback::uniform ? "uniform" : "none"},
          {"degenerate_fallback", cfg.degenerate_fallback == DegenerateFallback::uniform ? "uniform" : "none"}};
}

double recovery_rate(const QuantTable& estimated, const QuantTable& truth) {
  int hits = 0;
  for (int k = 0; k < kBlockArea; ++k) hits += estimated[k] == truth[k];
  return hits / static_cast<double>(kBlockArea);
}

void check_bin_consistency(const CoefficientPlane& z, const QuantizedPlane& levels, const QuantTable& table) {
  const QuantizedPlane again = quantize(z, table);
  if (again.blocks != levels.blocks) throw InvariantError("dithered coefficients left their quantization bins");
}

}  // namespace

json manifest_json(const RunManifest& m) {
  json j;
  j["command"] = m.command;
  j["inputs"] = m.inputs;
  j["quality"] = m.quality ? json(*m.quality) : json(nullptr);
  j["seed"] = m.seed ? json(*m.seed) : json(nullptr);
  j["flags"] = m.flags;
  j["version"] = kToolVersion;
  j["timestamp"] = utc_timestamp();
  return j;
}

fs::path manifest_path_for(const fs::path& artifact) {
  fs::path p = artifact;
  p += ".manifest.json";
  return p;
}

void write_manifest(const RunManifest& m, const fs::path& artifact) {
  write_text(manifest_path_for(artifact), manifest_json(m).dump(2) + "\n");
}

CompressOutcome run_compress(const CompressOptions& opts) {
  const GrayImage img = load_image(opts.input);
  JpegResult res = jpeg_pipeline(img, opts.quality);
  if (res.decompressed.width() != img.width() / kBlockSize * kBlockSize ||
      res.decompressed.height() != img.height() / kBlockSize * kBlockSize)
    throw InvariantError("compressed image is not cropped to whole blocks");

  const fs::path out = opts.output.value_or(sibling(opts.input, ".q" + std::to_string(opts.quality) + ".pgm"));
  save_image(res.decompressed, out);

  RunManifest m{"compress", {opts.input.string()}, opts.quality, std::nullopt, json::object()};
  if (opts.dump_coeffs) {
    if (opts.dump_coeffs->extension() == ".bin")
      write_levels_binary(res.levels, *opts.dump_coeffs);
    else
      write_levels_csv(res.levels, *opts.dump_coeffs);
    m.flags["dump_coeffs"] = opts.dump_coeffs->string();
    write_manifest(m, *opts.dump_coeffs);
  }
  write_manifest(m, out);
  return {out, std::move(res)};
}

AntiForensicOutcome run_antiforensic(const AntiForensicOptions& opts) {
  const GrayImage img = load_image(opts.input);
  AntiForensicResult res = antiforensic_pipeline_detailed(img, opts.quality, opts.dither);
  check_bin_consistency(res.dithered, res.levels, res.table);

  const fs::path out = opts.output.value_or(sibling(opts.input, ".af.q" + std::to_string(opts.quality) + ".pgm"));
  save_image(res.image, out);

  RunManifest m{"antiforensic", {opts.input.string()}, opts.quality, opts.dither.seed, dither_flags(opts.dither)};
  if (opts.dump_coeffs) {
    write_coefficients_csv(res.dithered, *opts.dump_coeffs);
    m.flags["dump_coeffs"] = opts.dump_coeffs->string();
    write_manifest(m, *opts.dump_coeffs);
  }
  write_manifest(m, out);
  return {out, std::move(res)};
}

DetectOutcome run_detect(const DetectOptions& opts) {
  const GrayImage img = load_image(opts.input);
  ForensicReport report = compute_bam(img, opts.threshold);
  ForgeryMap map = forgery_map_from(report, {}, saturated_blocks(img));

  RunManifest m{"detect", {opts.input.string()}, std::nullopt, std::nullopt, {{"threshold", opts.threshold}}};
  if (opts.report) {
    json j = report_to_json(report);
    j["forgery"] = {{"median", map.median},
                    {"iqr", map.iqr},
                    {"outlier_threshold", map.outlier_threshold},
                    {"outlier_count", map.outlier_count},
                    {"saturated_blocks", map.saturated_count},
                    {"largest_cluster", map.largest_cluster},
                    {"inconsistency", map.inconsistency},
                    {"flagged", map.flagged}};
    write_text(*opts.report, j.dump(2) + "\n");
    write_manifest(m, *opts.report);
  }
  if (opts.map_csv) {
    write_forgery_csv(map, *opts.map_csv);
    write_manifest(m, *opts.map_csv);
  }
  if (opts.heatmap) {
    save_image(forgery_heatmap(map), *opts.heatmap);
    write_manifest(m, *opts.heatmap);
  }
  return {std::move(report), std::move(map)};
}

ForgeDemoOutcome run_forge_demo(const ForgeDemoOptions& opts) {
  const GrayImage background = load_image(opts.background);
  const GrayImage patch = load_image(opts.patch);
  const int sx = opts.src_x.value_or(opts.x);
  const int sy = opts.src_y.value_or(opts.y);

  const GrayImage bg = jpeg_pipeline(background, opts.quality_bg).decompressed;
  const GrayImage pt = jpeg_pipeline(patch, opts.quality_patch).decompressed;
  if (opts.width < 1 || opts.height < 1) throw std::invalid_argument("forge-demo: region must be non-empty");
  if (opts.x < 0 || opts.y < 0 || opts.x + opts.width > bg.width() || opts.y + opts.height > bg.height())
    throw std::invalid_argument("forge-demo: destination region outside the background");
  if (sx < 0 || sy < 0 || sx + opts.width > pt.width() || sy + opts.height > pt.height())
    throw std::invalid_argument("forge-demo: source region outside the patch image");

  GrayImage composite = bg;
  for (int dy = 0; dy < opts.height; ++dy)
    for (int dx = 0; dx < opts.width; ++dx) composite.at(opts.x + dx, opts.y + dy) = pt.at(sx + dx, sy + dy);
  if (opts.conceal) composite = antiforensic_pipeline(composite, opts.quality_bg, opts.dither);

  ForgeryMap map = forgery_map(composite, opts.map);

  save_image(composite, opts.output);
  const fs::path map_csv = sibling(opts.output, ".map.csv");
  const fs::path heat = sibling(opts.output, ".heatmap.pgm");
  const fs::path summary = sibling(opts.output, ".forgery.json");
  write_forgery_csv(map, map_csv);
  save_image(forgery_heatmap(map), heat);
  const json s = {{"flagged", map.flagged},
                  {"largest_cluster", map.largest_cluster},
                  {"outlier_count", map.outlier_count},
                  {"saturated_blocks", map.saturated_count},
                  {"median", map.median},
                  {"iqr", map.iqr},
                  {"outlier_threshold", map.outlier_threshold},
                  {"inconsistency", map.inconsistency},
                  {"blocks_x", map.blocks_x},
                  {"blocks_y", map.blocks_y}};
  write_text(summary, s.dump(2) + "\n");

  json flags = dither_flags(opts.dither);
  flags.update({{"x", opts.x},
                {"y", opts.y},
                {"src_x", sx},
                {"src_y", sy},
                {"width", opts.width},
                {"height", opts.height},
                {"quality_bg", opts.quality_bg},
                {"quality_patch", opts.quality_patch},
                {"conceal", opts.conceal},
                {"iqr_factor", opts.map.iqr_factor},
                {"min_cluster", opts.map.min_cluster}});
  const RunManifest m{"forge-demo", {opts.background.string(), opts.patch.string()}, std::nullopt,
                      opts.dither.seed, flags};
  for (const auto& p : {opts.output, map_csv, heat, summary}) write_manifest(m, p);
  return {std::move(composite), std::move(map), opts.output};
}

std::vector<fs::path> list_corpus(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto ext = entry.path().extension();
    if (ext == ".pgm" || ext == ".png") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

std::vector<EvaluateRow> run_evaluate(const EvaluateOptions& opts) {
  const auto files = list_corpus(opts.corpus);
  std::vector<GrayImage> images;
  images.reserve(files.size());
  for (const auto& f : files) images.push_back(load_image(f));

  struct Task {
    std::size_t image;
    int quality;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (std::size_t i = 0; i < images.size(); ++i)
    for (int q : opts.qualities)
      for (auto s : opts.seeds) tasks.push_back({i, q, s});

  std::vector<EvaluateRow> rows(tasks.size());
  std::vector<std::exception_ptr> errors(tasks.size());
  const auto n = static_cast<std::ptrdiff_t>(tasks.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t t = 0; t < n; ++t) {
    try {
      const Task& task = tasks[static_cast<std::size_t>(t)];
      const GrayImage& img = images[task.image];
      DitherConfig cfg = opts.dither;
      cfg.seed = task.seed;
      const AntiForensicResult res = antiforensic_pipeline_detailed(img, task.quality, cfg, Exec::serial);
      const ForensicReport jr = compute_bam(res.jpeg, opts.threshold, {}, Exec::serial);
      const ForensicReport ar = compute_bam(res.image, opts.threshold, {}, Exec::serial);

      EvaluateRow& row = rows[static_cast<std::size_t>(t)];
      row.image = files[task.image].filename().string();
      row.quality = task.quality;
      row.seed = task.seed;
      row.bam_jpeg = jr.bam;
      row.bam_attack = ar.bam;
      row.psnr_attack = psnr(crop_to_blocks(img), res.image);
      row.table_recovery_rate = recovery_rate(jr.estimated_table, res.table);
      row.verdict_jpeg = jr.verdict;
      row.verdict_attack = ar.verdict;
    } catch (...) {
      errors[static_cast<std::size_t>(t)] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  write_evaluate_csv(rows, opts.out);
  json flags = dither_flags(opts.dither);
  flags["qualities"] = opts.qualities;
  flags["seeds"] = opts.seeds;
  flags["threshold"] = opts.threshold;
  std::vector<std::string> inputs;
  for (const auto& f : files) inputs.push_back(f.string());
  write_manifest({"evaluate", inputs, std::nullopt, std::nullopt, flags}, opts.out);
  return rows;
}

void write_evaluate_csv(const std::vector<EvaluateRow>& rows, const fs::path& path) {
  std::string text = std::string(kEvaluateHeader) + "\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, ",%d,%llu,%.6f,%.6f,%.4f,%.4f,", r.quality,
                  static_cast<unsigned long long>(r.seed), r.bam_jpeg, r.bam_attack, r.psnr_attack,
                  r.table_recovery_rate);
    text += r.image + buf + to_string(r.verdict_jpeg) + "," + to_string(r.verdict_attack) + "\n";
  }
  write_text(path, text);
}

}  // namespace dctshield
