#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "dctshield/anti_forensics.hpp"
#include "dctshield/codec.hpp"
#include "dctshield/forensics.hpp"

namespace dctshield {

inline constexpr const char* kToolVersion = "dct-shield 0.1.0";

/// A result contradicted one of the library's own guarantees. Exit code 3.
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Reproducibility record written next to every output artifact as
/// `<artifact>.manifest.json`.
struct RunManifest {
  std::string command;
  std::vector<std::string> inputs;
  std::optional<int> quality;
  std::optional<std::uint64_t> seed;
  nlohmann::json flags = nlohmann::json::object();
};

nlohmann::json manifest_json(const RunManifest& manifest);
std::filesystem::path manifest_path_for(const std::filesystem::path& artifact);
void write_manifest(const RunManifest& manifest, const std::filesystem::path& artifact);

// --- compress ---------------------------------------------------------------

struct CompressOptions {
  std::filesystem::path input;
  std::optional<std::filesystem::path> output;  // default: <stem>.q<Q>.pgm beside the input
  int quality = 75;
  std::optional<std::filesystem::path> dump_coeffs;  // ".bin" selects the binary format
};

struct CompressOutcome {
  std::filesystem::path output;
  JpegResult result;
};

CompressOutcome run_compress(const CompressOptions& opts);

// --- antiforensic -----------------------------------------------------------

struct AntiForensicOptions {
  std::filesystem::path input;
  std::optional<std::filesystem::path> output;  // default: <stem>.af.q<Q>.pgm
  int quality = 75;
  DitherConfig dither;
  std::optional<std::filesystem::path> dump_coeffs;  // Z in the coefficient CSV format
};

struct AntiForensicOutcome {
  std::filesystem::path output;
  AntiForensicResult result;
};

AntiForensicOutcome run_antiforensic(const AntiForensicOptions& opts);

// --- detect -----------------------------------------------------------------

struct DetectOptions {
  std::filesystem::path input;
  double threshold = kDefaultBamThreshold;
  std::optional<std::filesystem::path> report;
  std::optional<std::filesystem::path> map_csv;
  std::optional<std::filesystem::path> heatmap;
};

struct DetectOutcome {
  ForensicReport report;
  ForgeryMap map;
};

DetectOutcome run_detect(const DetectOptions& opts);

// --- forge-demo -------------------------------------------------------------

struct ForgeDemoOptions {
  std::filesystem::path background;
  std::filesystem::path patch;
  int x = 0;  // destination of the pasted region in the background
  int y = 0;
  std::optional<int> src_x;  // source corner in the patch image, default (x, y)
  std::optional<int> src_y;
  int width = 128;
  int height = 128;
  int quality_bg = 60;
  int quality_patch = 90;
  bool conceal = false;
  DitherConfig dither;
  std::filesystem::path output = "forgery.pgm";  // composite; map files share the stem
  ForgeryMapConfig map;
};

struct ForgeDemoOutcome {
  GrayImage composite;
  ForgeryMap map;
  std::filesystem::path output;
};

/// Pastes a region of the patch image (compressed at quality_patch) into the
/// background (compressed at quality_bg), optionally conceals the splice
/// with an anti-forensic pass at quality_bg, and maps the result.
ForgeDemoOutcome run_forge_demo(const ForgeDemoOptions& opts);

// --- evaluate ---------------------------------------------------------------

struct EvaluateOptions {
  std::filesystem::path corpus;
  std::vector<int> qualities = {50, 75, 90};
  std::vector<std::uint64_t> seeds = {1};
  std::filesystem::path out = "results.csv";
  double threshold = kDefaultBamThreshold;
  DitherConfig dither;
};

struct EvaluateRow {
  std::string image;
  int quality = 0;
  std::uint64_t seed = 0;
  double bam_jpeg = 0.0;
  double bam_attack = 0.0;
  double psnr_attack = 0.0;
  double table_recovery_rate = 0.0;
  Verdict verdict_jpeg = Verdict::consistent_with_uncompressed;
  Verdict verdict_attack = Verdict::consistent_with_uncompressed;
};

/// All .pgm/.png files in the directory, sorted by name.
std::vector<std::filesystem::path> list_corpus(const std::filesystem::path& dir);

/// One row per (image, quality, seed), rows ordered by image, then quality,
/// then seed. Images are processed in parallel.
std::vector<EvaluateRow> run_evaluate(const EvaluateOptions& opts);

inline constexpr const char* kEvaluateHeader =
    "image,quality,seed,bam_jpeg,bam_attack,psnr_attack,table_recovery_rate,verdict_jpeg,verdict_attack";

void write_evaluate_csv(const std::vector<EvaluateRow>& rows, const std::filesystem::path& path);

}  // namespace dctshield
