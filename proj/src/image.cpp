#include "dctshield/image.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

namespace dctshield {

namespace {

void check_dims(int width, int height) {
  if (width < kBlockSize || height < kBlockSize)
    throw IoError("image must be at least 8x8, got " + std::to_string(width) + "x" +
                  std::to_string(height));
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// PGM header tokens are separated by whitespace and may be interleaved with
// '#' comments running to end of line.
class PgmHeader {
 public:
  explicit PgmHeader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  long next_int(const std::string& path) {
    skip_space();
    long v = 0;
    bool any = false;
    while (pos_ < bytes_.size() && bytes_[pos_] >= '0' && bytes_[pos_] <= '9') {
      v = v * 10 + (bytes_[pos_++] - '0');
      any = true;
      if (v > 1'000'000) throw IoError(path + ": PGM header value out of range");
    }
    if (!any) throw IoError(path + ": malformed PGM header");
    return v;
  }

  std::size_t pos() const { return pos_; }
  void advance(std::size_t n) { pos_ += n; }

 private:
  void skip_space() {
    while (pos_ < bytes_.size()) {
      if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 2;
};

GrayImage decode_pgm(const std::vector<std::uint8_t>& bytes, const std::string& path) {
  PgmHeader header(bytes);
  const long width = header.next_int(path);
  const long height = header.next_int(path);
  const long maxval = header.next_int(path);
  if (maxval != 255)
    throw IoError(path + ": unsupported PGM maxval " + std::to_string(maxval) + " (need 255)");
  // exactly one whitespace byte separates maxval from the raster
  header.advance(1);
  check_dims(static_cast<int>(width), static_cast<int>(height));
  const std::size_t count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if (bytes.size() < header.pos() + count) throw IoError(path + ": truncated PGM raster");
  std::vector<std::uint8_t> samples(bytes.begin() + static_cast<std::ptrdiff_t>(header.pos()),
                                    bytes.begin() + static_cast<std::ptrdiff_t>(header.pos() + count));
  return GrayImage(static_cast<int>(width), static_cast<int>(height), std::move(samples));
}

GrayImage decode_png(const std::vector<std::uint8_t>& bytes, const std::string& path) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()))
    throw IoError(path + ": " + image.message);
  if (image.format & PNG_FORMAT_FLAG_LINEAR) {
    png_image_free(&image);
    throw IoError(path + ": unsupported PNG bit depth (16-bit)");
  }
  const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  image.format = color ? PNG_FORMAT_RGBA : PNG_FORMAT_GA;
  const int channels = color ? 4 : 2;
  const int width = static_cast<int>(image.width);
  const int height = static_cast<int>(image.height);
  if (width < kBlockSize || height < kBlockSize) {
    png_image_free(&image);
    check_dims(width, height);
  }
  std::vector<std::uint8_t> raw(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, raw.data(), 0, nullptr))
    throw IoError(path + ": " + image.message);

  std::vector<std::uint8_t> samples(static_cast<std::size_t>(width) * height);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const std::uint8_t* px = &raw[i * channels];
    samples[i] = color ? luma(px[0], px[1], px[2]) : px[0];
  }
  return GrayImage(width, height, std::move(samples));
}

}  // namespace

GrayImage::GrayImage(int width, int height, std::vector<std::uint8_t> samples)
    : width_(width), height_(height), samples_(std::move(samples)) {
  check_dims(width, height);
  if (samples_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
    throw std::invalid_argument("sample count does not match dimensions");
}

GrayImage::GrayImage(int width, int height, std::uint8_t fill)
    : GrayImage(width, height,
                std::vector<std::uint8_t>(static_cast<std::size_t>(std::max(width, 0)) *
                                              static_cast<std::size_t>(std::max(height, 0)),
                                          fill)) {}

std::uint8_t luma(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  // all terms are nonnegative, so half-away-from-zero is plain half-up
  return static_cast<std::uint8_t>((299u * r + 587u * g + 114u * b + 500u) / 1000u);
}

GrayImage load_image(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  static constexpr std::uint8_t kPngMagic[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (bytes.size() >= 8 && std::equal(std::begin(kPngMagic), std::end(kPngMagic), bytes.begin()))
    return decode_png(bytes, path.string());
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '5') return decode_pgm(bytes, path.string());
  throw IoError(path.string() + ": not a binary PGM (P5) or PNG file");
}

void save_pgm(const GrayImage& img, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "P5\n" << img.width() << ' ' << img.height() << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.samples().data()),
            static_cast<std::streamsize>(img.samples().size()));
  if (!out) throw IoError("write failed: " + path.string());
}

void save_png(const GrayImage& img, const std::filesystem::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width());
  image.height = static_cast<png_uint_32>(img.height());
  image.format = PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&image, path.c_str(), 0, img.samples().data(), 0, nullptr))
    throw IoError("cannot write " + path.string() + ": " + image.message);
}

void save_image(const GrayImage& img, const std::filesystem::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".png")
    save_png(img, path);
  else
    save_pgm(img, path);
}

BlockGrid partition_blocks(const GrayImage& img) {
  BlockGrid grid;
  grid.blocks_x = img.width() / kBlockSize;
  grid.blocks_y = img.height() / kBlockSize;
  grid.blocks.resize(static_cast<std::size_t>(grid.blocks_x) * grid.blocks_y);
  for (int by = 0; by < grid.blocks_y; ++by)
    for (int bx = 0; bx < grid.blocks_x; ++bx) {
      PixelBlock& block = grid.blocks[static_cast<std::size_t>(by) * grid.blocks_x + bx];
      for (int r = 0; r < kBlockSize; ++r)
        for (int c = 0; c < kBlockSize; ++c)
          block[r * kBlockSize + c] = img.at(bx * kBlockSize + c, by * kBlockSize + r);
    }
  return grid;
}

GrayImage assemble_blocks(const BlockGrid& grid) {
  if (grid.blocks.size() != static_cast<std::size_t>(grid.blocks_x) * grid.blocks_y)
    throw std::invalid_argument("block count does not match grid dimensions");
  GrayImage img(grid.width(), grid.height(), std::uint8_t{0});
  for (int by = 0; by < grid.blocks_y; ++by)
    for (int bx = 0; bx < grid.blocks_x; ++bx) {
      const PixelBlock& block = grid.blocks[static_cast<std::size_t>(by) * grid.blocks_x + bx];
      for (int r = 0; r < kBlockSize; ++r)
        for (int c = 0; c < kBlockSize; ++c) {
          const double v = std::clamp(std::round(block[r * kBlockSize + c]), 0.0, 255.0);
          img.at(bx * kBlockSize + c, by * kBlockSize + r) = static_cast<std::uint8_t>(v);
        }
    }
  return img;
}

GrayImage crop_to_blocks(const GrayImage& img) {
  const int w = img.width() / kBlockSize * kBlockSize;
  const int h = img.height() / kBlockSize * kBlockSize;
  if (w == img.width() && h == img.height()) return img;
  GrayImage out(w, h, std::uint8_t{0});
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) out.at(x, y) = img.at(x, y);
  return out;
}

}  // namespace dctshield
