#include "tvsn/core/image_io.hpp"

#include <png.h>

#include <cstdio>
#include <memory>
#include <vector>

namespace tvsn {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f != nullptr) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

std::uint8_t to_u8(float v) { return static_cast<std::uint8_t>(quantize_u8(v) * 255.0f + 0.5f); }

void write_rows(const std::filesystem::path& path, int width, int height, int color_type,
                const std::vector<std::uint8_t>& pixels, int channels) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) fail(ErrorKind::Io, "cannot open for writing: " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(ErrorKind::Io, "PNG encode failed: " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, width, height, 8, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < height; ++y) {
    png_write_row(png, pixels.data() + static_cast<std::size_t>(y) * width * channels);
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

// Decodes any PNG to 8-bit RGB or gray.
std::vector<std::uint8_t> read_rows(const std::filesystem::path& path, bool gray, int& width, int& height) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) fail(ErrorKind::Io, "cannot open for reading: " + path.string());
  png_byte header[8];
  if (std::fread(header, 1, 8, fp.get()) != 8 || png_sig_cmp(header, 0, 8) != 0) {
    fail(ErrorKind::Format, "not a PNG file: " + path.string());
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  std::vector<std::uint8_t> pixels;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(ErrorKind::Format, "PNG decode failed: " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  width = static_cast<int>(png_get_image_width(png, info));
  height = static_cast<int>(png_get_image_height(png, info));
  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  const bool src_gray = (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA);
  if (gray && !src_gray) png_set_rgb_to_gray_fixed(png, 1, -1, -1);
  if (!gray && src_gray) png_set_gray_to_rgb(png);
  png_read_update_info(png, info);
  const int channels = gray ? 1 : 3;
  pixels.resize(static_cast<std::size_t>(width) * height * channels);
  std::vector<png_bytep> rows(height);
  for (int y = 0; y < height; ++y) rows[y] = pixels.data() + static_cast<std::size_t>(y) * width * channels;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return pixels;
}

}  // namespace

void write_png(const std::filesystem::path& path, const Image& image) {
  if (image.channels() != 3 && image.channels() != 1) {
    fail(ErrorKind::Shape, "PNG export needs 1 or 3 channels, got " + std::to_string(image.channels()));
  }
  const int c = image.channels();
  std::vector<std::uint8_t> px(static_cast<std::size_t>(image.width()) * image.height() * c);
  for (int y = 0; y < image.height(); ++y)
    for (int x = 0; x < image.width(); ++x)
      for (int k = 0; k < c; ++k)
        px[(static_cast<std::size_t>(y) * image.width() + x) * c + k] = to_u8(image(k, y, x));
  write_rows(path, image.width(), image.height(), c == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, px, c);
}

void write_png_mask(const std::filesystem::path& path, const Grid<float>& mask) {
  std::vector<std::uint8_t> px(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) px[i] = to_u8(mask.data()[i]);
  write_rows(path, mask.width(), mask.height(), PNG_COLOR_TYPE_GRAY, px, 1);
}

Image read_png(const std::filesystem::path& path) {
  int w = 0;
  int h = 0;
  const auto px = read_rows(path, false, w, h);
  Image image(3, h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int k = 0; k < 3; ++k)
        image(k, y, x) = static_cast<float>(px[(static_cast<std::size_t>(y) * w + x) * 3 + k]) / 255.0f;
  return image;
}

Grid<float> read_png_mask(const std::filesystem::path& path) {
  int w = 0;
  int h = 0;
  const auto px = read_rows(path, true, w, h);
  Grid<float> mask(h, w);
  for (std::size_t i = 0; i < px.size(); ++i) mask.data()[i] = static_cast<float>(px[i]) / 255.0f;
  return mask;
}

}  // namespace tvsn
