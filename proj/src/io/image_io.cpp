// SPDX-License-Identifier: Apache-2.0
#include "hig/io/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

#include <png.h>

#include "hig/io/binary.hpp"

namespace hig::io {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

void write_png(const Image& image, const std::filesystem::path& path) {
  if (image.channels != 3) throw Error("write_png: expected 3 channels");
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw Error("cannot open " + path.string() + " for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) throw Error("libpng initialisation failed");
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error("libpng error while writing " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width),
               static_cast<png_uint_32>(image.height), 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_byte> row(image.width * 3);
  for (std::size_t y = 0; y < image.height; ++y) {
    for (std::size_t x = 0; x < image.width; ++x)
      for (std::size_t c = 0; c < 3; ++c) {
        const double v = std::clamp(static_cast<double>(image.at(c, y, x)), 0.0, 1.0);
        row[x * 3 + c] = static_cast<png_byte>(std::lround(v * 255.0));
      }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Image read_png(const std::filesystem::path& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw Error("cannot open " + path.string());
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) throw Error("libpng initialisation failed");
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error("libpng error while reading " + path.string());
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_set_palette_to_rgb(png);
  png_set_gray_to_rgb(png);
  png_read_update_info(png, info);
  Image img;
  img.width = png_get_image_width(png, info);
  img.height = png_get_image_height(png, info);
  img.data.assign(3 * img.width * img.height, 0);
  std::vector<png_byte> row(png_get_rowbytes(png, info));
  for (std::size_t y = 0; y < img.height; ++y) {
    png_read_row(png, row.data(), nullptr);
    for (std::size_t x = 0; x < img.width; ++x)
      for (std::size_t c = 0; c < 3; ++c) img.at(c, y, x) = Real(row[x * 3 + c]) / Real(255);
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

void write_raw(const Image& image, const std::filesystem::path& path) {
  BinaryWriter w;
  w.magic("HIGF");
  w.u32(3);
  w.u64(image.channels);
  w.u64(image.height);
  w.u64(image.width);
  w.f64_array(image.data);
  w.save(path);
}

Image read_raw(const std::filesystem::path& path) {
  auto r = BinaryReader::from_file(path, path.string());
  if (!r.expect_magic("HIGF")) throw Error(path.string() + ": not a raw float dump");
  if (r.u32() != 3) throw Error(path.string() + ": unexpected rank");
  Image img;
  img.channels = r.u64();
  img.height = r.u64();
  img.width = r.u64();
  img.data = r.f64_array(img.channels * img.height * img.width);
  if (!r.at_end()) throw Error(path.string() + ": trailing bytes");
  return img;
}

Image contact_sheet(const std::vector<Image>& images, std::size_t columns) {
  if (images.empty()) return {};
  columns = std::max<std::size_t>(1, std::min(columns, images.size()));
  const std::size_t rows = (images.size() + columns - 1) / columns;
  const std::size_t h = images[0].height, w = images[0].width;
  Image sheet;
  sheet.height = rows * (h + 1) + 1;
  sheet.width = columns * (w + 1) + 1;
  sheet.data.assign(3 * sheet.height * sheet.width, Real(1));
  for (std::size_t i = 0; i < images.size(); ++i) {
    const std::size_t oy = (i / columns) * (h + 1) + 1;
    const std::size_t ox = (i % columns) * (w + 1) + 1;
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) sheet.at(c, oy + y, ox + x) = images[i].at(c, y, x);
  }
  return sheet;
}

}  // namespace hig::io
