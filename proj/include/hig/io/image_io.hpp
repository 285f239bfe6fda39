// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <vector>

#include "hig/core/real.hpp"

namespace hig::io {

// Planar (C, H, W) image. Pixel values for PNG conversion live in [0, 1].
struct Image {
  std::size_t channels = 3;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<Real> data;

  Real& at(std::size_t c, std::size_t y, std::size_t x) { return data[(c * height + y) * width + x]; }
  Real at(std::size_t c, std::size_t y, std::size_t x) const {
    return data[(c * height + y) * width + x];
  }
};

// 8-bit RGB PNG; values are clamped to [0, 1] and rounded.
void write_png(const Image& image, const std::filesystem::path& path);
Image read_png(const std::filesystem::path& path);

// "HIGF" raw dump: magic, u32 rank (=3), u64 C, H, W, then f64 values.
void write_raw(const Image& image, const std::filesystem::path& path);
Image read_raw(const std::filesystem::path& path);

// Tiles images row-major into one sheet with a 1 px gap.
Image contact_sheet(const std::vector<Image>& images, std::size_t columns);

}  // namespace hig::io
