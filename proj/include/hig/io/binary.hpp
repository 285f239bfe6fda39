// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "hig/core/real.hpp"

namespace hig::io {

// Little-endian byte sink used by every on-disk container.
class BinaryWriter {
 public:
  void bytes(const void* data, std::size_t n);
  void magic(std::string_view tag) { bytes(tag.data(), tag.size()); }
  void u8(std::uint8_t v) { bytes(&v, 1); }
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void f64(double v);
  void str(std::string_view s);
  void f64_array(const std::vector<Real>& values);

  const std::vector<std::uint8_t>& buffer() const { return buf_; }
  void save(const std::filesystem::path& path) const;

 private:
  std::vector<std::uint8_t> buf_;
};

// Bounds-checked reader; every short read raises `Error` mentioning `what_`.
class BinaryReader {
 public:
  BinaryReader(std::vector<std::uint8_t> data, std::string what)
      : data_(std::move(data)), what_(std::move(what)) {}
  static BinaryReader from_file(const std::filesystem::path& path, std::string what);

  bool expect_magic(std::string_view tag);
  std::uint8_t u8();
  std::uint32_t u32();
  std::uint64_t u64();
  double f64();
  std::string str();
  std::vector<Real> f64_array(std::size_t count);
  bool at_end() const { return pos_ == data_.size(); }
  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  void need(std::size_t n);
  std::vector<std::uint8_t> data_;
  std::string what_;
  std::size_t pos_ = 0;
};

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
std::string sha256_hex(const std::vector<std::uint8_t>& data);
std::string sha256_file(const std::filesystem::path& path);

}  // namespace hig::io
