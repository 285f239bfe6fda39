// SPDX-License-Identifier: Apache-2.0
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "hig/io/binary.hpp"
#include "hig/io/checkpoint.hpp"
#include "hig/io/image_io.hpp"
#include "hig/io/kv_config.hpp"
#include "hig/core/random.hpp"

using namespace hig;
namespace fs = std::filesystem;

TEST_SUITE("io") {
  TEST_CASE("raw image dumps are lossless") {
    const auto dir = fs::temp_directory_path() / "hig_io_test";
    fs::create_directories(dir);
    Rng rng(1);
    io::Image im;
    im.height = 3;
    im.width = 5;
    im.data = rng.normal_vector(45);
    io::write_raw(im, dir / "x.hgf");
    const auto back = io::read_raw(dir / "x.hgf");
    CHECK(back.data == im.data);
    CHECK(back.width == 5);

    for (auto& v : im.data) v = rng.uniform();
    io::write_png(im, dir / "x.png");
    const auto png = io::read_png(dir / "x.png");
    for (std::size_t i = 0; i < im.data.size(); ++i) CHECK(std::abs(png.data[i] - im.data[i]) <= 0.5 / 255 + 1e-12);
    fs::remove_all(dir);
  }

  TEST_CASE("checkpoint round trip") {
    const auto path = fs::temp_directory_path() / "hig_ckpt_test.hgw";
    io::TensorMap m;
    m.emplace("a.w", DiffArray::constant({2, 3}, {1, 2, 3, 4, 5, 6}));
    m.emplace("b", DiffArray::constant({1}, {-0.125}));
    io::save_checkpoint(m, path);
    const auto back = io::load_checkpoint(path);
    REQUIRE(back.size() == 2);
    CHECK(back.at("a.w").shape() == Shape{2, 3});
    CHECK(back.at("a.w").at(5) == 6);
    CHECK(back.at("b").at(0) == Real(-0.125));
    std::ofstream(path, std::ios::binary) << "garbage";
    CHECK_THROWS_AS(io::load_checkpoint(path), Error);
    fs::remove(path);
  }

  TEST_CASE("key-value config parsing") {
    const auto kv = io::parse_key_values("# comment\n a = 1 \nb=two # trailing\n\na = 3\n");
    CHECK(kv.size() == 2);
    CHECK(kv.at("a") == "3");
    CHECK(kv.at("b") == "two");
    CHECK_THROWS_AS(io::parse_key_values("novalue\n"), Error);
    io::KeyValues t{{"x", "12abc"}};
    int x = 0;
    CHECK_THROWS_AS(io::take(t, "x", x), Error);
  }

  TEST_CASE("sha256 of a known string") {
    const std::string s = "abc";
    CHECK(io::sha256_hex(std::vector<std::uint8_t>(s.begin(), s.end())) ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  }
}
