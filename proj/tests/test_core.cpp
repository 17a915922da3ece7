#include "doctest.h"

#include <fstream>

#include "support.hpp"
#include "tvsn/core/error.hpp"
#include "tvsn/core/image_io.hpp"
#include "tvsn/core/tensor_file.hpp"

using namespace tvsn;

TEST_CASE("exit codes follow the scripting contract") {
  CHECK(exit_code(ErrorKind::Parameter) == 2);
  CHECK(exit_code(ErrorKind::Shape) == 2);
  CHECK(exit_code(ErrorKind::State) == 3);
  CHECK(exit_code(ErrorKind::Io) == 4);
}

TEST_CASE("tensor container round-trips entries and metadata bitwise") {
  testing::TempDir dir("core");
  TensorFile f;
  f.meta = R"({"k":1})";
  f.add("a", {2, 3}, {1, 2, 3, 4, 5, -6.5f});
  f.add("b", {1}, {std::numeric_limits<float>::denorm_min()});
  write_tensor_file(dir / "x.tvsn", f);
  const TensorFile g = read_tensor_file(dir / "x.tvsn");
  CHECK(g.meta == f.meta);
  REQUIRE(g.entries.size() == 2);
  CHECK(g.at("a").dims == std::vector<std::uint32_t>{2, 3});
  CHECK(g.at("a").data == f.at("a").data);
  CHECK(g.at("b").data == f.at("b").data);
  CHECK_THROWS_AS(g.at("missing"), Error);
}

TEST_CASE("tensor container rejects mismatched payloads and foreign files") {
  testing::TempDir dir("core");
  TensorFile f;
  CHECK_THROWS_AS(f.add("bad", {2, 2}, {1, 2, 3}), Error);
  {
    std::ofstream out(dir / "junk.tvsn");
    out << "JUNKJUNK";
  }
  try {
    read_tensor_file(dir / "junk.tvsn");
    FAIL("expected a format error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Format);
  }
  f.add("a", {4}, {1, 2, 3, 4});
  write_tensor_file(dir / "t.tvsn", f);
  std::filesystem::resize_file(dir / "t.tvsn", std::filesystem::file_size(dir / "t.tvsn") - 3);
  CHECK_THROWS_AS(read_tensor_file(dir / "t.tvsn"), Error);
  try {
    read_tensor_file(dir / "absent.tvsn");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Io);
  }
}

TEST_CASE("PNG round trip equals 8-bit quantization") {
  testing::TempDir dir("core");
  const Image img = testing::random_image(3, 5, 7, 3);
  write_png(dir / "a.png", img);
  const Image back = read_png(dir / "a.png");
  REQUIRE(back.same_size(img));
  for (std::size_t i = 0; i < img.size(); ++i) CHECK(back.data()[i] == quantize_u8(img.data()[i]));

  Grid<float> mask(4, 4, 0.0f);
  mask(1, 2) = 1.0f;
  write_png_mask(dir / "m.png", mask);
  CHECK(read_png_mask(dir / "m.png") == mask);
}

TEST_CASE("quantization clamps and rounds to the nearest step") {
  CHECK(quantize_u8(-0.3f) == 0.0f);
  CHECK(quantize_u8(1.7f) == 1.0f);
  CHECK(quantize_u8(0.5f) == 128.0f / 255.0f);
}
