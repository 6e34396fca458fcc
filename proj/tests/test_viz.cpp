#include <zlib.h>

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "viz/chart.hpp"
#include "viz/png.hpp"

using networld::viz::Bar;
using networld::viz::Image;
using networld::viz::Rgb;
using networld::viz::Series;

namespace {

std::uint32_t be32(const std::vector<std::uint8_t>& b, size_t at) {
  return static_cast<std::uint32_t>(b[at]) << 24 | static_cast<std::uint32_t>(b[at + 1]) << 16 |
         static_cast<std::uint32_t>(b[at + 2]) << 8 | b[at + 3];
}

struct Chunk {
  std::string type;
  std::vector<std::uint8_t> data;
};

std::vector<Chunk> parse_chunks(const std::vector<std::uint8_t>& png) {
  std::vector<Chunk> out;
  size_t at = 8;  // past the signature
  while (at + 12 <= png.size()) {
    const std::uint32_t len = be32(png, at);
    Chunk c;
    c.type.assign(png.begin() + at + 4, png.begin() + at + 8);
    c.data.assign(png.begin() + at + 8, png.begin() + at + 8 + len);
    out.push_back(std::move(c));
    at += 12 + len;  // length + type + data + crc
  }
  return out;
}

bool has_color(const Image& img, Rgb c) {
  for (size_t i = 0; i + 2 < img.rgb.size(); i += 3)
    if (img.rgb[i] == c.r && img.rgb[i + 1] == c.g && img.rgb[i + 2] == c.b) return true;
  return false;
}

int count_color(const Image& img, Rgb c) {
  int n = 0;
  for (size_t i = 0; i + 2 < img.rgb.size(); i += 3)
    if (img.rgb[i] == c.r && img.rgb[i + 1] == c.g && img.rgb[i + 2] == c.b) ++n;
  return n;
}

}  // namespace

TEST_SUITE("viz") {

TEST_CASE("encoded images decode back to the exact framebuffer") {
  Image img(23, 11);  // odd sizes catch stride bugs
  networld::viz::draw_line(img, 0, 0, 22, 10, {10, 200, 30});
  networld::viz::draw_text(img, 1, 1, "ok", {0, 0, 0});
  img.set(22, 10, 1, 2, 3);

  const std::vector<std::uint8_t> png = networld::viz::encode_png(img);

  // Fixed eight-byte signature.
  const std::uint8_t sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  REQUIRE(png.size() > 8);
  for (size_t i = 0; i < 8; ++i) CHECK(png[i] == sig[i]);

  const std::vector<Chunk> chunks = parse_chunks(png);
  REQUIRE(chunks.size() >= 3);
  CHECK(chunks.front().type == "IHDR");
  CHECK(chunks.back().type == "IEND");
  CHECK(chunks.back().data.empty());

  const Chunk& ihdr = chunks.front();
  REQUIRE(ihdr.data.size() == 13);
  CHECK(be32(ihdr.data, 0) == 23);   // width
  CHECK(be32(ihdr.data, 4) == 11);   // height
  CHECK(ihdr.data[8] == 8);          // bit depth
  CHECK(ihdr.data[9] == 2);          // truecolor
  CHECK(ihdr.data[10] == 0);         // deflate
  CHECK(ihdr.data[12] == 0);         // not interlaced

  std::vector<std::uint8_t> stream;
  for (const Chunk& c : chunks)
    if (c.type == "IDAT") stream.insert(stream.end(), c.data.begin(), c.data.end());
  REQUIRE(!stream.empty());

  // Unfiltered scanlines: one filter byte then the raw row.
  const size_t row = 1 + 3 * 23;
  std::vector<std::uint8_t> raw(row * 11);
  uLongf raw_len = raw.size();
  REQUIRE(uncompress(raw.data(), &raw_len, stream.data(), stream.size()) == Z_OK);
  REQUIRE(raw_len == raw.size());
  for (int y = 0; y < 11; ++y) {
    CHECK(raw[y * row] == 0);
    for (size_t i = 0; i < row - 1; ++i)
      REQUIRE(raw[y * row + 1 + i] == img.rgb[y * (row - 1) + i]);
  }
}

TEST_CASE("pixel text lands inside its advance box and nowhere else") {
  Image img(40, 12);
  networld::viz::draw_text(img, 2, 2, "A", {0, 0, 0});
  CHECK(networld::viz::text_width("A") == 5);
  CHECK(networld::viz::text_width("ab") == 11);
  CHECK(networld::viz::text_width("ab", 2) == 22);
  CHECK(networld::viz::text_width("") == 0);

  int inked = 0;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      const size_t i = (static_cast<size_t>(y) * img.width + x) * 3;
      if (img.rgb[i] == 255) continue;
      ++inked;
      CHECK(x >= 2);
      CHECK(x < 7);   // 5 columns per glyph
      CHECK(y >= 2);
      CHECK(y < 9);   // 7 rows per glyph
    }
  CHECK(inked > 5);  // 'A' is more than a sliver

  // Out-of-range writes are dropped, not wrapped onto other rows.
  Image tiny(4, 4);
  tiny.set(-1, 0, 0, 0, 0);
  tiny.set(0, -1, 0, 0, 0);
  tiny.set(4, 0, 0, 0, 0);
  tiny.set(0, 4, 0, 0, 0);
  for (const std::uint8_t v : tiny.rgb) CHECK(v == 255);
}

TEST_CASE("curve charts draw every series in its palette color") {
  Series a{"alpha", {0, 1, 2, 3}, {0.0, 1.0, 0.5, 2.0}};
  Series b{"beta", {0, 1, 2, 3}, {2.0, 1.5, 1.0, 0.0}};
  const Image img = networld::viz::render_curves(320, 200, "losses", "step", "loss", {a, b});
  CHECK(img.width == 320);
  CHECK(img.height == 200);
  CHECK(has_color(img, networld::viz::palette(0)));
  CHECK(has_color(img, networld::viz::palette(1)));
  CHECK(count_color(img, {40, 40, 40}) > 50);    // axes, ticks, labels
  CHECK(count_color(img, {225, 225, 225}) > 50);  // gridlines

  // A single-point series still leaves a visible dot.
  const Image dot =
      networld::viz::render_curves(160, 120, "", "", "", {Series{"p", {1.0}, {5.0}}});
  CHECK(count_color(dot, networld::viz::palette(0)) >= 9);

  CHECK_THROWS_WITH_AS(networld::viz::render_curves(100, 100, "", "", "", {}),
                       doctest::Contains("nothing to plot"), std::runtime_error);
  CHECK_THROWS_WITH_AS(
      networld::viz::render_curves(100, 100, "", "", "", {Series{"bad", {1, 2}, {1}}}),
      doctest::Contains("must pair every x with a y"), std::runtime_error);
}

TEST_CASE("bar charts hang negative bars below the zero baseline") {
  const Image img = networld::viz::render_bars(320, 200, "reward", "r", {{"up", 2.0},
                                                                         {"down", -1.0}});
  const Rgb c0 = networld::viz::palette(0);
  const Rgb c1 = networld::viz::palette(1);
  REQUIRE(has_color(img, c0));
  REQUIRE(has_color(img, c1));

  // Every pixel of the positive bar sits above every pixel of the negative one.
  int lowest_up = 0, highest_down = img.height;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      const size_t i = (static_cast<size_t>(y) * img.width + x) * 3;
      const Rgb px{img.rgb[i], img.rgb[i + 1], img.rgb[i + 2]};
      if (px.r == c0.r && px.g == c0.g && px.b == c0.b) lowest_up = std::max(lowest_up, y);
      if (px.r == c1.r && px.g == c1.g && px.b == c1.b) highest_down = std::min(highest_down, y);
    }
  CHECK(lowest_up < highest_down);

  CHECK_THROWS_WITH_AS(networld::viz::render_bars(100, 100, "", "", {}),
                       doctest::Contains("nothing to plot"), std::runtime_error);
}

}  // TEST_SUITE
