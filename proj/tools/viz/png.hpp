#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace networld::viz {

// 8-bit RGB raster with a white background. Out-of-range writes are dropped,
// so drawing code never carries its own clipping.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;  // row-major, 3 bytes per pixel

  Image(int w, int h);

  void set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    if (x < 0 || y < 0 || x >= width || y >= height) return;
    const size_t i = (static_cast<size_t>(y) * width + x) * 3;
    rgb[i] = r;
    rgb[i + 1] = g;
    rgb[i + 2] = b;
  }
};

// Truecolor 8-bit PNG: unfiltered scanlines in a single zlib stream.
std::vector<std::uint8_t> encode_png(const Image& img);
void write_png(const Image& img, const std::string& path);

}  // namespace networld::viz
