#include "png.hpp"

#include <zlib.h>

#include <fstream>

#include "networld/util/require.hpp"

namespace networld::viz {
namespace {

void put_u32_be(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

void put_chunk(std::vector<std::uint8_t>& out, const char type[4],
               const std::vector<std::uint8_t>& data) {
  put_u32_be(out, static_cast<std::uint32_t>(data.size()));
  const size_t start = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), data.begin(), data.end());
  const auto crc = crc32(0L, out.data() + start, static_cast<uInt>(out.size() - start));
  put_u32_be(out, static_cast<std::uint32_t>(crc));
}

}  // namespace

Image::Image(int w, int h) : width(w), height(h) {
  networld::util::require(w > 0 && h > 0, "image size must be positive, got ", w, "x", h);
  rgb.assign(static_cast<size_t>(w) * h * 3, 255);
}

std::vector<std::uint8_t> encode_png(const Image& img) {
  // Each scanline gets a leading filter byte (0 = none).
  const size_t stride = static_cast<size_t>(img.width) * 3;
  std::vector<std::uint8_t> raw((stride + 1) * img.height);
  for (int y = 0; y < img.height; ++y) {
    raw[y * (stride + 1)] = 0;
    std::copy(img.rgb.begin() + y * stride, img.rgb.begin() + (y + 1) * stride,
              raw.begin() + y * (stride + 1) + 1);
  }

  uLongf zlen = compressBound(static_cast<uLong>(raw.size()));
  std::vector<std::uint8_t> zdata(zlen);
  const int rc = compress2(zdata.data(), &zlen, raw.data(), static_cast<uLong>(raw.size()), 6);
  networld::util::require(rc == Z_OK, "zlib compression failed with code ", rc);
  zdata.resize(zlen);

  std::vector<std::uint8_t> out = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  std::vector<std::uint8_t> ihdr;
  put_u32_be(ihdr, static_cast<std::uint32_t>(img.width));
  put_u32_be(ihdr, static_cast<std::uint32_t>(img.height));
  ihdr.push_back(8);  // bit depth
  ihdr.push_back(2);  // truecolor
  ihdr.push_back(0);  // deflate
  ihdr.push_back(0);  // adaptive filtering
  ihdr.push_back(0);  // no interlace
  put_chunk(out, "IHDR", ihdr);
  put_chunk(out, "IDAT", zdata);
  put_chunk(out, "IEND", {});
  return out;
}

void write_png(const Image& img, const std::string& path) {
  const auto bytes = encode_png(img);
  std::ofstream f(path, std::ios::binary);
  networld::util::require(f.good(), "cannot open '", path, "' for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  networld::util::require(f.good(), "short write to '", path, "'");
}

}  // namespace networld::viz
