#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "networld/util/require.hpp"

namespace networld::util {

// Raw float32 blob IO, always little-endian on disk.

inline void write_f32_stream(std::ostream& os, const float* data, size_t n) {
  static_assert(sizeof(float) == 4);
  if constexpr (std::endian::native == std::endian::little) {
    os.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n * 4));
  } else {
    for (size_t i = 0; i < n; ++i) {
      std::uint32_t u;
      std::memcpy(&u, data + i, 4);
      const char b[4] = {static_cast<char>(u & 0xff), static_cast<char>((u >> 8) & 0xff),
                         static_cast<char>((u >> 16) & 0xff), static_cast<char>((u >> 24) & 0xff)};
      os.write(b, 4);
    }
  }
}

inline void read_f32_stream(std::istream& is, float* data, size_t n) {
  if constexpr (std::endian::native == std::endian::little) {
    is.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(n * 4));
  } else {
    for (size_t i = 0; i < n; ++i) {
      unsigned char b[4];
      is.read(reinterpret_cast<char*>(b), 4);
      const std::uint32_t u = static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
                              (static_cast<std::uint32_t>(b[2]) << 16) |
                              (static_cast<std::uint32_t>(b[3]) << 24);
      std::memcpy(data + i, &u, 4);
    }
  }
}

inline void save_f32_file(const std::string& path, const std::vector<float>& v) {
  std::ofstream os(path, std::ios::binary);
  require(os.good(), "cannot open '", path, "' for writing");
  write_f32_stream(os, v.data(), v.size());
  require(os.good(), "write to '", path, "' failed");
}

inline std::vector<float> load_f32_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary | std::ios::ate);
  require(is.good(), "cannot open '", path, "'");
  const auto bytes = static_cast<std::uint64_t>(is.tellg());
  require(bytes % 4 == 0, "'", path, "' is not a float32 blob (", bytes, " bytes)");
  is.seekg(0);
  std::vector<float> v(bytes / 4);
  read_f32_stream(is, v.data(), v.size());
  require(is.good(), "read from '", path, "' failed");
  return v;
}

}  // namespace networld::util
