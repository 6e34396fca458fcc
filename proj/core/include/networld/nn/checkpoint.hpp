#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "networld/nn/layers.hpp"
#include "networld/util/kv.hpp"

namespace networld::nn {

// Checkpoint layout: a human-readable text header followed by one raw
// little-endian float32 payload.
//
//   networld-checkpoint v1
//   meta <n_meta_lines>
//   <key = value>            (n_meta_lines times)
//   tensors <n_tensors>
//   <name> <ndim> <dims...> <offset_in_floats>
//   payload <total_floats>
//   <binary float32 data>
//
// Values are stored as float32 regardless of the in-memory scalar type.

namespace detail {

inline void write_f32(std::ostream& os, const std::vector<float>& buf) {
  static_assert(sizeof(float) == 4);
  if constexpr (std::endian::native == std::endian::little) {
    os.write(reinterpret_cast<const char*>(buf.data()),
             static_cast<std::streamsize>(buf.size() * sizeof(float)));
  } else {
    for (float f : buf) {
      uint32_t u;
      std::memcpy(&u, &f, 4);
      char b[4] = {static_cast<char>(u & 0xff), static_cast<char>((u >> 8) & 0xff),
                   static_cast<char>((u >> 16) & 0xff), static_cast<char>((u >> 24) & 0xff)};
      os.write(b, 4);
    }
  }
}

inline void read_f32(std::istream& is, std::vector<float>& buf) {
  if constexpr (std::endian::native == std::endian::little) {
    is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
  } else {
    for (float& f : buf) {
      unsigned char b[4];
      is.read(reinterpret_cast<char*>(b), 4);
      const uint32_t u = static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
                         (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
      std::memcpy(&f, &u, 4);
    }
  }
}

}  // namespace detail

template <typename S>
void save_checkpoint(ParamStore<S>& store, const std::string& path, const util::KvDoc& meta = {}) {
  std::ofstream os(path, std::ios::binary);
  util::require(os.good(), "cannot open checkpoint for writing: ", path);
  const std::string meta_text = meta.serialize();
  size_t meta_lines = 0;
  for (char c : meta_text)
    if (c == '\n') ++meta_lines;
  os << "networld-checkpoint v1\n";
  os << "meta " << meta_lines << "\n" << meta_text;
  auto params = store.all();
  os << "tensors " << params.size() << "\n";
  Index offset = 0;
  for (const Parameter<S>* p : params) {
    os << p->name << " " << p->value.ndim();
    for (Index d = 0; d < p->value.ndim(); ++d) os << " " << p->value.size(d);
    os << " " << offset << "\n";
    offset += p->value.numel();
  }
  os << "payload " << offset << "\n";
  std::vector<float> buf;
  buf.reserve(static_cast<size_t>(offset));
  for (const Parameter<S>* p : params)
    for (Index i = 0; i < p->value.numel(); ++i) buf.push_back(static_cast<float>(p->value[i]));
  detail::write_f32(os, buf);
  util::require(os.good(), "write failure while saving checkpoint: ", path);
}

// Reads only the meta block, so a model can be sized before its parameters
// are constructed.
inline util::KvDoc peek_checkpoint_meta(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  util::require(is.good(), "cannot open checkpoint: ", path);
  std::string line;
  std::getline(is, line);
  util::require(line == "networld-checkpoint v1", path, ": not a checkpoint file (bad magic: '", line, "')");
  std::getline(is, line);
  std::istringstream hs(line);
  std::string tag;
  size_t meta_lines = 0;
  hs >> tag >> meta_lines;
  util::require(tag == "meta", path, ": malformed checkpoint header");
  std::string meta_text;
  for (size_t i = 0; i < meta_lines; ++i) {
    std::getline(is, line);
    meta_text += line;
    meta_text += '\n';
  }
  return util::KvDoc::parse(meta_text);
}

// Loads parameter values into an already-constructed store. The file must
// contain exactly the store's parameters with matching shapes. Returns the
// checkpoint's meta block.
template <typename S>
util::KvDoc load_checkpoint(ParamStore<S>& store, const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  util::require(is.good(), "cannot open checkpoint: ", path);
  std::string line;
  std::getline(is, line);
  util::require(line == "networld-checkpoint v1", path, ": not a checkpoint file (bad magic: '", line, "')");
  std::getline(is, line);
  {
    std::istringstream hs(line);
    std::string tag;
    size_t meta_lines = 0;
    hs >> tag >> meta_lines;
    util::require(tag == "meta", path, ": malformed checkpoint header");
    std::string meta_text;
    for (size_t i = 0; i < meta_lines; ++i) {
      std::getline(is, line);
      meta_text += line;
      meta_text += '\n';
    }
    util::KvDoc meta = util::KvDoc::parse(meta_text);

    std::getline(is, line);
    std::istringstream ts(line);
    size_t n_tensors = 0;
    ts >> tag >> n_tensors;
    util::require(tag == "tensors", path, ": malformed checkpoint header");
    util::require(n_tensors == store.count(), path, ": checkpoint has ", n_tensors,
                  " tensors but the model defines ", store.count());

    struct Entry {
      std::string name;
      Shape shape;
      Index offset;
    };
    std::vector<Entry> entries;
    entries.reserve(n_tensors);
    for (size_t i = 0; i < n_tensors; ++i) {
      std::getline(is, line);
      std::istringstream es(line);
      Entry e;
      Index ndim = 0;
      es >> e.name >> ndim;
      util::require(!es.fail() && ndim >= 0, path, ": malformed tensor entry: '", line, "'");
      e.shape.resize(static_cast<size_t>(ndim));
      for (Index d = 0; d < ndim; ++d) es >> e.shape[static_cast<size_t>(d)];
      es >> e.offset;
      util::require(!es.fail(), path, ": malformed tensor entry: '", line, "'");
      entries.push_back(std::move(e));
    }
    std::getline(is, line);
    std::istringstream ps(line);
    Index total = 0;
    ps >> tag >> total;
    util::require(tag == "payload", path, ": malformed checkpoint header");
    std::vector<float> buf(static_cast<size_t>(total));
    detail::read_f32(is, buf);
    util::require(is.good(), path, ": truncated checkpoint payload");

    for (const Entry& e : entries) {
      Parameter<S>* p = store.find(e.name);
      util::require(p != nullptr, path, ": checkpoint tensor '", e.name,
                    "' does not exist in the model");
      util::require(p->value.shape() == e.shape, path, ": shape mismatch for '", e.name,
                    "': checkpoint ", shape_str(e.shape), " vs model ", shape_str(p->value.shape()));
      util::require(e.offset >= 0 && e.offset + p->value.numel() <= total, path,
                    ": tensor '", e.name, "' payload range out of bounds");
      for (Index i = 0; i < p->value.numel(); ++i)
        p->value[i] = static_cast<S>(buf[static_cast<size_t>(e.offset + i)]);
    }
    return meta;
  }
}

}  // namespace networld::nn
