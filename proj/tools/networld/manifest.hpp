#pragma once

#include <ctime>
#include <filesystem>
#include <string>

#include "networld/util/kv.hpp"

#ifndef NETWORLD_VERSION
#define NETWORLD_VERSION "unknown"
#endif

namespace networld::cli {

// Appends run provenance to manifest.txt in the output directory, creating
// both if needed. Artifacts that keep their own layout keys in the same file
// (datasets do) survive: run state lives under the run. prefix and set()
// replaces rather than duplicates.
inline void write_manifest(const std::string& out_dir, const std::string& command,
                           const util::KvDoc& config) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const std::string path = (fs::path(out_dir) / "manifest.txt").string();

  util::KvDoc doc;
  if (fs::exists(path)) doc = util::KvDoc::load(path);
  doc.set("run.command", command);
  doc.set("run.version", NETWORLD_VERSION);
  const std::time_t now = std::time(nullptr);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  doc.set("run.timestamp", stamp);
  for (const auto& [k, v] : config.items()) doc.set("run." + k, v);
  doc.save(path);
}

}  // namespace networld::cli
