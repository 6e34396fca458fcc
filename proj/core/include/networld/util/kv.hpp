#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace networld::util {

// Plain-text "key = value" document. Keys keep insertion order so that a
// serialized document is stable; parsing then re-serializing a document
// reproduces it byte for byte (modulo comments and whitespace).
class KvDoc {
 public:
  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, const char* value) { set(key, std::string(value)); }
  void set(const std::string& key, std::int64_t value);
  void set(const std::string& key, std::uint64_t value);
  void set(const std::string& key, int value) { set(key, static_cast<std::int64_t>(value)); }
  void set(const std::string& key, double value);
  void set(const std::string& key, bool value);

  bool has(const std::string& key) const;
  std::optional<std::string> find(const std::string& key) const;

  // Required getters throw with the missing/malformed key in the message.
  std::string get_string(const std::string& key) const;
  std::int64_t get_int(const std::string& key) const;
  std::uint64_t get_uint(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;

  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  const std::vector<std::pair<std::string, std::string>>& items() const { return items_; }

  std::string serialize() const;
  static KvDoc parse(const std::string& text);

  void save(const std::string& path) const;
  static KvDoc load(const std::string& path);

 private:
  std::vector<std::pair<std::string, std::string>> items_;
};

}  // namespace networld::util
