#include "networld/util/kv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "networld/util/require.hpp"

namespace networld::util {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void KvDoc::set(const std::string& key, const std::string& value) {
  for (auto& [k, v] : items_) {
    if (k == key) {
      v = value;
      return;
    }
  }
  items_.emplace_back(key, value);
}

void KvDoc::set(const std::string& key, std::int64_t value) { set(key, std::to_string(value)); }
void KvDoc::set(const std::string& key, std::uint64_t value) { set(key, std::to_string(value)); }
void KvDoc::set(const std::string& key, double value) { set(key, format_double(value)); }
void KvDoc::set(const std::string& key, bool value) { set(key, std::string(value ? "true" : "false")); }

bool KvDoc::has(const std::string& key) const { return find(key).has_value(); }

std::optional<std::string> KvDoc::find(const std::string& key) const {
  for (const auto& [k, v] : items_) {
    if (k == key) return v;
  }
  return std::nullopt;
}

std::string KvDoc::get_string(const std::string& key) const {
  auto v = find(key);
  require(v.has_value(), "missing key '", key, "' in configuration document");
  return *v;
}

std::int64_t KvDoc::get_int(const std::string& key) const {
  const std::string v = get_string(key);
  try {
    size_t pos = 0;
    const std::int64_t out = std::stoll(v, &pos);
    require(pos == v.size(), "trailing characters");
    return out;
  } catch (const std::exception&) {
    fail("key '", key, "' is not an integer: '", v, "'");
  }
}

std::uint64_t KvDoc::get_uint(const std::string& key) const {
  const std::string v = get_string(key);
  try {
    size_t pos = 0;
    const std::uint64_t out = std::stoull(v, &pos);
    require(pos == v.size(), "trailing characters");
    return out;
  } catch (const std::exception&) {
    fail("key '", key, "' is not an unsigned integer: '", v, "'");
  }
}

double KvDoc::get_double(const std::string& key) const {
  const std::string v = get_string(key);
  try {
    size_t pos = 0;
    const double out = std::stod(v, &pos);
    require(pos == v.size(), "trailing characters");
    return out;
  } catch (const std::exception&) {
    fail("key '", key, "' is not a number: '", v, "'");
  }
}

bool KvDoc::get_bool(const std::string& key) const {
  const std::string v = get_string(key);
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  fail("key '", key, "' is not a boolean: '", v, "'");
}

std::string KvDoc::get_string(const std::string& key, const std::string& fallback) const {
  auto v = find(key);
  return v ? *v : fallback;
}

std::int64_t KvDoc::get_int(const std::string& key, std::int64_t fallback) const {
  return has(key) ? get_int(key) : fallback;
}

double KvDoc::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

bool KvDoc::get_bool(const std::string& key, bool fallback) const {
  return has(key) ? get_bool(key) : fallback;
}

std::string KvDoc::serialize() const {
  std::ostringstream os;
  for (const auto& [k, v] : items_) os << k << " = " << v << "\n";
  return os.str();
}

KvDoc KvDoc::parse(const std::string& text) {
  KvDoc doc;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    require(eq != std::string::npos, "malformed key-value line ", lineno, ": '", t, "'");
    const std::string key = trim(t.substr(0, eq));
    require(!key.empty(), "empty key on line ", lineno);
    doc.set(key, trim(t.substr(eq + 1)));
  }
  return doc;
}

void KvDoc::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "cannot open '", path, "' for writing");
  out << serialize();
  require(out.good(), "write to '", path, "' failed");
}

KvDoc KvDoc::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot open '", path, "'");
  std::ostringstream os;
  os << in.rdbuf();
  return parse(os.str());
}

}  // namespace networld::util
