#pragma once

#include <chrono>
#include <sstream>
#include <string>

namespace networld::acceptance {

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

// "a=1.25, b=3" style detail strings without iostream noise at call sites.
class Detail {
 public:
  template <typename T>
  Detail& kv(const char* key, const T& value) {
    if (!first_) ss_ << ", ";
    first_ = false;
    ss_ << key << "=" << value;
    return *this;
  }
  Detail& text(const std::string& t) {
    if (!first_) ss_ << ", ";
    first_ = false;
    ss_ << t;
    return *this;
  }
  std::string str() const { return ss_.str(); }

 private:
  std::ostringstream ss_;
  bool first_ = true;
};

}  // namespace networld::acceptance
