#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "networld/util/require.hpp"

namespace networld::util {

// Minimal CSV writer for numeric tables. Fields never need quoting here.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header) : out_(path, std::ios::binary) {
    require(out_.good(), "cannot open '", path, "' for writing");
    write_row(header);
  }

  void write_row(const std::vector<std::string>& fields) {
    for (size_t i = 0; i < fields.size(); ++i) {
      if (i) out_ << ',';
      out_ << fields[i];
    }
    out_ << '\n';
  }

  void flush() { out_.flush(); }

 private:
  std::ofstream out_;
};

std::vector<std::vector<std::string>> read_csv(const std::string& path);

std::string csv_double(double v);

}  // namespace networld::util
