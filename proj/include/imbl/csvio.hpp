// Minimal CSV emission with RFC-4180-style quoting.
#pragma once

#include <fstream>
#include <string>
#include <vector>

namespace imbl {

// Quotes a field iff it contains a comma, quote or newline.
std::string csv_escape(const std::string& field);

class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path);  // throws std::runtime_error on open failure
  void row(const std::vector<std::string>& cells);

  static std::string num(double v);  // shortest round-trip formatting
  static std::string num(long v);
  static std::string num(int v) { return num(static_cast<long>(v)); }

 private:
  std::ofstream out_;
};

}  // namespace imbl
