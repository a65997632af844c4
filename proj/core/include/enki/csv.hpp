#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace enki {

/// Minimal CSV writer: RFC-4180 quoting, '.' decimal separator, floats at
/// 17 significant digits so round-trips are bit-exact.
class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out) : out_(out) {}

  void write_row(const std::vector<std::string>& fields);

  static std::string format(double value);
  static std::string format(long long value);
  static std::string format(int value);
  static std::string quote(const std::string& field);

 private:
  std::ostream& out_;
};

}  // namespace enki
