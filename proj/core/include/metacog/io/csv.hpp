#pragma once

#include <Eigen/Dense>
#include <fstream>
#include <string>
#include <vector>

#include "metacog/errors.hpp"

namespace metacog::io {

/// Byte-stable numeric formatting shared by every artifact CSV:
/// 17 significant digits, '.' decimal separator, no locale influence.
std::string format_number(double v);

/// Writes rows with '\n' line endings and the fixed numeric format.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);

  void row(const std::vector<double>& values);
  /// Mixed row: numbers already formatted plus free-text cells.
  void raw_row(const std::vector<std::string>& cells);

 private:
  std::ofstream out_;
  std::size_t columns_;
  std::string path_;
};

}  // namespace metacog::io
