#pragma once

#include <fstream>
#include <string>
#include <vector>

namespace wbt::rl {

/// Comma-separated training curve: a header row, then one row per call.
class CurveWriter {
 public:
  CurveWriter() = default;
  /// Empty path: rows are dropped.
  CurveWriter(const std::string& path, std::vector<std::string> columns);

  void Row(const std::vector<double>& values);
  const std::vector<std::string>& columns() const { return columns_; }

 private:
  std::ofstream out_;
  std::vector<std::string> columns_;
};

/// Fixed-precision text for CSV cells ("nan" for NaN).
std::string FormatCell(double v);

}  // namespace wbt::rl
