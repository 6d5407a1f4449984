#include "wbt/rl/curve.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "wbt/core/errors.hpp"

namespace wbt::rl {

CurveWriter::CurveWriter(const std::string& path, std::vector<std::string> columns) : columns_(std::move(columns)) {
  if (path.empty()) return;
  out_.open(path, std::ios::trunc);
  if (!out_) throw DataError("cannot write curve " + path);
  for (size_t i = 0; i < columns_.size(); ++i) out_ << (i ? "," : "") << columns_[i];
  out_ << "\n";
}

void CurveWriter::Row(const std::vector<double>& values) {
  if (values.size() != columns_.size()) throw std::invalid_argument("curve row has the wrong number of cells");
  if (!out_.is_open()) return;
  for (size_t i = 0; i < values.size(); ++i) out_ << (i ? "," : "") << FormatCell(values[i]);
  out_ << "\n";
  out_.flush();
}

std::string FormatCell(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace wbt::rl
