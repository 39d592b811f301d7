#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace multiamdahl::report {

struct Column {
  std::string name;
  std::string unit;  // empty when dimensionless
};

// Rectangular numeric table; every row must match the column count and hold
// only finite values.
struct Table {
  std::vector<Column> columns;
  std::vector<std::vector<double>> rows;
};

// Writes a CSV with one header row ("name" or "name (unit)"), values with 12
// significant digits, '.' decimal separator and LF line endings. Returns the
// number of bytes written. Output is byte-identical for identical tables.
std::size_t write_csv(const Table& t, const std::string& destination);

// 800x600 SVG line chart, one polyline per entry of y_cols against x_col.
// Requires at least two rows and a non-degenerate range on every axis.
std::size_t write_svg_line(const Table& t, const std::string& x_col,
                           const std::vector<std::string>& y_cols,
                           const std::string& destination);

// 800x600 SVG heatmap over the distinct sorted x and y values, z mapped
// through an 8-stop ramp from #440154 (low) to #fde725 (high).
std::size_t write_svg_heatmap(const Table& t, const std::string& x_col,
                              const std::string& y_col, const std::string& z_col,
                              const std::string& destination);

}  // namespace multiamdahl::report
