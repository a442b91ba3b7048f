#pragma once

#include <string>
#include <vector>

namespace homokin {

// Flat numeric table with named columns, first column conventionally "t".
// All CSV emitted by the toolkit goes through this so that identical runs
// produce byte-identical files.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  std::size_t col_index(const std::string& name) const;  // throws Error if absent
  std::vector<double> column(const std::string& name) const;
  void append(std::vector<double> row);
};

std::string format_double(double v);  // shortest round-trip-exact decimal

void save_table_csv(const std::string& path, const Table& t);
Table load_table_csv(const std::string& path);

}  // namespace homokin
