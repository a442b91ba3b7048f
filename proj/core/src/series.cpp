#include "homokin/series.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "homokin/errors.hpp"

namespace homokin {

std::size_t Table::col_index(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return i;
  throw Error("table has no column '" + name + "'");
}

std::vector<double> Table::column(const std::string& name) const {
  const std::size_t i = col_index(name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r[i]);
  return out;
}

void Table::append(std::vector<double> row) {
  if (row.size() != columns.size())
    throw Error("row width " + std::to_string(row.size()) + " does not match " +
                std::to_string(columns.size()) + " columns");
  rows.push_back(std::move(row));
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void save_table_csv(const std::string& path, const Table& t) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path + " for writing");
  for (std::size_t i = 0; i < t.columns.size(); ++i)
    os << (i ? "," : "") << t.columns[i];
  os << "\n";
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i)
      os << (i ? "," : "") << format_double(row[i]);
    os << "\n";
  }
}

Table load_table_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open " + path);
  Table t;
  std::string line;
  if (!std::getline(is, line)) throw Error("empty table file " + path);
  std::istringstream hs(line);
  std::string tok;
  while (std::getline(hs, tok, ',')) t.columns.push_back(tok);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::vector<double> row;
    while (std::getline(ss, tok, ',')) row.push_back(std::stod(tok));
    t.append(std::move(row));
  }
  return t;
}

}  // namespace homokin
