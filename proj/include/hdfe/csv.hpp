#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <vector>

namespace hdfe {

// Column-oriented CSV table; every cell is kept as its raw string.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> columns;

  std::size_t rows() const { return columns.empty() ? 0 : columns[0].size(); }
  std::size_t column_index(const std::string& name) const;
  const std::vector<std::string>& column(const std::string& name) const;
  Eigen::VectorXd numeric(const std::string& name) const;
};

CsvTable read_csv(std::istream& in);
CsvTable read_csv_file(const std::string& path);

void write_csv(std::ostream& out, const CsvTable& table);
void write_csv_file(const std::string& path, const CsvTable& table);

// Shortest round-trippable decimal form.
std::string format_double(double v);

}  // namespace hdfe
