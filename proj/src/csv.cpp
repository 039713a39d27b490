#include "pelab/csv.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "pelab/errors.hpp"

namespace pelab::csv {

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Writer::Writer(const std::string& path, const std::vector<std::string>& header)
    : path_(path), out_(path) {
  if (!out_) throw IoError("cannot open '" + path + "' for writing");
  std::string line;
  bool first = true;
  for (const auto& h : header) append(line, first, h);
  write_line(line);
}

void Writer::row_values(std::string_view leading, const std::vector<double>& values) {
  std::string line(leading);
  bool first = leading.empty();
  for (double v : values) append(line, first, v);
  write_line(line);
}

void Writer::write_line(const std::string& line) {
  out_ << line << '\n';
  if (!out_) throw IoError("write failed for '" + path_ + "'");
}

void Writer::close() {
  out_.flush();
  if (!out_) throw IoError("write failed for '" + path_ + "'");
  out_.close();
}

std::size_t Table::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw LoadError("csv: no column '" + std::string(name) + "'");
}

double Table::real(std::size_t r, std::size_t c) const {
  const std::string& cell = rows.at(r).at(c);
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(cell.c_str(), &end);
  if (end == cell.c_str() || *end != '\0' || errno == ERANGE)
    throw LoadError("csv: '" + cell + "' is not a number");
  return v;
}

Table read(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
  };
  Table t;
  std::string line;
  if (!std::getline(in, line)) throw LoadError("csv: '" + path + "' is empty");
  t.header = split(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() != t.header.size())
      throw LoadError("csv: ragged row in '" + path + "'");
    t.rows.push_back(std::move(cells));
  }
  return t;
}

}  // namespace pelab::csv
