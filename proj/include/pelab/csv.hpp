#pragma once

// Minimal CSV I/O for numeric tables. Reals are written with 17 significant
// digits so every value re-parses to the same double.

#include <concepts>
#include <cstddef>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace pelab::csv {

std::string format_real(double v);

class Writer {
 public:
  /// Opens `path` and writes the header. Throws IoError.
  Writer(const std::string& path, const std::vector<std::string>& header);

  template <typename... Cells>
  void row(const Cells&... cells) {
    std::string line;
    bool first = true;
    ((append(line, first, cells)), ...);
    write_line(line);
  }

  void row_values(std::string_view leading, const std::vector<double>& values);
  /// Flushes and checks the stream. Throws IoError.
  void close();

 private:
  static void sep(std::string& line, bool& first) {
    if (!first) line += ',';
    first = false;
  }
  static void append(std::string& line, bool& first, double v) {
    sep(line, first);
    line += format_real(v);
  }
  template <std::integral T>
  static void append(std::string& line, bool& first, T v) {
    sep(line, first);
    line += std::to_string(v);
  }
  static void append(std::string& line, bool& first, std::string_view v) {
    sep(line, first);
    line += v;
  }
  static void append(std::string& line, bool& first, const std::string& v) {
    append(line, first, std::string_view(v));
  }
  static void append(std::string& line, bool& first, const char* v) {
    append(line, first, std::string_view(v));
  }
  void write_line(const std::string& line);

  std::string path_;
  std::ofstream out_;
};

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string_view name) const;
  double real(std::size_t r, std::size_t c) const;
};

/// Reads a comma-separated file with a header row. Throws IoError / LoadError.
Table read(const std::string& path);

}  // namespace pelab::csv
