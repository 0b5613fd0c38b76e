#pragma once

// File and delimited-text helpers shared by the dataset, features and report writers.

#include <qrc/error.hpp>

#include <array>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace qrc {

/// 17 significant digits; parses back to the same double.
inline void append_double(std::string& out, double v) {
  std::array<char, 32> buf{};
  const auto res =
      std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::general, 17);
  out.append(buf.data(), res.ptr);
}

inline void append_row(std::string& out, std::span<const double> values, char delimiter = ',') {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i != 0) out.push_back(delimiter);
    append_double(out, values[i]);
  }
  out.push_back('\n');
}

inline void write_file(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io_error, "cannot open " + path.string() + " for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error(Errc::io_error, "write failed for " + path.string());
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_error, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

/// Rows of exactly `width` numbers. Blank lines are skipped; errors name the
/// 1-based row and column.
inline std::vector<std::vector<double>> parse_numeric_table(std::string_view text, char delimiter,
                                                            std::size_t width) {
  std::vector<std::vector<double>> rows;
  std::size_t row = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++row;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;

    std::vector<double> values;
    values.reserve(width);
    std::size_t start = 0;
    while (true) {
      std::size_t end = line.find(delimiter, start);
      const bool last = end == std::string_view::npos;
      if (last) end = line.size();
      std::string_view field = line.substr(start, end - start);
      while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
      while (!field.empty() && (field.back() == ' ' || field.back() == '\t')) field.remove_suffix(1);
      const std::size_t col = values.size() + 1;
      if (col > width)
        throw Error(Errc::shape_mismatch, "row " + std::to_string(row) + " has more than " +
                                              std::to_string(width) + " columns");
      double value = 0.0;
      const auto res = std::from_chars(field.data(), field.data() + field.size(), value);
      if (field.empty() || res.ec != std::errc() || res.ptr != field.data() + field.size())
        throw Error(Errc::parse_error, "row " + std::to_string(row) + ", column " +
                                           std::to_string(col) + ": '" + std::string(field) +
                                           "' is not a number");
      values.push_back(value);
      if (last) break;
      start = end + 1;
    }
    if (values.size() != width)
      throw Error(Errc::shape_mismatch, "row " + std::to_string(row) + " has " +
                                            std::to_string(values.size()) +
                                            " columns, expected " + std::to_string(width));
    rows.push_back(std::move(values));
  }
  return rows;
}

}  // namespace qrc
