#pragma once

// Minimal CSV helpers for the two-column `hour,value` files used throughout
// and for writing result tables. All files are UTF-8 with LF line endings.

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace prosumeq::csv {

inline std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return {};
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

inline std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(trim(field));
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

// Strict double parse: the whole field must be consumed.
inline double parse_double(const std::string& field, const std::string& file, std::size_t line_no) {
  if (field.empty())
    throw std::runtime_error(file + ":" + std::to_string(line_no) + ": empty numeric field");
  char* end = nullptr;
  const double v = std::strtod(field.c_str(), &end);
  if (end != field.c_str() + field.size())
    throw std::runtime_error(file + ":" + std::to_string(line_no) + ": cannot parse number '" + field + "'");
  return v;
}

inline long parse_long(const std::string& field, const std::string& file, std::size_t line_no) {
  if (field.empty())
    throw std::runtime_error(file + ":" + std::to_string(line_no) + ": empty integer field");
  char* end = nullptr;
  const long v = std::strtol(field.c_str(), &end, 10);
  if (end != field.c_str() + field.size())
    throw std::runtime_error(file + ":" + std::to_string(line_no) + ": cannot parse integer '" + field + "'");
  return v;
}

// Reads a two-column file with the exact header `hour,value`. Hours must be
// consecutive integers starting at 0. Returns the value column.
inline std::vector<double> read_hour_value(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
  ++line_no;
  {
    auto header = split_line(line);
    if (header.size() != 2 || header[0] != "hour" || header[1] != "value")
      throw std::runtime_error(path + ":1: expected header 'hour,value', got '" + trim(line) + "'");
  }
  std::vector<double> values;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split_line(line);
    if (fields.size() != 2)
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected 2 fields, got " +
                               std::to_string(fields.size()));
    const long hour = parse_long(fields[0], path, line_no);
    if (hour != static_cast<long>(values.size()))
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": non-consecutive hour index " +
                               std::to_string(hour) + " (expected " + std::to_string(values.size()) + ")");
    values.push_back(parse_double(fields[1], path, line_no));
  }
  if (values.empty()) throw std::runtime_error(path + ": no data rows");
  return values;
}

inline void write_hour_value(const std::string& path, const std::vector<double>& values) {
  std::ofstream out(path, std::ios::binary);  // binary: keep LF on every platform
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "hour,value\n";
  char buf[64];
  for (std::size_t h = 0; h < values.size(); ++h) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g\n", h, values[h]);
    out << buf;
  }
  if (!out) throw std::runtime_error("error while writing " + path);
}

// Shared formatting for all result CSVs: shortest round-trippable decimal.
inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  if (double r = std::strtod(buf, nullptr); r == v) {
    for (int prec = 1; prec < 17; ++prec) {
      char probe[64];
      std::snprintf(probe, sizeof probe, "%.*g", prec, v);
      if (std::strtod(probe, nullptr) == v) return probe;
    }
  }
  return buf;
}

}  // namespace prosumeq::csv

namespace prosumeq {
// formatting/parsing helpers used well beyond CSV files
using csv::format_double;
using csv::parse_double;
using csv::trim;
}  // namespace prosumeq
