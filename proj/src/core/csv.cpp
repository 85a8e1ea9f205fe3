#include "core/csv.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "core/common.hpp"

namespace amf::csv {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  size_t start = 0;
  while (true) {
    size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  if (!fields.empty() && !fields.back().empty() && fields.back().back() == '\r') {
    fields.back().pop_back();
  }
  return fields;
}

Reader::Reader(const std::string& path, const std::vector<std::string>& expected_header)
    : path_(path), in_(path) {
  if (!in_) raise(ErrorKind::Io, "cannot open " + path);
  std::string header_line;
  if (!std::getline(in_, header_line)) raise(ErrorKind::Parse, path + ": empty file");
  line_ = 1;
  auto header = split_line(header_line);
  size_t n = std::min(header.size(), expected_header.size());
  for (size_t i = 0; i < n; ++i) {
    if (header[i] != expected_header[i]) {
      raise(ErrorKind::Parse, path + ": header mismatch, expected '" + expected_header[i] +
                                  "' in column " + std::to_string(i + 1) + ", got '" +
                                  header[i] + "'");
    }
  }
  if (header.size() < expected_header.size()) {
    raise(ErrorKind::Parse,
          path + ": header has " + std::to_string(header.size()) + " columns, expected " +
              std::to_string(expected_header.size()));
  }
}

bool Reader::next(Row* row) {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_;
    if (line.empty() || line == "\r") continue;
    row->fields = split_line(line);
    row->line_number = line_;
    return true;
  }
  return false;
}

double parse_double(const std::string& field, const Reader& r, long line) {
  char* end = nullptr;
  double v = std::strtod(field.c_str(), &end);
  if (field.empty() || end == nullptr || *end != '\0' || !std::isfinite(v)) {
    raise(ErrorKind::Parse,
          r.path() + ":" + std::to_string(line) + ": invalid number '" + field + "'");
  }
  return v;
}

long parse_long(const std::string& field, const Reader& r, long line) {
  char* end = nullptr;
  long v = std::strtol(field.c_str(), &end, 10);
  if (field.empty() || end == nullptr || *end != '\0') {
    raise(ErrorKind::Parse,
          r.path() + ":" + std::to_string(line) + ": invalid integer '" + field + "'");
  }
  return v;
}

Writer::Writer(const std::string& path) : path_(path), out_(path) {
  if (!out_) raise(ErrorKind::Io, "cannot write " + path);
}

void Writer::row(const std::vector<std::string>& fields) {
  for (size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) out_ << ',';
    out_ << fields[i];
  }
  out_ << '\n';
  if (!out_) raise(ErrorKind::Io, "write failed: " + path_);
}

void Writer::close() {
  out_.close();
  if (!out_) raise(ErrorKind::Io, "close failed: " + path_);
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

}  // namespace amf::csv
