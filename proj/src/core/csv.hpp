#pragma once

#include <fstream>
#include <string>
#include <vector>

namespace amf::csv {

// Minimal CSV support for the artifact's plain comma-separated files
// (no quoting; asset ids and class names contain no commas by schema).

struct Row {
  std::vector<std::string> fields;
  long line_number = 0;
};

class Reader {
 public:
  // Opens and reads the header row; throws Io/Parse errors.
  Reader(const std::string& path, const std::vector<std::string>& expected_header);

  const std::string& path() const { return path_; }
  // Returns false at end of file. Blank lines are skipped.
  bool next(Row* row);

 private:
  std::string path_;
  std::ifstream in_;
  long line_ = 0;
};

std::vector<std::string> split_line(const std::string& line);

// Field parsers that raise Parse errors with file/line context.
double parse_double(const std::string& field, const Reader& r, long line);
long parse_long(const std::string& field, const Reader& r, long line);

class Writer {
 public:
  explicit Writer(const std::string& path);
  void row(const std::vector<std::string>& fields);
  void close();

 private:
  std::string path_;
  std::ofstream out_;
};

// Fixed formatting so reruns are byte-identical.
std::string fmt(double v);

}  // namespace amf::csv
