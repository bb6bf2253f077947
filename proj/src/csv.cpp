#include "anitri/csv.hpp"

#include <cstdio>
#include <stdexcept>

namespace anitri {

CsvWriter::CsvWriter(const std::string& path) : out_(path, std::ios::binary) {
  if (!out_) throw std::runtime_error("csv: cannot write " + path);
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  for (size_t i = 0; i < cells.size(); ++i) {
    if (i) out_ << ',';
    const std::string& c = cells[i];
    if (c.find_first_of(",\"\r\n") == std::string::npos) {
      out_ << c;
    } else {
      out_ << '"';
      for (char ch : c) {
        if (ch == '"') out_ << '"';
        out_ << ch;
      }
      out_ << '"';
    }
  }
  out_ << "\r\n";
}

std::string CsvWriter::cell(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string CsvWriter::cell(int v) { return std::to_string(v); }

}  // namespace anitri
