#ifndef ANITRI_CSV_HPP
#define ANITRI_CSV_HPP

#include <fstream>
#include <string>
#include <vector>

namespace anitri {

/// RFC 4180 output: CRLF line endings, quoting only where required.
/// Numeric cells use 17 significant digits so identical runs produce
/// byte-identical files.
class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path);

  void row(const std::vector<std::string>& cells);

  static std::string cell(double v);
  static std::string cell(int v);

 private:
  std::ofstream out_;
};

}  // namespace anitri

#endif
