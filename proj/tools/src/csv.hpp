#pragma once

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <vector>

namespace gossipfield::tools {

/// 17 significant digits, '.' decimal point, "nan" / "inf" / "-inf" for
/// non-finite values.
std::string format_number(double value);

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, std::vector<std::string> header);
  void row(const std::vector<std::string>& cells);
  void close();

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::size_t columns_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column position or -1.
  int column(const std::string& name) const;
};

/// Plain comma-separated reader: no quoting, which is all the writer emits.
CsvTable read_csv(const std::filesystem::path& path);

}  // namespace gossipfield::tools
