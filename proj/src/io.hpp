#pragma once

#include <fstream>
#include <string>
#include <utility>
#include <vector>

namespace gbwm {

// Shortest decimal form that parses back to the identical double.
std::string format_double(double v);

// Split one CSV line on commas, trimming surrounding whitespace.
std::vector<std::string> split_csv_line(const std::string& line);

// Ordered key=value metadata carried in leading "# key=value" lines.
using MetaList = std::vector<std::pair<std::string, std::string>>;

// Lines starting with '#' are metadata/comments; "# key=value" ones are
// collected into `meta`, the rest are skipped.
struct CsvTable {
  MetaList meta;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<size_t> row_numbers;  // 1-based line number of each data row

  // Index of a named column; throws if absent.
  size_t column(const std::string& name) const;
  // Metadata lookup; throws if the key is absent.
  const std::string& meta_value(const std::string& key) const;
  bool has_meta(const std::string& key) const;
};

CsvTable read_csv(const std::string& path);

// Output writer that prepends "# key=value" metadata lines. Writers are
// deterministic: identical content in -> identical bytes out.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const MetaList& meta);
  void header(const std::vector<std::string>& names);
  void row(const std::vector<std::string>& cells);
  void close();

 private:
  std::ofstream out_;
  std::string path_;
};

}  // namespace gbwm
