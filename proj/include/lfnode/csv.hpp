#pragma once

#include <string>
#include <vector>

namespace lfnode::csv {

// Round-trip decimal form ("%.17g"); byte-identical across runs for equal inputs.
std::string format(double value);

/// CSV files open with "# lfnode-csv <schema> v<version>" followed by the
/// header row.
struct Table {
  std::string schema;
  int version = 1;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void add_row(std::vector<std::string> row);
  std::string render() const;
  void write(const std::string& path) const;
};

/// Parsed header of an existing CSV: the schema comment (if present) and the
/// column names.
struct Header {
  std::string schema;
  int version = 0;
  std::vector<std::string> columns;
};

Header read_header(const std::string& path);

}  // namespace lfnode::csv
