#include "lfnode/csv.hpp"

#include "lfnode/core.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace lfnode::csv {

std::string format(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

void Table::add_row(std::vector<std::string> row) {
  require(row.size() == columns.size(), "csv: row width does not match header");
  rows.push_back(std::move(row));
}

std::string Table::render() const {
  std::ostringstream out;
  out << "# lfnode-csv " << schema << " v" << version << '\n';
  auto line = [&out](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
    out << '\n';
  };
  line(columns);
  for (const auto& r : rows) line(r);
  return out.str();
}

void Table::write(const std::string& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ArgumentError("csv: cannot write " + path);
  f << render();
}

Header read_header(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ArgumentError("csv: cannot open " + path);
  Header h;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream ss(line.substr(1));
      std::string tag, schema, version;
      if (ss >> tag >> schema >> version && tag == "lfnode-csv" && version.size() > 1 && version[0] == 'v') {
        h.schema = schema;
        h.version = std::stoi(version.substr(1));
      }
      continue;
    }
    std::istringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) h.columns.push_back(cell);
    break;
  }
  return h;
}

}  // namespace lfnode::csv
