#include "storygraph/report.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "storygraph/binary_io.hpp"

namespace storygraph {

std::string format_fixed(double value, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, value);
  return buf;
}

std::string format_percent(double fraction) { return format_fixed(100.0 * fraction, 2) + "%"; }

std::string ReportTable::render(ReportFormat format) const {
  std::ostringstream os;
  if (!title.empty()) os << "# " << title << '\n';
  for (const auto& [k, v] : comments) os << "# " << k << '=' << v << '\n';

  if (format == ReportFormat::Tsv) {
    auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "\t" : "") << cells[i];
      os << '\n';
    };
    line(columns);
    for (const auto& r : rows) line(r);
    return os.str();
  }

  std::vector<std::size_t> width(columns.size(), 0);
  for (std::size_t i = 0; i < columns.size(); ++i) width[i] = columns[i].size();
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size() && i < width.size(); ++i) width[i] = std::max(width[i], r[i].size());
  }
  auto rule = [&] {
    os << '+';
    for (auto w : width) os << std::string(w + 2, '-') << '+';
    os << '\n';
  };
  auto line = [&](const std::vector<std::string>& cells) {
    os << '|';
    for (std::size_t i = 0; i < width.size(); ++i) {
      const std::string cell = i < cells.size() ? cells[i] : "";
      os << ' ' << cell << std::string(width[i] - cell.size(), ' ') << " |";
    }
    os << '\n';
  };
  rule();
  line(columns);
  rule();
  for (const auto& r : rows) line(r);
  if (!rows.empty()) rule();
  return os.str();
}

void emit_report(const ReportTable& table, ReportFormat format, const std::filesystem::path& path) {
  write_file_bytes(path, table.render(format));
}

}  // namespace storygraph
