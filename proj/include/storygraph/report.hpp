#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace storygraph {

enum class ReportFormat { Tsv, Text };

/// A table plus "# key=value" header comments echoing the configuration.
struct ReportTable {
  std::string title;
  std::vector<std::pair<std::string, std::string>> comments;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  std::string render(ReportFormat format) const;
};

std::string format_percent(double fraction);  // 0.8906 -> "89.06%"
std::string format_fixed(double value, int digits);

/// Writes the rendered table; throws IoFailure.
void emit_report(const ReportTable& table, ReportFormat format, const std::filesystem::path& path);

}  // namespace storygraph
