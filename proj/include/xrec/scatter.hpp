#pragma once

// 2D scatter export: CSV `node,x,y,group` and a standalone SVG rendering.

#include <filesystem>
#include <string>
#include <vector>

namespace xrec {

struct ScatterPoint {
  std::string node;
  double x = 0.0;
  double y = 0.0;
  std::string group;
};

inline constexpr int kScatterDigits = 10;

/// `comment`, when given, becomes a leading `# ` line.
std::string format_scatter_csv(const std::vector<ScatterPoint>& points, const std::string& comment = {});
std::vector<ScatterPoint> parse_scatter_csv(const std::string& contents, const std::string& source = "<scatter>");

std::string render_scatter_svg(const std::vector<ScatterPoint>& points, const std::string& title = {});

/// Writes `csv_path`, and the SVG next to it when `svg_path` is non-empty.
void export_scatter(const std::vector<ScatterPoint>& points, const std::filesystem::path& csv_path,
                    const std::filesystem::path& svg_path = {}, const std::string& comment = {});

}  // namespace xrec
