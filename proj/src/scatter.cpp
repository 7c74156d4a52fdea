#include "xrec/scatter.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "xrec/error.hpp"
#include "xrec/text.hpp"

namespace xrec {

std::string format_scatter_csv(const std::vector<ScatterPoint>& points, const std::string& comment) {
  std::string out;
  if (!comment.empty()) out += "# " + comment + "\n";
  out += "node,x,y,group\n";
  for (const auto& p : points) {
    out += p.node + "," + text::format_g(p.x, kScatterDigits) + "," +
           text::format_g(p.y, kScatterDigits) + "," + p.group + "\n";
  }
  return out;
}

std::vector<ScatterPoint> parse_scatter_csv(const std::string& contents, const std::string& source) {
  std::vector<ScatterPoint> points;
  std::istringstream in(contents);
  std::string line;
  std::size_t line_no = 0;
  bool header = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::is_blank_or_comment(line)) continue;
    const auto fields = text::split(text::trim(line), ',');
    if (header) {
      header = false;
      if (fields.size() != 4 || fields[0] != "node") throw ParseError(source, line_no, "expected header node,x,y,group");
      continue;
    }
    if (fields.size() != 4) throw ParseError(source, line_no, "expected 4 columns");
    points.push_back({std::string(fields[0]), text::parse_double(fields[1], source, line_no),
                      text::parse_double(fields[2], source, line_no), std::string(fields[3])});
  }
  return points;
}

std::string render_scatter_svg(const std::vector<ScatterPoint>& points, const std::string& title) {
  constexpr double kSize = 640.0;
  constexpr double kMargin = 40.0;
  static constexpr std::array<const char*, 8> kPalette{"#1b9e77", "#d95f02", "#7570b3", "#e7298a",
                                                       "#66a61e", "#e6ab02", "#a6761d", "#666666"};
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  std::map<std::string, std::size_t> colors;
  for (const auto& p : points) {
    xmin = std::min(xmin, p.x);
    xmax = std::max(xmax, p.x);
    ymin = std::min(ymin, p.y);
    ymax = std::max(ymax, p.y);
    colors.emplace(p.group, 0);
  }
  std::size_t next = 0;
  for (auto& [group, color] : colors) color = next++ % kPalette.size();
  const double xspan = xmax > xmin ? xmax - xmin : 1.0;
  const double yspan = ymax > ymin ? ymax - ymin : 1.0;
  const double inner = kSize - 2 * kMargin;

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kSize << "\" height=\"" << kSize
      << "\" viewBox=\"0 0 " << kSize << ' ' << kSize << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!title.empty()) {
    svg << "<text x=\"" << kSize / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
        << "font-size=\"14\">" << title << "</text>\n";
  }
  for (const auto& p : points) {
    const double cx = kMargin + (p.x - xmin) / xspan * inner;
    const double cy = kSize - kMargin - (p.y - ymin) / yspan * inner;
    svg << "<circle cx=\"" << text::format_g(cx, 6) << "\" cy=\"" << text::format_g(cy, 6)
        << "\" r=\"3\" fill=\"" << kPalette[colors[p.group]] << "\" fill-opacity=\"0.7\"/>\n";
  }
  double ly = kMargin;
  for (const auto& [group, color] : colors) {
    svg << "<circle cx=\"" << kSize - 110 << "\" cy=\"" << ly << "\" r=\"5\" fill=\"" << kPalette[color]
        << "\"/><text x=\"" << kSize - 100 << "\" y=\"" << ly + 4
        << "\" font-family=\"sans-serif\" font-size=\"12\">" << group << "</text>\n";
    ly += 18;
  }
  svg << "</svg>\n";
  return svg.str();
}

void export_scatter(const std::vector<ScatterPoint>& points, const std::filesystem::path& csv_path,
                    const std::filesystem::path& svg_path, const std::string& comment) {
  text::write_file(csv_path, format_scatter_csv(points, comment));
  if (!svg_path.empty()) text::write_file(svg_path, render_scatter_svg(points));
}

}  // namespace xrec
