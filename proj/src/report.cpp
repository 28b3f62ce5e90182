#include "l1gi/report.hpp"

#include "l1gi/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace l1gi {

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::size_t CsvTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw DomainError("csv: no column named '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

namespace {

void append_line(std::string& out, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out += ',';
    out += cells[i];
  }
  out += '\n';
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

std::string to_csv_string(const CsvTable& table) {
  std::string out;
  append_line(out, table.header);
  for (const auto& row : table.rows) append_line(out, row);
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

void emit_csv(const CsvTable& table, const std::filesystem::path& path) { write_text(path, to_csv_string(table)); }

CsvTable load_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) return table;
  table.header = split(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    table.rows.push_back(split(line));
  }
  return table;
}

// ---------------------------------------------------------------------------
// SVG
// ---------------------------------------------------------------------------

std::string render_svg_scatter(const std::vector<ScatterSeries>& series, const std::string& title) {
  constexpr double width = 640, height = 480, left = 70, right = 150, top = 40, bottom = 60;
  const double plot_w = width - left - right, plot_h = height - top - bottom;

  double xmin = INFINITY, xmax = -INFINITY, ymin = 0.0, ymax = 1.0;
  for (const auto& s : series) {
    for (double x : s.xs)
      if (std::isfinite(x)) xmin = std::min(xmin, x), xmax = std::max(xmax, x);
    for (double y : s.ys)
      if (std::isfinite(y)) ymin = std::min(ymin, y), ymax = std::max(ymax, y);
  }
  if (!(xmin <= xmax)) xmin = -1.0, xmax = 1.0;
  if (xmax - xmin < 1e-12) xmin -= 0.5, xmax += 0.5;
  const double pad = 0.05 * (xmax - xmin);
  xmin -= pad;
  xmax += pad;

  auto px = [&](double x) { return left + (x - xmin) / (xmax - xmin) * plot_w; };
  auto py = [&](double y) { return top + (ymax - y) / (ymax - ymin) * plot_h; };

  std::ostringstream svg;
  svg.precision(6);
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!title.empty())
    svg << "<text x=\"" << left + plot_w / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << title
        << "</text>\n";

  // axes
  svg << "<g id=\"axes\" stroke=\"black\" stroke-width=\"1\">\n";
  svg << "<line x1=\"" << left << "\" y1=\"" << top + plot_h << "\" x2=\"" << left + plot_w << "\" y2=\""
      << top + plot_h << "\"/>\n";
  svg << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + plot_h
      << "\"/>\n";
  svg << "</g>\n";
  svg << "<g id=\"ticks\" font-size=\"11\" text-anchor=\"middle\">\n";
  for (int k = 0; k <= 5; ++k) {
    const double xv = xmin + k * (xmax - xmin) / 5, yv = ymin + k * (ymax - ymin) / 5;
    svg << "<text x=\"" << px(xv) << "\" y=\"" << top + plot_h + 16 << "\">" << xv << "</text>\n";
    svg << "<text x=\"" << left - 24 << "\" y=\"" << py(yv) + 4 << "\">" << yv << "</text>\n";
  }
  svg << "</g>\n";
  svg << "<text x=\"" << left + plot_w / 2 << "\" y=\"" << height - 16
      << "\" text-anchor=\"middle\" font-size=\"13\">GI index eta</text>\n";
  svg << "<text x=\"18\" y=\"" << top + plot_h / 2 << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 18 "
      << top + plot_h / 2 << ")\">proportion sign-correct</text>\n";

  if (xmin < 0.0 && xmax > 0.0)
    svg << "<line id=\"eta-zero\" x1=\"" << px(0.0) << "\" y1=\"" << top << "\" x2=\"" << px(0.0) << "\" y2=\""
        << top + plot_h << "\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n";

  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  for (std::size_t s = 0; s < series.size(); ++s) {
    const auto& ser = series[s];
    const std::string color = ser.color.empty() ? palette[s % 6] : ser.color;
    svg << "<g class=\"series\" fill=\"" << color << "\">\n";
    for (std::size_t i = 0; i < std::min(ser.xs.size(), ser.ys.size()); ++i) {
      if (!std::isfinite(ser.xs[i]) || !std::isfinite(ser.ys[i])) continue;
      svg << "<circle cx=\"" << px(ser.xs[i]) << "\" cy=\"" << py(ser.ys[i]) << "\" r=\"3\"/>\n";
    }
    svg << "</g>\n";
    const double ly = top + 14 + 18.0 * static_cast<double>(s);
    svg << "<circle cx=\"" << left + plot_w + 16 << "\" cy=\"" << ly - 4 << "\" r=\"4\" fill=\"" << color
        << "\"/>\n";
    svg << "<text x=\"" << left + plot_w + 26 << "\" y=\"" << ly << "\" font-size=\"12\">" << ser.label
        << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

void emit_svg_scatter(const std::vector<ScatterSeries>& series, const std::filesystem::path& path,
                      const std::string& title) {
  write_text(path, render_svg_scatter(series, title));
}

void emit_svg_scatter(const std::vector<double>& xs, const std::vector<double>& ys,
                      const std::vector<std::string>& labels, const std::filesystem::path& path) {
  if (xs.size() != ys.size() || xs.size() != labels.size())
    throw DomainError("emit_svg_scatter: series lengths differ");
  std::map<std::string, ScatterSeries> by_label;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    auto& s = by_label[labels[i]];
    s.label = labels[i];
    s.xs.push_back(xs[i]);
    s.ys.push_back(ys[i]);
  }
  std::vector<ScatterSeries> series;
  for (auto& [_, s] : by_label) series.push_back(std::move(s));
  emit_svg_scatter(series, path);
}

}  // namespace l1gi
