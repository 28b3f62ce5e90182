#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace l1gi {

/// "%.17g" formatting; parses back to the identical double.
std::string format_double(double x);

/// Simple rectangular CSV: one header row plus data rows, comma separated,
/// no quoting (fields never contain commas).
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const;
};

/// Writes the table; throws IoError if the path is not writable.
void emit_csv(const CsvTable& table, const std::filesystem::path& path);
CsvTable load_csv(const std::filesystem::path& path);
std::string to_csv_string(const CsvTable& table);

struct ScatterSeries {
  std::string label;
  std::string color;
  std::vector<double> xs;
  std::vector<double> ys;
};

/// Scatter plot of proportion (y) against GI index (x). Draws axes, tick
/// labels, and a vertical eta = 0 reference line whenever the x-range spans 0.
std::string render_svg_scatter(const std::vector<ScatterSeries>& series, const std::string& title = {});
void emit_svg_scatter(const std::vector<ScatterSeries>& series, const std::filesystem::path& path,
                      const std::string& title = {});

/// Convenience overload for one series with per-point labels grouped by label.
void emit_svg_scatter(const std::vector<double>& xs, const std::vector<double>& ys,
                      const std::vector<std::string>& labels, const std::filesystem::path& path);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace l1gi
