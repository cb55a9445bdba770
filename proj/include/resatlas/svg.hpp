#pragma once

#include <string>
#include <vector>

namespace resatlas {

// Parsed scan CSV (the documented schema from the scan module).
struct ScanTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    int column_index(const std::string& name) const;  // -1 when absent
};

ScanTable parse_scan_csv(const std::string& text);

struct HeatmapOptions {
    std::string quantity = "abs_f";
    std::vector<double> spectrum_markers;  // real eigenvalues to mark on the axis
    int max_plot_px = 640;
};

// Self-contained SVG heatmap of one CSV quantity on the scan grid;
// positive quantities get a log10 color scale, signed ones a linear scale.
std::string render_heatmap(const ScanTable& table, const HeatmapOptions& options);

}  // namespace resatlas
