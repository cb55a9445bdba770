#include "resatlas/svg.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "resatlas/complex_format.hpp"
#include "resatlas/errors.hpp"

namespace resatlas {

int ScanTable::column_index(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i] == name) return static_cast<int>(i);
    return -1;
}

ScanTable parse_scan_csv(const std::string& text) {
    ScanTable table;
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw ParseError("scan CSV: empty file");

    auto split = [](const std::string& s) {
        std::vector<std::string> out;
        std::size_t start = 0;
        while (start <= s.size()) {
            std::size_t end = s.find(',', start);
            if (end == std::string::npos) end = s.size();
            out.push_back(s.substr(start, end - start));
            if (end == s.size()) break;
            start = end + 1;
        }
        return out;
    };
    table.columns = split(line);

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::vector<std::string> cells = split(line);
        if (cells.size() != table.columns.size())
            throw ParseError("scan CSV: line " + std::to_string(line_no) + " has " +
                             std::to_string(cells.size()) + " cells, expected " +
                             std::to_string(table.columns.size()));
        std::vector<double> row(cells.size());
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (cells[i] == "nan") {
                row[i] = std::numeric_limits<double>::quiet_NaN();
                continue;
            }
            double v = 0.0;
            auto res = std::from_chars(cells[i].data(), cells[i].data() + cells[i].size(), v);
            if (res.ec != std::errc{} || res.ptr != cells[i].data() + cells[i].size())
                throw ParseError("scan CSV: bad number '" + cells[i] + "' at line " +
                                 std::to_string(line_no));
            row[i] = v;
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

namespace {

struct Rgb {
    double r, g, b;
};

// Piecewise-linear viridis ramp.
Rgb viridis(double t) {
    static const Rgb anchors[] = {{68, 1, 84},    {71, 44, 122},  {59, 81, 139},
                                  {44, 113, 142}, {33, 144, 141}, {39, 173, 129},
                                  {92, 200, 99},  {170, 220, 50}, {253, 231, 37}};
    t = std::clamp(t, 0.0, 1.0);
    const double pos = t * 8.0;
    const int lo = std::min(7, static_cast<int>(pos));
    const double frac = pos - lo;
    return {anchors[lo].r + frac * (anchors[lo + 1].r - anchors[lo].r),
            anchors[lo].g + frac * (anchors[lo + 1].g - anchors[lo].g),
            anchors[lo].b + frac * (anchors[lo + 1].b - anchors[lo].b)};
}

std::string rgb_hex(Rgb c) {
    char buf[8];
    std::snprintf(buf, sizeof(buf), "#%02x%02x%02x",
                  static_cast<int>(std::lround(c.r)), static_cast<int>(std::lround(c.g)),
                  static_cast<int>(std::lround(c.b)));
    return buf;
}

std::string fmt_px(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

}  // namespace

std::string render_heatmap(const ScanTable& table, const HeatmapOptions& options) {
    const int cz_re = table.column_index("re_z");
    const int cz_im = table.column_index("im_z");
    const int cq = table.column_index(options.quantity);
    const int cskip = table.column_index("skipped");
    if (cz_re < 0 || cz_im < 0 || cskip < 0)
        throw ParseError("scan CSV: missing re_z/im_z/skipped columns");
    if (cq < 0) throw BadSpecError("unknown plot quantity '" + options.quantity + "'");

    std::set<double> re_set, im_set;
    for (const auto& row : table.rows) {
        re_set.insert(row[static_cast<std::size_t>(cz_re)]);
        im_set.insert(row[static_cast<std::size_t>(cz_im)]);
    }
    const std::vector<double> res(re_set.begin(), re_set.end());
    const std::vector<double> ims(im_set.begin(), im_set.end());
    const int nx = static_cast<int>(res.size());
    const int ny = static_cast<int>(ims.size());
    if (nx < 2 || ny < 2) throw ParseError("scan CSV: grid too small to plot");

    // Log scale for nonnegative quantities, linear for signed ones.
    const bool signed_quantity =
        options.quantity == "re_f" || options.quantity == "im_f" || options.quantity == "zero_count";
    double vmin = std::numeric_limits<double>::infinity();
    double vmax = -std::numeric_limits<double>::infinity();
    for (const auto& row : table.rows) {
        const double v = row[static_cast<std::size_t>(cq)];
        if (std::isnan(v) || row[static_cast<std::size_t>(cskip)] != 0.0) continue;
        if (!signed_quantity && v <= 0.0) continue;
        vmin = std::min(vmin, v);
        vmax = std::max(vmax, v);
    }
    if (!(vmin <= vmax)) {
        vmin = 0.0;
        vmax = 1.0;
    }
    double lo, hi;
    if (signed_quantity) {
        lo = vmin;
        hi = vmax > vmin ? vmax : vmin + 1.0;
    } else {
        hi = std::log10(vmax);
        lo = std::max(std::log10(std::max(vmin, 1e-300)), hi - 8.0);  // 8 decade window
        if (!(lo < hi)) lo = hi - 1.0;
    }
    auto scaled = [&](double v) {
        if (signed_quantity) return (v - lo) / (hi - lo);
        if (v <= 0.0) return 0.0;
        return (std::log10(v) - lo) / (hi - lo);
    };

    const double cell = std::max(2.0, static_cast<double>(options.max_plot_px) / std::max(nx, ny));
    const double plot_w = cell * nx, plot_h = cell * ny;
    const double margin = 46.0, bar_w = 16.0, bar_gap = 22.0;
    const double width = margin + plot_w + bar_gap + bar_w + 58.0;
    const double height = margin + plot_h + 40.0;

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt_px(width) + "\" height=\"" +
           fmt_px(height) + "\" viewBox=\"0 0 " + fmt_px(width) + " " + fmt_px(height) + "\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";

    auto x_of = [&](double re) {
        const double t = (re - res.front()) / (res.back() - res.front());
        return margin + t * (plot_w - cell);
    };
    auto y_of = [&](double im) {
        const double t = (im - ims.front()) / (ims.back() - ims.front());
        return margin + (plot_h - cell) * (1.0 - t);  // im axis points up
    };

    for (const auto& row : table.rows) {
        const bool skip = row[static_cast<std::size_t>(cskip)] != 0.0;
        const double v = row[static_cast<std::size_t>(cq)];
        const std::string fill =
            (skip || std::isnan(v)) ? std::string("#404040") : rgb_hex(viridis(scaled(v)));
        svg += "<rect x=\"" + fmt_px(x_of(row[static_cast<std::size_t>(cz_re)])) + "\" y=\"" +
               fmt_px(y_of(row[static_cast<std::size_t>(cz_im)])) + "\" width=\"" + fmt_px(cell) +
               "\" height=\"" + fmt_px(cell) + "\" fill=\"" + fill + "\"/>\n";
    }

    // Spectrum markers on the real axis (only those inside the window).
    for (double lam : options.spectrum_markers) {
        if (lam < res.front() || lam > res.back() || 0.0 < ims.front() || 0.0 > ims.back()) continue;
        const double x = x_of(lam) + 0.5 * cell, y = y_of(0.0) + 0.5 * cell;
        svg += "<g stroke=\"#ffffff\" stroke-width=\"1.5\">";
        svg += "<line x1=\"" + fmt_px(x - 4) + "\" y1=\"" + fmt_px(y - 4) + "\" x2=\"" +
               fmt_px(x + 4) + "\" y2=\"" + fmt_px(y + 4) + "\"/>";
        svg += "<line x1=\"" + fmt_px(x - 4) + "\" y1=\"" + fmt_px(y + 4) + "\" x2=\"" +
               fmt_px(x + 4) + "\" y2=\"" + fmt_px(y - 4) + "\"/>";
        svg += "</g>\n";
    }

    // Colorbar.
    const double bar_x = margin + plot_w + bar_gap;
    const int bar_steps = 64;
    for (int i = 0; i < bar_steps; ++i) {
        const double t = (i + 0.5) / bar_steps;
        svg += "<rect x=\"" + fmt_px(bar_x) + "\" y=\"" +
               fmt_px(margin + plot_h * (1.0 - (i + 1.0) / bar_steps)) + "\" width=\"" +
               fmt_px(bar_w) + "\" height=\"" + fmt_px(plot_h / bar_steps + 0.5) + "\" fill=\"" +
               rgb_hex(viridis(t)) + "\"/>\n";
    }
    auto text = [&](double x, double y, const std::string& s, const char* anchor = "start") {
        return "<text x=\"" + fmt_px(x) + "\" y=\"" + fmt_px(y) +
               "\" font-family=\"monospace\" font-size=\"11\" text-anchor=\"" + anchor + "\">" + s +
               "</text>\n";
    };
    const std::string hi_label = signed_quantity ? format_double(hi) : "1e" + format_double(hi);
    const std::string lo_label = signed_quantity ? format_double(lo) : "1e" + format_double(lo);
    svg += text(bar_x + bar_w + 4, margin + 10, hi_label);
    svg += text(bar_x + bar_w + 4, margin + plot_h, lo_label);
    svg += text(margin, margin - 10, options.quantity + (signed_quantity ? "" : " (log scale)"));
    svg += text(margin, margin + plot_h + 16, "re " + format_double(res.front()) + " .. " +
                                                  format_double(res.back()));
    svg += text(margin, margin + plot_h + 30, "im " + format_double(ims.front()) + " .. " +
                                                  format_double(ims.back()));
    svg += "</svg>\n";
    return svg;
}

}  // namespace resatlas
