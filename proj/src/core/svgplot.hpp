#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace mmqkd {

struct PlotSeries {
    std::string label;
    std::string color; // empty: assigned from the default palette
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> y_err; // empty, or one symmetric error bar per point
};

struct PlotSpec {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_y = false; // points with y <= 0 are dropped on a log axis
    std::vector<PlotSeries> series;
};

// Minimal self-contained chart: linear/log-decade y axis, 1-2-5 tick ladder,
// markers joined by lines, symmetric error bars, in-plot legend.  Output is a
// deterministic function of its input.
void write_svg_plot(const std::filesystem::path& path, const PlotSpec& spec);

} // namespace mmqkd
