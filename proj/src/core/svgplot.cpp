#include "core/svgplot.hpp"

#include "core/domain.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

namespace mmqkd {

namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 480.0;
constexpr double kLeft = 78.0;
constexpr double kRight = 24.0;
constexpr double kTop = 42.0;
constexpr double kBottom = 58.0;

const char* kPalette[] = {"#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02"};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

// Short human label for tick values (%g trims trailing zeros deterministically).
std::string tick_label(double v) {
    if (v != 0.0 && (std::abs(v) < 1e-4 || std::abs(v) >= 1e6)) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.0e", v);
        return buf;
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

struct Range {
    double lo = 0.0;
    double hi = 1.0;
};

bool usable(double v, bool log_scale) {
    return std::isfinite(v) && (!log_scale || v > 0.0);
}

Range data_range(const PlotSpec& spec, bool along_y) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    const bool log_scale = along_y && spec.log_y;
    for (const auto& s : spec.series) {
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!usable(s.x[i], false) || !usable(s.y[i], spec.log_y))
                continue;
            double v = along_y ? s.y[i] : s.x[i];
            double err = (along_y && i < s.y_err.size()) ? s.y_err[i] : 0.0;
            double a = v - err;
            double b = v + err;
            if (log_scale && a <= 0.0)
                a = v; // keep a positive lower edge on log axes
            lo = std::min(lo, a);
            hi = std::max(hi, b);
        }
    }
    if (!(lo <= hi)) // no plottable point at all
        return log_scale ? Range{0.1, 10.0} : Range{0.0, 1.0};
    if (log_scale) {
        if (lo == hi) {
            lo /= 10.0;
            hi *= 10.0;
        }
        return {lo, hi};
    }
    if (lo == hi) {
        const double pad = lo == 0.0 ? 1.0 : std::abs(lo) * 0.5;
        return {lo - pad, hi + pad};
    }
    const double pad = 0.06 * (hi - lo);
    return {lo - pad, hi + pad};
}

// Tick positions on a 1-2-5 ladder covering the range with ~target ticks.
std::vector<double> linear_ticks(const Range& r, int target = 6) {
    const double span = r.hi - r.lo;
    const double raw = span / target;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
        step = m * mag;
        if (step >= raw)
            break;
    }
    std::vector<double> out;
    double first = std::ceil(r.lo / step) * step;
    for (double t = first; t <= r.hi + 1e-9 * span; t += step)
        out.push_back(std::abs(t) < 1e-12 * span ? 0.0 : t);
    return out;
}

std::vector<double> decade_ticks(const Range& r) {
    std::vector<double> out;
    const int lo = static_cast<int>(std::floor(std::log10(r.lo)));
    const int hi = static_cast<int>(std::ceil(std::log10(r.hi)));
    for (int k = lo; k <= hi; ++k) {
        const double t = std::pow(10.0, k);
        if (t >= r.lo / 1.0001 && t <= r.hi * 1.0001)
            out.push_back(t);
    }
    if (out.empty())
        out.push_back(std::pow(10.0, lo));
    return out;
}

std::string escape_xml(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        default: out += c;
        }
    }
    return out;
}

} // namespace

void write_svg_plot(const std::filesystem::path& path, const PlotSpec& spec) {
    const Range rx = data_range(spec, false);
    const Range ry = data_range(spec, true);
    const double plot_w = kWidth - kLeft - kRight;
    const double plot_h = kHeight - kTop - kBottom;

    auto to_px_x = [&](double v) { return kLeft + (v - rx.lo) / (rx.hi - rx.lo) * plot_w; };
    auto to_px_y = [&](double v) {
        const double t = spec.log_y ? (std::log10(v) - std::log10(ry.lo)) /
                                          (std::log10(ry.hi) - std::log10(ry.lo))
                                    : (v - ry.lo) / (ry.hi - ry.lo);
        return kTop + (1.0 - t) * plot_h;
    };

    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw ConfigError("cannot open for writing: " + path.string());

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << kHeight << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n";
    out << "<rect width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n";
    out << "<text x=\"" << fmt(kWidth / 2) << "\" y=\"24\" text-anchor=\"middle\" "
           "font-family=\"sans-serif\" font-size=\"16\">"
        << escape_xml(spec.title) << "</text>\n";

    // gridlines + ticks
    const auto xticks = linear_ticks(rx);
    const auto yticks = spec.log_y ? decade_ticks(ry) : linear_ticks(ry);
    out << "<g font-family=\"sans-serif\" font-size=\"12\" fill=\"#333\">\n";
    for (double t : xticks) {
        const double px = to_px_x(t);
        out << "<line x1=\"" << fmt(px) << "\" y1=\"" << fmt(kTop) << "\" x2=\"" << fmt(px)
            << "\" y2=\"" << fmt(kTop + plot_h) << "\" stroke=\"#ddd\"/>\n";
        out << "<text x=\"" << fmt(px) << "\" y=\"" << fmt(kTop + plot_h + 18)
            << "\" text-anchor=\"middle\">" << tick_label(t) << "</text>\n";
    }
    for (double t : yticks) {
        const double py = to_px_y(t);
        out << "<line x1=\"" << fmt(kLeft) << "\" y1=\"" << fmt(py) << "\" x2=\""
            << fmt(kLeft + plot_w) << "\" y2=\"" << fmt(py) << "\" stroke=\"#ddd\"/>\n";
        out << "<text x=\"" << fmt(kLeft - 8) << "\" y=\"" << fmt(py + 4)
            << "\" text-anchor=\"end\">" << tick_label(t) << "</text>\n";
    }
    out << "</g>\n";

    // frame + axis labels
    out << "<rect x=\"" << fmt(kLeft) << "\" y=\"" << fmt(kTop) << "\" width=\"" << fmt(plot_w)
        << "\" height=\"" << fmt(plot_h) << "\" fill=\"none\" stroke=\"#333\"/>\n";
    out << "<text x=\"" << fmt(kLeft + plot_w / 2) << "\" y=\"" << fmt(kHeight - 14)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">"
        << escape_xml(spec.x_label) << "</text>\n";
    out << "<text x=\"20\" y=\"" << fmt(kTop + plot_h / 2)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\" "
           "transform=\"rotate(-90 20 "
        << fmt(kTop + plot_h / 2) << ")\">" << escape_xml(spec.y_label) << "</text>\n";

    // series
    for (std::size_t si = 0; si < spec.series.size(); ++si) {
        const auto& s = spec.series[si];
        const std::string color =
            s.color.empty() ? kPalette[si % (sizeof kPalette / sizeof *kPalette)] : s.color;
        std::string points;
        out << "<g stroke=\"" << color << "\" fill=\"" << color << "\">\n";
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!usable(s.x[i], false) || !usable(s.y[i], spec.log_y))
                continue;
            const double px = to_px_x(s.x[i]);
            const double py = to_px_y(s.y[i]);
            points += fmt(px) + "," + fmt(py) + " ";
            if (i < s.y_err.size() && s.y_err[i] > 0.0) {
                double lo = s.y[i] - s.y_err[i];
                double hi = s.y[i] + s.y_err[i];
                if (spec.log_y && lo <= 0.0)
                    lo = s.y[i];
                const double plo = to_px_y(lo);
                const double phi = to_px_y(hi);
                out << "<line x1=\"" << fmt(px) << "\" y1=\"" << fmt(plo) << "\" x2=\"" << fmt(px)
                    << "\" y2=\"" << fmt(phi) << "\"/>\n";
                out << "<line x1=\"" << fmt(px - 4) << "\" y1=\"" << fmt(plo) << "\" x2=\""
                    << fmt(px + 4) << "\" y2=\"" << fmt(plo) << "\"/>\n";
                out << "<line x1=\"" << fmt(px - 4) << "\" y1=\"" << fmt(phi) << "\" x2=\""
                    << fmt(px + 4) << "\" y2=\"" << fmt(phi) << "\"/>\n";
            }
            out << "<circle cx=\"" << fmt(px) << "\" cy=\"" << fmt(py) << "\" r=\"3\"/>\n";
        }
        if (!points.empty())
            out << "<polyline points=\"" << points << "\" fill=\"none\" stroke-width=\"1.5\"/>\n";
        out << "</g>\n";
        // legend entry
        const double ly = kTop + 16 + 18 * static_cast<double>(si);
        out << "<line x1=\"" << fmt(kLeft + plot_w - 150) << "\" y1=\"" << fmt(ly) << "\" x2=\""
            << fmt(kLeft + plot_w - 126) << "\" y2=\"" << fmt(ly) << "\" stroke=\"" << color
            << "\" stroke-width=\"2\"/>\n";
        out << "<text x=\"" << fmt(kLeft + plot_w - 120) << "\" y=\"" << fmt(ly + 4)
            << "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#333\">"
            << escape_xml(s.label) << "</text>\n";
    }
    out << "</svg>\n";
    if (!out)
        throw ConfigError("write failed: " + path.string());
}

} // namespace mmqkd
