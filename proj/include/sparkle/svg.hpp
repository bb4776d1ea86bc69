#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "sparkle/common.hpp"
#include "sparkle/csv.hpp"

namespace sparkle {

struct SvgSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> lo; // optional confidence band, same length as x
    std::vector<double> hi;
};

/// Self-contained deterministic SVG line plot: mean curves with optional
/// shaded bands. Same data, same bytes.
inline void write_svg_lines(const std::string& path,
                            const std::vector<SvgSeries>& series,
                            const std::string& x_label,
                            const std::string& y_label) {
    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c",
                                    "#9467bd", "#ff7f0e", "#8c564b"};
    const double width = 800, height = 500;
    const double ml = 70, mr = 20, mt = 20, mb = 50;

    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
    double ymin = xmin, ymax = -xmin;
    for (const auto& s : series) {
        for (double v : s.x) {
            xmin = std::min(xmin, v);
            xmax = std::max(xmax, v);
        }
        for (double v : s.y) {
            ymin = std::min(ymin, v);
            ymax = std::max(ymax, v);
        }
        for (double v : s.lo) ymin = std::min(ymin, v);
        for (double v : s.hi) ymax = std::max(ymax, v);
    }
    if (!(xmin < xmax)) {
        xmin -= 0.5;
        xmax += 0.5;
    }
    if (!(ymin < ymax)) {
        ymin -= 0.5;
        ymax += 0.5;
    }
    auto sx = [&](double v) {
        return ml + (v - xmin) / (xmax - xmin) * (width - ml - mr);
    };
    auto sy = [&](double v) {
        return height - mb - (v - ymin) / (ymax - ymin) * (height - mt - mb);
    };

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
        << "\" height=\"" << height << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<line x1=\"" << format_double(ml) << "\" y1=\"" << format_double(mt)
        << "\" x2=\"" << format_double(ml) << "\" y2=\""
        << format_double(height - mb) << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << format_double(ml) << "\" y1=\""
        << format_double(height - mb) << "\" x2=\"" << format_double(width - mr)
        << "\" y2=\"" << format_double(height - mb) << "\" stroke=\"black\"/>\n";

    int color = 0;
    for (const auto& s : series) {
        const char* c = palette[color % 6];
        if (s.lo.size() == s.x.size() && s.hi.size() == s.x.size() &&
            !s.x.empty()) {
            out << "<polygon fill=\"" << c << "\" fill-opacity=\"0.15\" "
                << "stroke=\"none\" points=\"";
            for (std::size_t i = 0; i < s.x.size(); ++i)
                out << format_double(sx(s.x[i])) << ','
                    << format_double(sy(s.hi[i])) << ' ';
            for (std::size_t i = s.x.size(); i-- > 0;)
                out << format_double(sx(s.x[i])) << ','
                    << format_double(sy(s.lo[i])) << ' ';
            out << "\"/>\n";
        }
        out << "<polyline fill=\"none\" stroke=\"" << c
            << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i)
            out << format_double(sx(s.x[i])) << ',' << format_double(sy(s.y[i]))
                << ' ';
        out << "\"/>\n";
        out << "<text x=\"" << format_double(width - mr - 150) << "\" y=\""
            << format_double(mt + 18 + 16 * color) << "\" fill=\"" << c
            << "\" font-size=\"13\">" << s.label << "</text>\n";
        ++color;
    }

    out << "<text x=\"" << format_double((ml + width - mr) / 2) << "\" y=\""
        << format_double(height - 12) << "\" font-size=\"13\" "
        << "text-anchor=\"middle\">" << x_label << "</text>\n";
    out << "<text x=\"16\" y=\"" << format_double((mt + height - mb) / 2)
        << "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
        << format_double((mt + height - mb) / 2) << ")\">" << y_label
        << "</text>\n";
    out << "<text x=\"" << format_double(ml) << "\" y=\""
        << format_double(height - mb + 16) << "\" font-size=\"11\">"
        << format_double(xmin) << "</text>\n";
    out << "<text x=\"" << format_double(width - mr) << "\" y=\""
        << format_double(height - mb + 16) << "\" font-size=\"11\" "
        << "text-anchor=\"end\">" << format_double(xmax) << "</text>\n";
    out << "<text x=\"" << format_double(ml - 4) << "\" y=\""
        << format_double(height - mb) << "\" font-size=\"11\" "
        << "text-anchor=\"end\">" << format_double(ymin) << "</text>\n";
    out << "<text x=\"" << format_double(ml - 4) << "\" y=\""
        << format_double(mt + 10) << "\" font-size=\"11\" text-anchor=\"end\">"
        << format_double(ymax) << "</text>\n";
    out << "</svg>\n";
    if (!out) throw IoError("write failed: " + path);
}

} // namespace sparkle
