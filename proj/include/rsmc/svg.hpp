#pragma once

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

// Minimal SVG line/bar charts for experiment outputs.
namespace rsmc::svg {

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    bool bars = false;
};

inline void chart(std::ostream& out, const std::string& title, const std::string& xlabel,
                  const std::string& ylabel, const std::vector<Series>& series,
                  double ymin = 0.0, double ymax = -1.0) {
    constexpr double W = 640, H = 400, L = 60, R = 20, T = 40, B = 50;
    double xmin = 1e300, xmax = -1e300, ytop = ymax;
    for (const auto& s : series) {
        for (double v : s.x) {
            xmin = std::min(xmin, v);
            xmax = std::max(xmax, v);
        }
        if (ymax < ymin) {
            for (double v : s.y) ytop = std::max(ytop, v);
        }
    }
    if (!(xmax > xmin)) xmax = xmin + 1.0;
    if (!(ytop > ymin)) ytop = ymin + 1.0;
    auto px = [&](double v) { return L + (v - xmin) / (xmax - xmin) * (W - L - R); };
    auto py = [&](double v) { return H - B - (v - ymin) / (ytop - ymin) * (H - T - B); };
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
    char buf[160];

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << title << "</text>\n"
        << "<text x=\"" << W / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\" font-size=\"12\">" << xlabel
        << "</text>\n"
        << "<text x=\"16\" y=\"" << H / 2 << "\" transform=\"rotate(-90 16 " << H / 2
        << ")\" text-anchor=\"middle\" font-size=\"12\">" << ylabel << "</text>\n";
    std::snprintf(buf, sizeof buf, "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"black\"/>\n", L, H - B,
                  W - R, H - B);
    out << buf;
    std::snprintf(buf, sizeof buf, "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"black\"/>\n", L, T, L,
                  H - B);
    out << buf;
    for (int t = 0; t <= 4; ++t) {
        const double xv = xmin + (xmax - xmin) * t / 4.0, yv = ymin + (ytop - ymin) * t / 4.0;
        std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"%g\" text-anchor=\"middle\" font-size=\"10\">%.3g</text>\n",
                      px(xv), H - B + 14, xv);
        out << buf;
        std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"%g\" text-anchor=\"end\" font-size=\"10\">%.3g</text>\n",
                      L - 4, py(yv) + 3, yv);
        out << buf;
    }
    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        const char* c = colors[k % 6];
        if (s.bars && s.x.size() > 1) {
            const double w = px(s.x[1]) - px(s.x[0]);
            for (std::size_t i = 0; i < s.x.size(); ++i) {
                std::snprintf(buf, sizeof buf,
                              "<rect x=\"%g\" y=\"%g\" width=\"%g\" height=\"%g\" fill=\"%s\" opacity=\"0.5\"/>\n",
                              px(s.x[i]) - w / 2, py(s.y[i]), w, py(ymin) - py(s.y[i]), c);
                out << buf;
            }
        } else {
            out << "<polyline fill=\"none\" stroke=\"" << c << "\" stroke-width=\"2\" points=\"";
            for (std::size_t i = 0; i < s.x.size(); ++i) {
                std::snprintf(buf, sizeof buf, "%g,%g ", px(s.x[i]), py(s.y[i]));
                out << buf;
            }
            out << "\"/>\n";
        }
        std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"%g\" font-size=\"11\" fill=\"%s\">%s</text>\n", W - R - 130,
                      T + 14.0 * static_cast<double>(k + 1), c, s.label.c_str());
        out << buf;
    }
    out << "</svg>\n";
}

}  // namespace rsmc::svg
