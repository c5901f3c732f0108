#include "mdlab/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "mdlab/errors.hpp"

namespace mdlab {
namespace svg {

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c",
                          "#9467bd", "#ff7f0e", "#8c564b"};
constexpr int kPaletteSize = 6;

std::string px(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string tick_label(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '&') out += "&amp;";
        else if (c == '<') out += "&lt;";
        else if (c == '>') out += "&gt;";
        else out += c;
    }
    return out;
}

struct Range {
    double lo = 0.0, hi = 1.0;
};

Range padded(double lo, double hi) {
    if (!(lo <= hi)) return {0.0, 1.0};
    if (lo == hi) {
        double pad = 0.5 * std::abs(lo) + 1.0;
        return {lo - pad, hi + pad};
    }
    double pad = 0.04 * (hi - lo);
    return {lo - pad, hi + pad};
}

} // namespace

std::string render_line_plot(const PlotSpec& spec) {
    const double ml = 74.0, mr = 22.0, mt = 44.0, mb = 56.0;
    const double W = spec.width, H = spec.height;
    const double pw = W - ml - mr, ph = H - mt - mb;

    // transformed, drawable points per series
    struct Pt {
        double x, y;
    };
    std::vector<std::vector<Pt>> pts(spec.series.size());
    double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo;
    double ylo = xlo, yhi = -xlo;
    for (size_t s = 0; s < spec.series.size(); ++s) {
        const Series& se = spec.series[s];
        size_t count = std::min(se.x.size(), se.y.size());
        for (size_t i = 0; i < count; ++i) {
            double x = se.x[i], y = se.y[i];
            if (!std::isfinite(x) || !std::isfinite(y)) continue;
            if (spec.logx) {
                if (x <= 0.0) continue;
                x = std::log10(x);
            }
            if (spec.logy) {
                if (y <= 0.0) continue;
                y = std::log10(y);
            }
            pts[s].push_back({x, y});
            xlo = std::min(xlo, x);
            xhi = std::max(xhi, x);
            ylo = std::min(ylo, y);
            yhi = std::max(yhi, y);
        }
    }
    bool empty = !(xlo <= xhi);
    Range rx = empty ? Range{0.0, 1.0} : padded(xlo, xhi);
    Range ry = empty ? Range{0.0, 1.0} : padded(ylo, yhi);

    auto X = [&](double v) { return ml + (v - rx.lo) / (rx.hi - rx.lo) * pw; };
    auto Y = [&](double v) { return mt + ph - (v - ry.lo) / (ry.hi - ry.lo) * ph; };

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << spec.width
      << "\" height=\"" << spec.height << "\" viewBox=\"0 0 " << spec.width << " "
      << spec.height << "\">\n";
    o << "<rect width=\"" << spec.width << "\" height=\"" << spec.height
      << "\" fill=\"#ffffff\"/>\n";
    o << "<text x=\"" << px(W / 2) << "\" y=\"24\" font-family=\"monospace\" "
         "font-size=\"15\" text-anchor=\"middle\">"
      << escape(spec.title) << "</text>\n";

    // gridlines and ticks: 5 evenly spaced in the transformed range
    for (int i = 0; i <= 4; ++i) {
        double fx = rx.lo + i * (rx.hi - rx.lo) / 4.0;
        double fy = ry.lo + i * (ry.hi - ry.lo) / 4.0;
        double gx = X(fx), gy = Y(fy);
        o << "<line x1=\"" << px(gx) << "\" y1=\"" << px(mt) << "\" x2=\"" << px(gx)
          << "\" y2=\"" << px(mt + ph) << "\" stroke=\"#dddddd\"/>\n";
        o << "<line x1=\"" << px(ml) << "\" y1=\"" << px(gy) << "\" x2=\""
          << px(ml + pw) << "\" y2=\"" << px(gy) << "\" stroke=\"#dddddd\"/>\n";
        double lx = spec.logx ? std::pow(10.0, fx) : fx;
        double ly = spec.logy ? std::pow(10.0, fy) : fy;
        o << "<text x=\"" << px(gx) << "\" y=\"" << px(mt + ph + 18)
          << "\" font-family=\"monospace\" font-size=\"11\" text-anchor=\"middle\">"
          << tick_label(lx) << "</text>\n";
        o << "<text x=\"" << px(ml - 8) << "\" y=\"" << px(gy + 4)
          << "\" font-family=\"monospace\" font-size=\"11\" text-anchor=\"end\">"
          << tick_label(ly) << "</text>\n";
    }

    // axes frame
    o << "<rect x=\"" << px(ml) << "\" y=\"" << px(mt) << "\" width=\"" << px(pw)
      << "\" height=\"" << px(ph) << "\" fill=\"none\" stroke=\"#333333\"/>\n";
    o << "<text x=\"" << px(ml + pw / 2) << "\" y=\"" << px(H - 14)
      << "\" font-family=\"monospace\" font-size=\"12\" text-anchor=\"middle\">"
      << escape(spec.xlabel) << "</text>\n";
    o << "<text x=\"18\" y=\"" << px(mt + ph / 2)
      << "\" font-family=\"monospace\" font-size=\"12\" text-anchor=\"middle\" "
         "transform=\"rotate(-90 18 "
      << px(mt + ph / 2) << ")\">" << escape(spec.ylabel) << "</text>\n";

    if (empty) {
        o << "<text x=\"" << px(ml + pw / 2) << "\" y=\"" << px(mt + ph / 2)
          << "\" font-family=\"monospace\" font-size=\"13\" text-anchor=\"middle\" "
             "fill=\"#888888\">no data</text>\n";
    }

    for (size_t s = 0; s < pts.size(); ++s) {
        if (pts[s].empty()) continue;
        const char* color = kPalette[s % kPaletteSize];
        o << "<polyline fill=\"none\" stroke=\"" << color
          << "\" stroke-width=\"1.5\" points=\"";
        for (size_t i = 0; i < pts[s].size(); ++i) {
            if (i) o << " ";
            o << px(X(pts[s][i].x)) << "," << px(Y(pts[s][i].y));
        }
        o << "\"/>\n";
        if (pts[s].size() <= 32) {
            for (const Pt& p : pts[s])
                o << "<circle cx=\"" << px(X(p.x)) << "\" cy=\"" << px(Y(p.y))
                  << "\" r=\"2.5\" fill=\"" << color << "\"/>\n";
        }
    }

    // legend, top-right inside the frame
    double ly = mt + 16.0;
    for (size_t s = 0; s < spec.series.size(); ++s) {
        if (spec.series[s].label.empty()) continue;
        const char* color = kPalette[s % kPaletteSize];
        o << "<line x1=\"" << px(ml + pw - 150) << "\" y1=\"" << px(ly - 4)
          << "\" x2=\"" << px(ml + pw - 126) << "\" y2=\"" << px(ly - 4)
          << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        o << "<text x=\"" << px(ml + pw - 120) << "\" y=\"" << px(ly)
          << "\" font-family=\"monospace\" font-size=\"11\">"
          << escape(spec.series[s].label) << "</text>\n";
        ly += 16.0;
    }

    o << "</svg>\n";
    return o.str();
}

void write_plot(const std::string& path, const PlotSpec& spec) {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), "cannot open plot file '" + path + "' for writing");
    std::string body = render_line_plot(spec);
    out.write(body.data(), (std::streamsize)body.size());
    require(out.good(), "failed writing plot file '" + path + "'");
}

} // namespace svg
} // namespace mdlab
