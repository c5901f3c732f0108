#pragma once

// Self-contained deterministic SVG line plots. No fonts are embedded
// and no external resources referenced; identical specs render to
// byte-identical files, which is what makes plot artifacts diffable
// across runs.

#include <string>
#include <vector>

namespace mdlab {
namespace svg {

struct Series {
    std::string label;
    std::vector<double> x, y;
};

struct PlotSpec {
    std::string title;
    std::string xlabel, ylabel;
    bool logx = false, logy = false;
    std::vector<Series> series;
    int width = 720, height = 480;
};

// Renders the plot as one SVG document. Non-finite points, and
// nonpositive coordinates on a log axis, are dropped; a plot with no
// drawable points still renders (axes and a "no data" note), so the
// caller can always write the file it announced.
std::string render_line_plot(const PlotSpec& spec);

// Renders and writes; parent directory must exist.
void write_plot(const std::string& path, const PlotSpec& spec);

} // namespace svg
} // namespace mdlab
