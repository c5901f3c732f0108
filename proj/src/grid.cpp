#include "mdlab/grid.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace mdlab {

SpaceTimeField sample_field(const Grid1D& g, const TimeGrid& tg,
                            const std::function<double(double, double)>& f) {
    SpaceTimeField out(g, tg);
    for (int k = 0; k <= tg.m; ++k)
        for (int j = 0; j <= g.n; ++j)
            out.at(k, j) = f(g.x(j), tg.t(k));
    return out;
}

Level sample_level(const Grid1D& g, const std::function<double(double)>& f) {
    Level out(g.npts());
    for (int j = 0; j <= g.n; ++j) out[j] = f(g.x(j));
    return out;
}

double dot_space(const Level& a, const Level& b, const Grid1D& g) {
    require((int)a.size() == g.npts() && (int)b.size() == g.npts(),
            "dot_space: size mismatch");
    double s = 0.0;
    for (int j = 0; j <= g.n; ++j) s += g.wx(j) * a[j] * b[j];
    return s;
}

double norm_space(const Level& a, const Grid1D& g) {
    return std::sqrt(dot_space(a, a, g));
}

double norm_linf(const Level& a) {
    double s = 0.0;
    for (double v : a) s = std::max(s, std::abs(v));
    return s;
}

double norm_space(const SpaceTimeField& f, int k) {
    const Grid1D& g = f.grid();
    double s = 0.0;
    for (int j = 0; j <= g.n; ++j) s += g.wx(j) * f.at(k, j) * f.at(k, j);
    return std::sqrt(s);
}

double dot_space_time(const SpaceTimeField& a, const SpaceTimeField& b) {
    require(a.same_layout(b), "dot_space_time: layout mismatch");
    const Grid1D& g = a.grid();
    const TimeGrid& tg = a.time();
    double s = 0.0;
    for (int k = 0; k <= tg.m; ++k) {
        double lvl = 0.0;
        for (int j = 0; j <= g.n; ++j) lvl += g.wx(j) * a.at(k, j) * b.at(k, j);
        s += tg.wt(k) * lvl;
    }
    return s;
}

double norm_space_time(const SpaceTimeField& a) {
    return std::sqrt(dot_space_time(a, a));
}

double norm_linf(const SpaceTimeField& a) {
    double s = 0.0;
    for (double v : a.raw()) s = std::max(s, std::abs(v));
    return s;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_field_csv(const std::string& path, const SpaceTimeField& f) {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), "write_field_csv: cannot open " + path);
    out << "x,t,value\n";
    const Grid1D& g = f.grid();
    const TimeGrid& tg = f.time();
    for (int k = 0; k <= tg.m; ++k)
        for (int j = 0; j <= g.n; ++j)
            out << format_double(g.x(j)) << ',' << format_double(tg.t(k)) << ','
                << format_double(f.at(k, j)) << '\n';
    require(out.good(), "write_field_csv: write failed for " + path);
}

SpaceTimeField read_field_csv(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), "read_field_csv: cannot open " + path);
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), "read_field_csv: empty file");
    require(line == "x,t,value", "read_field_csv: unexpected header in " + path);

    std::vector<double> xs, ts, vs;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string a, b, c;
        require(static_cast<bool>(std::getline(ss, a, ',')) &&
                static_cast<bool>(std::getline(ss, b, ',')) &&
                static_cast<bool>(std::getline(ss, c)),
                "read_field_csv: malformed row");
        xs.push_back(std::stod(a));
        ts.push_back(std::stod(b));
        vs.push_back(std::stod(c));
    }
    require(!xs.empty(), "read_field_csv: no data rows");

    // Recover (n, m) from the level-outer row order: x repeats with
    // period n+1, t is constant within a level.
    int npts = 1;
    while (npts < (int)xs.size() && !(ts[npts] > ts[npts - 1])) ++npts;
    require((int)xs.size() % npts == 0, "read_field_csv: ragged table");
    int mlev = (int)xs.size() / npts;
    Grid1D g(xs[npts - 1], npts - 1);
    TimeGrid tg(ts.back(), mlev - 1);
    SpaceTimeField f(g, tg);
    for (int k = 0; k < mlev; ++k)
        for (int j = 0; j < npts; ++j)
            f.at(k, j) = vs[(size_t)k * npts + j];
    return f;
}

void write_table_csv(const std::string& path,
                     const std::vector<std::string>& header,
                     const std::vector<std::vector<double>>& rows) {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), "write_table_csv: cannot open " + path);
    for (size_t i = 0; i < header.size(); ++i)
        out << header[i] << (i + 1 < header.size() ? "," : "\n");
    for (const auto& row : rows) {
        require(row.size() == header.size(), "write_table_csv: ragged row");
        for (size_t i = 0; i < row.size(); ++i)
            out << format_double(row[i]) << (i + 1 < row.size() ? "," : "\n");
    }
    require(out.good(), "write_table_csv: write failed for " + path);
}

} // namespace mdlab
