#pragma once

// Uniform space and time grids, scalar space-time fields sampled on
// grid nodes x time levels, and the discrete norms / inner products the
// rest of the project is built on.
//
// Conventions used everywhere:
//   - space nodes   x_j = j*dx, j = 0..n, dx = L/n  (n+1 nodes)
//   - time levels   t_k = k*dt, k = 0..m, dt = T/m  (m+1 levels)
//   - quadrature in x: control-volume weights dx/2 at the two boundary
//     nodes, dx in the interior (equals trapezoid weights on a uniform
//     grid). These are the weights under which the discrete diffusion
//     operator is self-adjoint, so every duality/transpose statement in
//     the project is with respect to them.
//   - quadrature in t: trapezoid weights dt/2, dt, ..., dt, dt/2.

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "mdlab/errors.hpp"

namespace mdlab {

struct Grid1D {
    double L = 1.0; // domain (0, L)
    int n = 8;      // number of cells; n+1 nodes

    Grid1D() = default;
    Grid1D(double L_, int n_) : L(L_), n(n_) {
        require(L > 0.0, "Grid1D: L must be positive");
        require(n >= 8, "Grid1D: need at least 8 cells");
    }

    double dx() const { return L / n; }
    double x(int j) const { return j * dx(); }
    int npts() const { return n + 1; }

    // Control-volume weight of node j.
    double wx(int j) const { return (j == 0 || j == n) ? 0.5 * dx() : dx(); }
};

struct TimeGrid {
    double T = 1.0; // horizon (0, T)
    int m = 8;      // number of steps; m+1 levels

    TimeGrid() = default;
    TimeGrid(double T_, int m_) : T(T_), m(m_) {
        require(T > 0.0, "TimeGrid: T must be positive");
        require(m >= 8, "TimeGrid: need at least 8 steps");
    }

    double dt() const { return T / m; }
    double t(int k) const { return k * dt(); }
    int npts() const { return m + 1; }

    // Trapezoid weight of level k.
    double wt(int k) const { return (k == 0 || k == m) ? 0.5 * dt() : dt(); }
};

// One spatial level: values at the n+1 nodes.
using Level = std::vector<double>;

// Scalar field on the tensor grid, stored level-contiguous.
class SpaceTimeField {
public:
    SpaceTimeField() = default;
    SpaceTimeField(const Grid1D& g, const TimeGrid& tg)
        : grid_(g), time_(tg), data_((size_t)tg.npts() * g.npts(), 0.0) {}

    const Grid1D& grid() const { return grid_; }
    const TimeGrid& time() const { return time_; }

    double& at(int k, int j) { return data_[idx(k, j)]; }
    double at(int k, int j) const { return data_[idx(k, j)]; }

    double* level(int k) { return data_.data() + idx(k, 0); }
    const double* level(int k) const { return data_.data() + idx(k, 0); }

    Level level_copy(int k) const {
        return Level(level(k), level(k) + grid_.npts());
    }
    void set_level(int k, const Level& v) {
        require((int)v.size() == grid_.npts(), "SpaceTimeField: level size mismatch");
        for (int j = 0; j < grid_.npts(); ++j) at(k, j) = v[j];
    }

    bool same_layout(const SpaceTimeField& o) const {
        return grid_.n == o.grid_.n && time_.m == o.time_.m &&
               grid_.L == o.grid_.L && time_.T == o.time_.T;
    }

    std::vector<double>& raw() { return data_; }
    const std::vector<double>& raw() const { return data_; }

private:
    size_t idx(int k, int j) const { return (size_t)k * grid_.npts() + j; }

    Grid1D grid_;
    TimeGrid time_;
    std::vector<double> data_;
};

// Sample f(x, t) on the tensor grid.
SpaceTimeField sample_field(const Grid1D& g, const TimeGrid& tg,
                            const std::function<double(double, double)>& f);

// Sample f(x) on the nodes.
Level sample_level(const Grid1D& g, const std::function<double(double)>& f);

// ---- discrete norms and inner products -----------------------------------

double dot_space(const Level& a, const Level& b, const Grid1D& g);
double norm_space(const Level& a, const Grid1D& g); // sqrt(dot_space(a,a))
double norm_linf(const Level& a);

// L2 norm of one stored level of a field.
double norm_space(const SpaceTimeField& f, int k);

// Space-time L2: trapezoid in t of the squared spatial norms.
double dot_space_time(const SpaceTimeField& a, const SpaceTimeField& b);
double norm_space_time(const SpaceTimeField& a);
double norm_linf(const SpaceTimeField& a);

// ---- deterministic CSV io -------------------------------------------------

// Long format with header "x,t,value"; one row per (node, level), time
// level outer, node inner. Numbers are printed with round-trip %.17g in
// the C locale so identical runs produce byte-identical files.
void write_field_csv(const std::string& path, const SpaceTimeField& f);
SpaceTimeField read_field_csv(const std::string& path);

// Same determinism rules for an arbitrary rectangular table.
void write_table_csv(const std::string& path,
                     const std::vector<std::string>& header,
                     const std::vector<std::vector<double>>& rows);

std::string format_double(double v); // shared %.17g formatter

} // namespace mdlab
