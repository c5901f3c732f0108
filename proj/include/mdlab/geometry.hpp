#pragma once

// Moving control supports. A support is a sweeping interval
// omega0(t) = (c(t) - l, c(t) + l) ∩ (0, L) whose center c runs from
// the left margin eps to L - eps over [0, T]. The geometric assumption
// behind the controllability machinery requires the support to touch
// the left boundary region at early times (t <= t1), sweep through the
// interior (t1 < t < t2, complement has two components), and reach the
// right boundary region at late times. check_assumption validates this
// clause by clause; build_nested produces the strictly nested triple
// omega0 ⊂ omega1 ⊂ omega used by the control synthesis and the
// cutoff constructions.

#include <string>
#include <utility>
#include <vector>

#include "mdlab/grid.hpp"

namespace mdlab {
namespace geometry {

struct Interval1D {
    double lo = 0.0;
    double hi = 0.0;
    double length() const { return hi - lo; }
    bool contains(double x) const { return lo < x && x < hi; }
    bool contains_closed(double x) const { return lo <= x && x <= hi; }
};

// Strictly increasing center path c(t). Affine by default; arbitrary
// monotone paths are accepted as (t, c) samples interpolated with a
// monotonicity-preserving cubic (Fritsch-Carlson slopes).
class CenterPath {
public:
    // Degenerate resting path c ≡ 0; every public factory replaces it.
    CenterPath() = default;

    static CenterPath affine(double L, double T, double margin);
    static CenterPath tabulated(std::vector<std::pair<double, double>> samples);

    double value(double t) const;
    double deriv(double t) const;
    double second(double t) const;

    bool is_affine() const { return affine_; }

private:
    bool affine_ = true;
    double c0_ = 0.0, slope_ = 0.0; // affine form c0 + slope * t

    // tabulated form: cubic Hermite on knots with monotone slopes
    std::vector<double> tk_, ck_, mk_;
    int segment(double t) const;
};

struct MovingDomain {
    double L = 1.0;
    double T = 1.0;
    CenterPath center;
    double half_width = 0.2; // l
    double margin = 0.05;    // eps, with 0 < eps < l and c(0)=eps, c(T)=L-eps
    double t1 = 0.0;         // unique time with c(t1) = l
    double t2 = 0.0;         // unique time with c(t2) = L - l

    double c(double t) const { return center.value(t); }
    double dc(double t) const { return center.deriv(t); }
    double ddc(double t) const { return center.second(t); }

    // The support at time t, clipped to (0, L).
    Interval1D interval(double t) const;
};

// Canonical affine-center family. Validates all MovingDomain invariants
// (margins, widths, monotonicity, endpoint values) and computes t1, t2.
MovingDomain make_moving_domain(double L, double T, double half_width, double margin);

// Same validation for a tabulated center path; samples must start at
// (0, margin) and end at (T, L - margin).
MovingDomain make_moving_domain(double L, double T, double half_width, double margin,
                                std::vector<std::pair<double, double>> center_samples);

struct AssumptionReport {
    bool pass = false;
    bool clause_a = false; // omega0(t) never equals (0, L)
    bool clause_b = false; // sampled supports cover (0, L)
    bool clause_c = false; // complement connected for t <= t1 and t >= t2
    bool clause_d = false; // complement has two components for t1 < t < t2
    double t1 = 0.0;
    double t2 = 0.0;
    std::string diagnostic;
};

AssumptionReport check_assumption(const MovingDomain& dom, int nt);

struct NestedSupports {
    MovingDomain omega0;
    MovingDomain omega1;
    MovingDomain omega;
};

// Copy of dom with a different half-width; recomputes t1, t2.
MovingDomain make_moving_domain_like(const MovingDomain& dom, double half_width);

// Concentric nesting with half-widths l < l1 < lw < L/2.
NestedSupports build_nested(const MovingDomain& dom, double l1, double lw);

// Rejects grids too coarse to separate the nested supports (margin
// between consecutive half-widths must be at least one cell).
void verify_nesting(const NestedSupports& sup, const Grid1D& g);

enum class CutoffPair {
    omega0_in_omega1, // 1 on omega0(t), 0 outside omega1(t)
    omega1_in_omega,  // 1 on omega1(t), 0 outside omega(t)
};

// Smooth space-time cutoff: quintic ramp with vanishing first and
// second derivatives at both ends of the transition band.
double cutoff(const NestedSupports& sup, CutoffPair pair, double x, double t);

// 0/1 indicator of dom's support sampled on grid nodes x time levels.
SpaceTimeField support_mask(const MovingDomain& dom, const Grid1D& g, const TimeGrid& tg);

// 0/1 indicator of a fixed interval, replicated over all time levels.
SpaceTimeField interval_mask(const Interval1D& iv, const Grid1D& g, const TimeGrid& tg);

// Time-average measure of dom's (clipped) support, trapezoid in t.
double average_support_measure(const MovingDomain& dom, int nt);

} // namespace geometry
} // namespace mdlab
