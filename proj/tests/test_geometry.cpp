// Sweeping support geometry: the canonical affine sweep, its crossing
// times, the four-clause structural check, nesting, cutoffs, and masks.

#include <cmath>
#include <vector>

#include "doctest.h"
#include "mdlab/geometry.hpp"

using namespace mdlab;
using namespace mdlab::geometry;

namespace {

MovingDomain canonical() { return make_moving_domain(1.0, 1.0, 0.2, 0.05); }

} // namespace

TEST_CASE("canonical sweep has the analytic crossing times") {
    MovingDomain dom = canonical();
    // c(t) = 0.05 + 0.9 t; c(t1) = 0.2 and c(t2) = 0.8
    CHECK(dom.t1 == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
    CHECK(dom.t2 == doctest::Approx(5.0 / 6.0).epsilon(1e-12));
    CHECK(dom.c(0.0) == doctest::Approx(0.05).epsilon(1e-14));
    CHECK(dom.c(1.0) == doctest::Approx(0.95).epsilon(1e-14));
    CHECK(dom.dc(0.5) == doctest::Approx(0.9).epsilon(1e-14));

    Interval1D iv0 = dom.interval(0.0);
    CHECK(iv0.lo == 0.0); // clipped at the left boundary
    CHECK(iv0.hi == doctest::Approx(0.25).epsilon(1e-14));
}

TEST_CASE("canonical sweep passes every structural clause") {
    AssumptionReport rep = check_assumption(canonical(), 128);
    CHECK(rep.pass);
    CHECK(rep.clause_a);
    CHECK(rep.clause_b);
    CHECK(rep.clause_c);
    CHECK(rep.clause_d);
    CHECK(rep.t1 == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
}

TEST_CASE("a nearly static support fails the coverage clause") {
    // Construct the domain by hand: the factory rejects non-sweeping
    // center paths outright, which is itself part of the contract.
    MovingDomain dom;
    dom.L = 1.0;
    dom.T = 1.0;
    dom.center = CenterPath::tabulated({{0.0, 0.4999}, {1.0, 0.5001}});
    dom.half_width = 0.1;
    dom.margin = 0.05;
    dom.t1 = 0.4;
    dom.t2 = 0.6;
    AssumptionReport rep = check_assumption(dom, 64);
    CHECK_FALSE(rep.clause_b);
    CHECK_FALSE(rep.pass);
    CHECK(rep.diagnostic.find("clause(b)") != std::string::npos);
}

TEST_CASE("a support filling the whole domain fails the properness clause") {
    MovingDomain dom;
    dom.L = 1.0;
    dom.T = 1.0;
    dom.center = CenterPath::affine(1.0, 1.0, 0.05);
    dom.half_width = 0.7; // covers (0,1) at mid-sweep
    dom.margin = 0.05;
    dom.t1 = 0.3;
    dom.t2 = 0.7;
    AssumptionReport rep = check_assumption(dom, 64);
    CHECK_FALSE(rep.clause_a);
    CHECK_FALSE(rep.pass);
}

TEST_CASE("factory validation rejects degenerate sweeps") {
    // margin >= half_width: the sweep cannot cover the domain
    CHECK_THROWS_AS(make_moving_domain(1.0, 1.0, 0.2, 0.25), precondition_error);
    // 2*half_width >= L: crossing times cannot be ordered
    CHECK_THROWS_AS(make_moving_domain(1.0, 1.0, 0.5, 0.05), precondition_error);
    // center path must be strictly increasing
    CHECK_THROWS_AS(CenterPath::tabulated({{0.0, 0.5}, {1.0, 0.4}}),
                    precondition_error);
    // tabulated paths must land on the margins
    CHECK_THROWS_AS(
        make_moving_domain(1.0, 1.0, 0.2, 0.05, {{0.0, 0.1}, {1.0, 0.95}}),
        precondition_error);
}

TEST_CASE("tabulated monotone centers work end to end") {
    // Nonuniform but strictly increasing path from margin to L - margin.
    MovingDomain dom = make_moving_domain(
        1.0, 1.0, 0.2, 0.05,
        {{0.0, 0.05}, {0.3, 0.2}, {0.6, 0.7}, {1.0, 0.95}});
    CHECK(dom.c(0.0) == doctest::Approx(0.05).epsilon(1e-12));
    CHECK(dom.c(1.0) == doctest::Approx(0.95).epsilon(1e-12));
    CHECK(0.0 < dom.t1);
    CHECK(dom.t1 < dom.t2);
    CHECK(dom.t2 < 1.0);
    CHECK(check_assumption(dom, 128).pass);
}

TEST_CASE("nested triple construction enforces strict ordering") {
    MovingDomain dom = canonical();
    NestedSupports sup = build_nested(dom, 0.25, 0.3);
    CHECK(sup.omega0.half_width == 0.2);
    CHECK(sup.omega1.half_width == 0.25);
    CHECK(sup.omega.half_width == 0.3);
    // wider supports leave the left boundary later and reach the right
    // one earlier, so their interior-sweep phase is strictly shorter
    CHECK(sup.omega1.t1 < sup.omega.t1);
    CHECK(sup.omega1.t2 > sup.omega.t2);

    CHECK_THROWS_AS(build_nested(dom, 0.2, 0.3), precondition_error);
    CHECK_THROWS_AS(build_nested(dom, 0.25, 0.6), precondition_error);
}

TEST_CASE("nesting margins must resolve to at least one cell") {
    NestedSupports sup = build_nested(canonical(), 0.25, 0.3);
    CHECK_NOTHROW(verify_nesting(sup, Grid1D(1.0, 64)));
    // dx = 1/16 = 0.0625 exceeds the 0.05 margin between half-widths
    CHECK_THROWS_AS(verify_nesting(sup, Grid1D(1.0, 16)), precondition_error);
}

TEST_CASE("cutoff is one inside, zero outside, monotone across the band") {
    NestedSupports sup = build_nested(canonical(), 0.25, 0.3);
    for (double t : {0.1, 0.5, 0.9}) {
        double c = sup.omega0.c(t);
        CHECK(cutoff(sup, CutoffPair::omega0_in_omega1, c, t) == 1.0);
        // probe toward the side with room inside [0, L]
        double dir = c > 0.5 ? -1.0 : 1.0;
        // outside omega1 (distance > 0.25) the inner cutoff vanishes
        CHECK(cutoff(sup, CutoffPair::omega0_in_omega1, c + dir * 0.27, t) == 0.0);
        // mid-band value strictly between 0 and 1
        double mid = cutoff(sup, CutoffPair::omega0_in_omega1, c + dir * 0.225, t);
        CHECK(mid > 0.0);
        CHECK(mid < 1.0);
        // monotone decay with distance across the band
        double prev = 1.0;
        for (int i = 0; i <= 20; ++i) {
            double d = 0.2 + 0.05 * i / 20.0;
            double val = cutoff(sup, CutoffPair::omega0_in_omega1, c + dir * d, t);
            CHECK(val <= prev + 1e-15);
            prev = val;
        }
    }
    // outer pair: 1 on omega1, 0 outside omega
    double c = sup.omega0.c(0.5);
    CHECK(cutoff(sup, CutoffPair::omega1_in_omega, c + 0.24, 0.5) == 1.0);
    CHECK(cutoff(sup, CutoffPair::omega1_in_omega, c + 0.31, 0.5) == 0.0);
}

TEST_CASE("support masks are exact indicators on grid nodes") {
    MovingDomain dom = canonical();
    Grid1D g(1.0, 32);
    TimeGrid tg(1.0, 16);
    SpaceTimeField mask = geometry::support_mask(dom, g, tg);
    for (int k = 0; k <= tg.m; ++k) {
        Interval1D iv = dom.interval(tg.t(k));
        for (int j = 0; j <= g.n; ++j) {
            double expect = iv.contains(g.x(j)) ? 1.0 : 0.0;
            CHECK(mask.at(k, j) == expect);
        }
    }

    Interval1D fixed{0.3, 0.6};
    SpaceTimeField fmask = interval_mask(fixed, g, tg);
    for (int k = 0; k <= tg.m; ++k)
        for (int j = 0; j <= g.n; ++j)
            CHECK(fmask.at(k, j) == (fixed.contains(g.x(j)) ? 1.0 : 0.0));
}

TEST_CASE("time-average support measure matches the closed form") {
    // |omega0(t)| = 0.25 + 0.9 t on [0, 1/6], 0.4 on [1/6, 5/6], mirrored:
    // integral = 2 * (0.25/6 + 0.45/36) + 0.4 * 2/3 = 0.375
    CHECK(average_support_measure(canonical(), 2000) ==
          doctest::Approx(0.375).epsilon(1e-4));
}
