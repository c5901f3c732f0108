#include "mdlab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mdlab {
namespace geometry {

// ---- CenterPath -----------------------------------------------------------

CenterPath CenterPath::affine(double L, double T, double margin) {
    CenterPath p;
    p.affine_ = true;
    p.c0_ = margin;
    p.slope_ = (L - 2.0 * margin) / T;
    return p;
}

CenterPath CenterPath::tabulated(std::vector<std::pair<double, double>> samples) {
    require(samples.size() >= 2, "CenterPath: need at least 2 samples");
    std::sort(samples.begin(), samples.end());
    CenterPath p;
    p.affine_ = false;
    int n = (int)samples.size();
    p.tk_.resize(n);
    p.ck_.resize(n);
    for (int i = 0; i < n; ++i) {
        p.tk_[i] = samples[i].first;
        p.ck_[i] = samples[i].second;
        if (i > 0) {
            require(p.tk_[i] > p.tk_[i - 1], "CenterPath: duplicate sample times");
            require(p.ck_[i] > p.ck_[i - 1],
                    "CenterPath: center samples must be strictly increasing");
        }
    }

    // Fritsch-Carlson monotone slopes: harmonic mean of neighboring
    // secants at interior knots, clamped one-sided estimates at ends.
    std::vector<double> h(n - 1), d(n - 1);
    for (int i = 0; i + 1 < n; ++i) {
        h[i] = p.tk_[i + 1] - p.tk_[i];
        d[i] = (p.ck_[i + 1] - p.ck_[i]) / h[i];
    }
    p.mk_.assign(n, 0.0);
    for (int i = 1; i + 1 < n; ++i) {
        double w1 = 2.0 * h[i] + h[i - 1];
        double w2 = h[i] + 2.0 * h[i - 1];
        p.mk_[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
    }
    // Clamp into (0, 3d]: a nonpositive shape estimate falls back to the
    // one-sided secant so the path stays strictly increasing end to end.
    auto clamp_end = [](double m, double dd) {
        if (m * dd <= 0.0) return dd;
        if (std::abs(m) > 3.0 * std::abs(dd)) return 3.0 * dd;
        return m;
    };
    p.mk_[0] = clamp_end(d[0] + (d[0] - (n > 2 ? d[1] : d[0])) * h[0] /
                                    (h[0] + (n > 2 ? h[1] : h[0])),
                         d[0]);
    p.mk_[n - 1] = clamp_end(d[n - 2] + (d[n - 2] - (n > 2 ? d[n - 3] : d[n - 2])) *
                                            h[n - 2] /
                                            (h[n - 2] + (n > 2 ? h[n - 3] : h[n - 2])),
                             d[n - 2]);
    return p;
}

int CenterPath::segment(double t) const {
    int n = (int)tk_.size();
    if (t <= tk_.front()) return 0;
    if (t >= tk_[n - 2]) return n - 2;
    int i = (int)(std::upper_bound(tk_.begin(), tk_.end(), t) - tk_.begin()) - 1;
    return std::clamp(i, 0, n - 2);
}

double CenterPath::value(double t) const {
    if (affine_) return c0_ + slope_ * t;
    int i = segment(t);
    double h = tk_[i + 1] - tk_[i];
    double u = (t - tk_[i]) / h;
    double h00 = (1.0 + 2.0 * u) * (1.0 - u) * (1.0 - u);
    double h10 = u * (1.0 - u) * (1.0 - u);
    double h01 = u * u * (3.0 - 2.0 * u);
    double h11 = u * u * (u - 1.0);
    return h00 * ck_[i] + h10 * h * mk_[i] + h01 * ck_[i + 1] + h11 * h * mk_[i + 1];
}

double CenterPath::deriv(double t) const {
    if (affine_) return slope_;
    int i = segment(t);
    double h = tk_[i + 1] - tk_[i];
    double u = (t - tk_[i]) / h;
    double d00 = 6.0 * u * (u - 1.0) / h;
    double d10 = (1.0 - u) * (1.0 - 3.0 * u);
    double d01 = -d00;
    double d11 = u * (3.0 * u - 2.0);
    return d00 * ck_[i] + d10 * mk_[i] + d01 * ck_[i + 1] + d11 * mk_[i + 1];
}

double CenterPath::second(double t) const {
    if (affine_) return 0.0;
    int i = segment(t);
    double h = tk_[i + 1] - tk_[i];
    double u = (t - tk_[i]) / h;
    double s00 = (12.0 * u - 6.0) / (h * h);
    double s10 = (6.0 * u - 4.0) / h;
    double s01 = -s00;
    double s11 = (6.0 * u - 2.0) / h;
    return s00 * ck_[i] + s10 * mk_[i] + s01 * ck_[i + 1] + s11 * mk_[i + 1];
}

// ---- MovingDomain ---------------------------------------------------------

Interval1D MovingDomain::interval(double t) const {
    double cc = c(t);
    return {std::max(0.0, cc - half_width), std::min(L, cc + half_width)};
}

namespace {

// Monotone root solve c(t*) = target on [0, T].
double center_crossing(const CenterPath& path, double T, double target) {
    double lo = 0.0, hi = T;
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        if (path.value(mid) < target) lo = mid; else hi = mid;
    }
    return 0.5 * (lo + hi);
}

MovingDomain finish_domain(double L, double T, double half_width, double margin,
                           CenterPath path) {
    require(L > 0.0 && T > 0.0, "MovingDomain: L and T must be positive");
    require(margin > 0.0, "MovingDomain: margin must be positive");
    require(half_width > margin, "MovingDomain: need half_width > margin "
                                 "(otherwise the sweep cannot cover (0,L))");
    require(2.0 * half_width < L, "MovingDomain: need 2*half_width < L "
                                  "(otherwise t1 < t2 fails)");

    double tol = 1e-9 * L;
    require(std::abs(path.value(0.0) - margin) <= tol,
            "MovingDomain: center must start at the margin, c(0) = eps");
    require(std::abs(path.value(T) - (L - margin)) <= tol,
            "MovingDomain: center must end at L - margin");
    int nchk = 4096;
    for (int i = 0; i <= nchk; ++i) {
        double t = T * i / nchk;
        require(path.deriv(t) > 0.0, "MovingDomain: center path must be strictly "
                                     "increasing (c'(t) > 0)");
    }

    MovingDomain dom;
    dom.L = L;
    dom.T = T;
    dom.center = std::move(path);
    dom.half_width = half_width;
    dom.margin = margin;
    if (dom.center.is_affine()) {
        double slope = (L - 2.0 * margin) / T;
        dom.t1 = (half_width - margin) / slope;
        dom.t2 = (L - half_width - margin) / slope;
    } else {
        dom.t1 = center_crossing(dom.center, T, half_width);
        dom.t2 = center_crossing(dom.center, T, L - half_width);
    }
    require(0.0 < dom.t1 && dom.t1 < dom.t2 && dom.t2 < T,
            "MovingDomain: crossing times must satisfy 0 < t1 < t2 < T");
    return dom;
}

} // namespace

MovingDomain make_moving_domain(double L, double T, double half_width, double margin) {
    return finish_domain(L, T, half_width, margin, CenterPath::affine(L, T, margin));
}

MovingDomain make_moving_domain(double L, double T, double half_width, double margin,
                                std::vector<std::pair<double, double>> center_samples) {
    return finish_domain(L, T, half_width, margin,
                         CenterPath::tabulated(std::move(center_samples)));
}

// ---- assumption check -----------------------------------------------------

AssumptionReport check_assumption(const MovingDomain& dom, int nt) {
    require(nt >= 3, "check_assumption: need nt >= 3 time samples");

    AssumptionReport rep;
    rep.t1 = dom.t1;
    rep.t2 = dom.t2;
    std::ostringstream diag;

    const double len_tol = 1e-12 * dom.L;

    // (a) the support never fills the whole domain
    rep.clause_a = true;
    for (int i = 0; i <= nt; ++i) {
        double t = dom.T * i / nt;
        Interval1D iv = dom.interval(t);
        if (iv.lo <= len_tol && iv.hi >= dom.L - len_tol) {
            rep.clause_a = false;
            diag << "clause(a): support equals (0,L) at t=" << t
                 << " (half_width too large); ";
            break;
        }
    }

    // (b) the union of sampled supports covers (0, L); supports are
    // sorted by construction (center increasing), so merge directly.
    // Tolerated uncovered length: one time-sample cell's worth of sweep.
    {
        double cover_tol = dom.L / nt;
        double covered_to = 0.0;
        double gap = 0.0;
        for (int i = 0; i <= nt; ++i) {
            Interval1D iv = dom.interval(dom.T * i / nt);
            if (iv.lo > covered_to) gap += iv.lo - covered_to;
            covered_to = std::max(covered_to, iv.hi);
        }
        gap += std::max(0.0, dom.L - covered_to);
        rep.clause_b = gap <= cover_tol;
        if (!rep.clause_b)
            diag << "clause(b): union of sampled supports leaves " << gap
                 << " of (0,L) uncovered; ";
    }

    // (c)/(d) complement component counts. Samples falling inside a
    // small band around t1, t2 are skipped (the count changes there).
    {
        rep.clause_c = true;
        rep.clause_d = true;
        double band = 1e-6 * dom.T;
        for (int i = 0; i <= nt; ++i) {
            double t = dom.T * i / nt;
            Interval1D iv = dom.interval(t);
            int comps = (iv.lo > len_tol ? 1 : 0) + (iv.hi < dom.L - len_tol ? 1 : 0);
            if (t <= dom.t1 - band || t >= dom.t2 + band) {
                if (comps != 1) {
                    rep.clause_c = false;
                    diag << "clause(c): complement has " << comps
                         << " components at t=" << t << " (expected 1); ";
                }
            } else if (t >= dom.t1 + band && t <= dom.t2 - band) {
                if (comps != 2) {
                    rep.clause_d = false;
                    diag << "clause(d): complement has " << comps
                         << " components at t=" << t << " (expected 2); ";
                }
            }
        }
    }

    rep.pass = rep.clause_a && rep.clause_b && rep.clause_c && rep.clause_d;
    rep.diagnostic = diag.str();
    return rep;
}

// ---- nesting --------------------------------------------------------------

NestedSupports build_nested(const MovingDomain& dom, double l1, double lw) {
    require(dom.half_width < l1, "build_nested: need half_width(omega0) < l1");
    require(l1 < lw, "build_nested: need l1 < l_omega");
    require(lw < 0.5 * dom.L, "build_nested: need l_omega < L/2");

    NestedSupports sup;
    sup.omega0 = dom;
    // Crossing times are specific to the half-width; the wider supports
    // get t1/t2 consistent with their own widths.
    sup.omega1 = make_moving_domain_like(dom, l1);
    sup.omega = make_moving_domain_like(dom, lw);
    return sup;
}

MovingDomain make_moving_domain_like(const MovingDomain& dom, double half_width) {
    MovingDomain out = dom;
    out.half_width = half_width;
    if (dom.center.is_affine()) {
        double slope = (dom.L - 2.0 * dom.margin) / dom.T;
        out.t1 = (half_width - dom.margin) / slope;
        out.t2 = (dom.L - half_width - dom.margin) / slope;
    } else {
        out.t1 = center_crossing(dom.center, dom.T, half_width);
        out.t2 = center_crossing(dom.center, dom.T, dom.L - half_width);
    }
    return out;
}

void verify_nesting(const NestedSupports& sup, const Grid1D& g) {
    double dx = g.dx();
    require(sup.omega1.half_width - sup.omega0.half_width >= dx,
            "verify_nesting: margin between omega0 and omega1 is below one cell; "
            "refine the grid or widen omega1");
    require(sup.omega.half_width - sup.omega1.half_width >= dx,
            "verify_nesting: margin between omega1 and omega is below one cell; "
            "refine the grid or widen omega");
}

// ---- cutoff ---------------------------------------------------------------

namespace {

// Quintic ramp: 0 -> 1 with vanishing first and second derivatives at
// both ends.
double smooth01(double u) {
    if (u <= 0.0) return 0.0;
    if (u >= 1.0) return 1.0;
    return u * u * u * (10.0 + u * (-15.0 + 6.0 * u));
}

} // namespace

double cutoff(const NestedSupports& sup, CutoffPair pair, double x, double t) {
    require(0.0 <= x && x <= sup.omega0.L && 0.0 <= t && t <= sup.omega0.T,
            "cutoff: (x,t) outside [0,L]x[0,T]");
    double lin = (pair == CutoffPair::omega0_in_omega1) ? sup.omega0.half_width
                                                        : sup.omega1.half_width;
    double lout = (pair == CutoffPair::omega0_in_omega1) ? sup.omega1.half_width
                                                         : sup.omega.half_width;
    double d = std::abs(x - sup.omega0.c(t));
    return smooth01((lout - d) / (lout - lin));
}

// ---- grid sampling --------------------------------------------------------

SpaceTimeField support_mask(const MovingDomain& dom, const Grid1D& g, const TimeGrid& tg) {
    SpaceTimeField mask(g, tg);
    for (int k = 0; k <= tg.m; ++k) {
        Interval1D iv = dom.interval(tg.t(k));
        for (int j = 0; j <= g.n; ++j)
            mask.at(k, j) = iv.contains(g.x(j)) ? 1.0 : 0.0;
    }
    return mask;
}

SpaceTimeField interval_mask(const Interval1D& iv, const Grid1D& g, const TimeGrid& tg) {
    SpaceTimeField mask(g, tg);
    for (int k = 0; k <= tg.m; ++k)
        for (int j = 0; j <= g.n; ++j)
            mask.at(k, j) = iv.contains(g.x(j)) ? 1.0 : 0.0;
    return mask;
}

double average_support_measure(const MovingDomain& dom, int nt) {
    require(nt >= 2, "average_support_measure: need nt >= 2");
    double acc = 0.0;
    for (int i = 0; i <= nt; ++i) {
        double w = (i == 0 || i == nt) ? 0.5 : 1.0;
        acc += w * dom.interval(dom.T * i / nt).length();
    }
    return acc / nt;
}

} // namespace geometry
} // namespace mdlab
