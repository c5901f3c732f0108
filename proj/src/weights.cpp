#include "mdlab/weights.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mdlab {
namespace weights {

// ---- eta ------------------------------------------------------------------

EtaFunction build_eta(const geometry::MovingDomain& dom) {
    geometry::AssumptionReport rep = geometry::check_assumption(dom, 128);
    require(rep.pass, "build_eta: domain fails the geometric assumption: " +
                          rep.diagnostic);

    EtaFunction eta;
    eta.dom_ = dom;
    // c is strictly increasing, so (x - c(t))^2 is maximized at a
    // corner: x = 0 against c(T) or x = L against c(0).
    double d_left = dom.c(dom.T);
    double d_right = dom.L - dom.c(0.0);
    eta.D_ = std::max(d_left * d_left, d_right * d_right);
    eta.M_ = 4.0 * eta.D_;

    // Structural checks on a sample grid before handing the function out.
    const int ns = 256;
    double l = dom.half_width;
    for (int it = 0; it <= ns; ++it) {
        double t = dom.T * it / ns;
        double c = dom.c(t);
        require(c >= dom.margin - 1e-9 && dom.L - c >= dom.margin - 1e-9,
                "build_eta: center leaves [margin, L-margin]");
        // boundary slopes stay away from zero (P7/P8 analogues)
        require(eta.eta_x(0.0, t) >= 2.0 * dom.margin - 1e-9,
                "build_eta: left boundary slope below 2*margin");
        require(eta.eta_x(dom.L, t) <= -2.0 * dom.margin + 1e-9,
                "build_eta: right boundary slope above -2*margin");
        for (int ix = 0; ix <= ns; ++ix) {
            double x = dom.L * ix / ns;
            if (std::abs(x - c) < l) continue; // inside omega0
            require(std::abs(eta.eta_x(x, t)) >= 2.0 * l - 1e-9,
                    "build_eta: slope vanishes off the support");
            if (t <= dom.t1 * (1.0 - 1e-9))
                require(eta.eta_t(x, t) > 0.0,
                        "build_eta: eta_t not positive off-support at early times");
            if (t >= dom.t2 + (dom.T - dom.t2) * 1e-9)
                require(eta.eta_t(x, t) < 0.0,
                        "build_eta: eta_t not negative off-support at late times");
        }
    }
    // min eta = M - D = 3D = (3/4) max eta, exact by construction
    double min_eta = eta.M_ - eta.D_;
    require(std::abs(min_eta - 0.75 * eta.M_) <= 1e-12 * eta.M_,
            "build_eta: quarter-gap identity violated");
    return eta;
}

// ---- profiles -------------------------------------------------------------

namespace {

// C^3 smoothstep on [0,1]: S(0)=0, S(1)=1, S', S'', S''' vanish at both
// ends.
double smooth3(double u) {
    return u * u * u * u * (35.0 + u * (-84.0 + u * (70.0 - 20.0 * u)));
}
double smooth3_d(double u) {
    double a = u * (1.0 - u);
    return 140.0 * a * a * a;
}
double smooth3_dd(double u) {
    double a = u * (1.0 - u);
    return 420.0 * a * a * (1.0 - 2.0 * u);
}

struct ProfileVal {
    double v = 1.0, d = 0.0, dd = 0.0;
};

// r and its first two derivatives on (0, T/2]; mirrored by the caller.
// The bridge is r = 1 + B(u) (1/t - 1) with B = 1 - smooth3, which
// matches 1/t to third order at t = tau/2 and 1 to third order at
// t = tau, and is strictly decreasing in between because 1/t > 1 there
// (guaranteed by tau < 1).
ProfileVal r_half(double t, double tau) {
    ProfileVal out;
    if (t <= 0.5 * tau) {
        out.v = 1.0 / t;
        out.d = -1.0 / (t * t);
        out.dd = 2.0 / (t * t * t);
    } else if (t < tau) {
        double u = (2.0 * t - tau) / tau;
        double ut = 2.0 / tau;
        double B = 1.0 - smooth3(u);
        double Bu = -smooth3_d(u);
        double Buu = -smooth3_dd(u);
        double G = 1.0 / t - 1.0;
        double Gd = -1.0 / (t * t);
        double Gdd = 2.0 / (t * t * t);
        out.v = 1.0 + B * G;
        out.d = Bu * ut * G + B * Gd;
        out.dd = Buu * ut * ut * G + 2.0 * Bu * ut * Gd + B * Gdd;
    }
    return out; // plateau: 1, 0, 0
}

ProfileVal r_full(double t, double T, double tau) {
    require(t > 0.0 && t < T, "r_profile: t must lie in (0, T)");
    if (t <= 0.5 * T) return r_half(t, tau);
    ProfileVal mirror = r_half(T - t, tau);
    return {mirror.v, -mirror.d, mirror.dd};
}

ProfileVal l_full(double t, double T, double tau) {
    require(t >= 0.0 && t < T, "l_profile: t must lie in [0, T)");
    if (t <= 0.5 * T) return {1.0, 0.0, 0.0};
    return r_full(t, T, tau);
}

} // namespace

double r_profile(double t, double T, double tau) { return r_full(t, T, tau).v; }
double l_profile(double t, double T, double tau) { return l_full(t, T, tau).v; }

// ---- WeightSet ------------------------------------------------------------

double WeightSet::r(double t) const { return r_full(t, T_, prm_.tau).v; }
double WeightSet::r_t(double t) const { return r_full(t, T_, prm_.tau).d; }
double WeightSet::r_tt(double t) const { return r_full(t, T_, prm_.tau).dd; }
double WeightSet::l(double t) const { return l_full(t, T_, prm_.tau).v; }
double WeightSet::l_t(double t) const { return l_full(t, T_, prm_.tau).d; }

double WeightSet::xi(double x, double t) const {
    return r(t) * std::exp(prm_.lambda * eta_.eta(x, t));
}
double WeightSet::log_xi(double x, double t) const {
    return std::log(r(t)) + prm_.lambda * eta_.eta(x, t);
}
double WeightSet::alpha(double x, double t) const {
    return r(t) * (E_ - std::exp(prm_.lambda * eta_.eta(x, t)));
}
double WeightSet::alpha_bar(double x, double t) const {
    return l(t) * (E_ - std::exp(prm_.lambda * eta_.eta(x, t)));
}
double WeightSet::xi_bar(double x, double t) const {
    return l(t) * std::exp(prm_.lambda * eta_.eta(x, t));
}
double WeightSet::log_xi_bar(double x, double t) const {
    return std::log(l(t)) + prm_.lambda * eta_.eta(x, t);
}
double WeightSet::alpha_bar_star(double t) const {
    return l(t) * (E_ - std::exp(prm_.lambda * eta_.M()));
}
double WeightSet::xi_bar_star(double t) const {
    return l(t) * std::exp(prm_.lambda * eta_.M());
}
double WeightSet::alpha_bar_hat(double t) const {
    return l(t) * (E_ - std::exp(prm_.lambda * eta_.eta_min(t)));
}
double WeightSet::xi_bar_hat(double t) const {
    return l(t) * std::exp(prm_.lambda * eta_.eta_min(t));
}

double WeightSet::log_rho(int i, double t) const {
    require(t >= 0.0, "log_rho: t must be nonnegative");
    t = std::min(t, t_cap_);
    double s = prm_.s;
    switch (i) {
        case 1: return s * alpha_bar_star(t) - 1.5 * std::log(xi_bar_star(t));
        case 2: return s * alpha_bar_star(t);
        case 3: return s * alpha_bar_star(t) - 3.5 * std::log(xi_bar_star(t));
        case 4: return s * alpha_bar_hat(t) - 0.5 * std::log(xi_bar_hat(t));
        default: throw precondition_error("log_rho: index must be 1..4");
    }
}

double WeightSet::shift(int i) const {
    require(1 <= i && i <= 4, "shift: index must be 1..4");
    return i == 4 ? shift4_ : shift123_;
}

double WeightSet::rho(int i, double t) const {
    return std::exp(log_rho(i, t) - shift(i));
}

double WeightSet::rho_monotone_from(int i, int nt) const {
    require(nt >= 8, "rho_monotone_from: need nt >= 8");
    int from = 1;
    double prev = log_rho(i, T_ * 1.0 / nt);
    for (int k = 2; k < nt; ++k) {
        double cur = log_rho(i, T_ * k / nt);
        if (cur < prev) from = k;
        prev = cur;
    }
    return T_ * from / nt;
}

WeightValues WeightSet::eval(double x, double t) const {
    require(t > 0.0, "eval_weights: t must be positive");
    require(x >= 0.0 && x <= eta_.domain().L, "eval_weights: x outside [0, L]");
    t = std::min(t, t_cap_);

    ProfileVal rp = r_full(t, T_, prm_.tau);
    double la = prm_.lambda;
    double ex = std::exp(la * eta_.eta(x, t));
    double ex_r = rp.v * ex; // xi
    double hx = eta_.eta_x(x, t), hxx = eta_.eta_xx(), hxxx = eta_.eta_xxx(),
           hxxxx = eta_.eta_xxxx();
    double ht = eta_.eta_t(x, t), htt = eta_.eta_tt(x, t), hxt = eta_.eta_xt(x, t);
    double rr = rp.d / rp.v;   // r_t / r
    double rrr = rp.dd / rp.v; // r_tt / r

    WeightValues v;
    v.xi = ex_r;
    v.alpha = rp.v * E_ - ex_r;
    v.alpha_x = -la * hx * ex_r;
    v.alpha_xx = -(la * hxx + la * la * hx * hx) * ex_r;
    v.alpha_xxx = -(la * hxxx + 3.0 * la * la * hx * hxx + la * la * la * hx * hx * hx) * ex_r;
    v.alpha_xxxx = -(la * hxxxx + 4.0 * la * la * hx * hxxx + 3.0 * la * la * hxx * hxx +
                     6.0 * la * la * la * hx * hx * hxx +
                     la * la * la * la * hx * hx * hx * hx) *
                   ex_r;
    v.alpha_t = rp.d * E_ - (rr + la * ht) * ex_r;
    v.alpha_tt = rp.dd * E_ - (rrr + 2.0 * rr * la * ht + la * htt + la * la * ht * ht) * ex_r;
    v.alpha_xt = -(rr * la * hx + la * hxt + la * la * ht * hx) * ex_r;
    v.alpha_bar = alpha_bar(x, t);
    v.xi_bar = xi_bar(x, t);
    v.rho1 = rho(1, t);
    v.rho2 = rho(2, t);
    v.rho3 = rho(3, t);
    v.rho4 = rho(4, t);
    return v;
}

WeightSet build_weights(const EtaFunction& eta, const CarlemanParams& prm,
                        const TimeGrid& tg, double t_cap_fraction) {
    const geometry::MovingDomain& dom = eta.domain();
    double T = dom.T;
    require(prm.s > 0.0, "build_weights: s must be positive");
    require(prm.lambda >= 1.0, "build_weights: lambda must be >= 1");
    require(prm.tau > 0.0 && prm.tau < std::min(1.0, 0.5 * T),
            "build_weights: tau must lie in (0, min{1, T/2})");
    require(prm.tau <= std::min(dom.t1, T - dom.t2) + 1e-12,
            "build_weights: tau must not exceed min{t1, T - t2} "
            "(the profile ramps must fit inside the boundary phases)");
    require(std::abs(tg.T - T) <= 1e-12 * T,
            "build_weights: time grid horizon differs from the domain's T");

    WeightSet ws;
    ws.eta_ = eta;
    ws.prm_ = prm;
    ws.T_ = T;
    if (t_cap_fraction <= 0.0) {
        ws.t_cap_ = T - 0.5 * tg.dt();
    } else {
        require(t_cap_fraction < 1.0, "build_weights: t_cap_fraction must be < 1");
        ws.t_cap_ = T * t_cap_fraction;
        require(ws.t_cap_ > 0.5 * T,
                "build_weights: t_cap must exceed T/2 (weights are capped only "
                "near the blow-up end)");
    }
    ws.E_ = std::exp(2.0 * prm.lambda * eta.M());

    // Normalization shifts. alpha_bar_star is minimized where l = 1;
    // alpha_bar_hat is scanned (its minimizer depends on the center path).
    ws.shift123_ = prm.s * (ws.E_ - std::exp(prm.lambda * eta.M()));
    double mn = std::numeric_limits<double>::infinity();
    const int ns = 8192;
    for (int i = 0; i <= ns; ++i) {
        double t = std::min(ws.t_cap_, T * i / ns);
        if (t <= 0.0) continue;
        mn = std::min(mn, ws.alpha_bar_hat(t));
    }
    ws.shift4_ = prm.s * mn;
    return ws;
}

double auto_s(const EtaFunction& eta, double lambda, double tau, const TimeGrid& tg,
              double t_cap_fraction, double budget) {
    require(budget > 0.0, "auto_s: budget must be positive");
    double T = eta.domain().T;
    double t_cap = t_cap_fraction <= 0.0 ? T - 0.5 * tg.dt() : T * t_cap_fraction;
    double E = std::exp(2.0 * lambda * eta.M());
    double gap = E - std::exp(lambda * eta.M());
    double spread = (l_profile(t_cap, T, tau) - 1.0) * gap;
    if (spread < 1e-12 * gap) spread = gap;
    return budget / spread;
}

EstimateReport verify_pointwise_estimates(const WeightSet& ws, const Grid1D& g,
                                          const TimeGrid& tg) {
    const EtaFunction& eta = ws.eta();
    require(g.dx() <= 0.5 * eta.domain().half_width,
            "verify_pointwise_estimates: grid must resolve the support "
            "with at least 4 cells");
    require(std::abs(g.L - eta.domain().L) <= 1e-12 * g.L,
            "verify_pointwise_estimates: grid length differs from domain");

    double la = ws.params().lambda;
    double T = eta.domain().T;
    double E = ws.E();
    double Cx = 0, Cxx = 0, Cxxx = 0, Cxxxx = 0, Ct = 0, Ctt = 0, Cxt = 0;
    for (int k = 1; k <= tg.m; ++k) {
        double t = std::min(tg.t(k), ws.t_cap());
        for (int j = 0; j <= g.n; ++j) {
            WeightValues v = ws.eval(g.x(j), t);
            Cx = std::max(Cx, std::abs(v.alpha_x) / (la * v.xi));
            Cxx = std::max(Cxx, std::abs(v.alpha_xx) / (la * la * v.xi));
            Cxxx = std::max(Cxxx, std::abs(v.alpha_xxx) / (la * la * la * v.xi));
            Cxxxx = std::max(Cxxxx, std::abs(v.alpha_xxxx) / (la * la * la * la * v.xi));
            Ct = std::max(Ct, std::abs(v.alpha_t) / ((T + E) * la * v.xi * v.xi));
            Ctt = std::max(Ctt, std::abs(v.alpha_tt) /
                                    ((T * T + T + E) * la * la * v.xi * v.xi * v.xi));
            Cxt = std::max(Cxt, std::abs(v.alpha_xt) / ((T + 1.0) * la * la * v.xi * v.xi));
        }
    }

    EstimateReport rep;
    rep.rows = {
        {"|alpha_x| <= C lambda xi", Cx},
        {"|alpha_xx| <= C lambda^2 xi", Cxx},
        {"|alpha_xxx| <= C lambda^3 xi", Cxxx},
        {"|alpha_xxxx| <= C lambda^4 xi", Cxxxx},
        {"|alpha_t| <= C (T + E) lambda xi^2", Ct},
        {"|alpha_tt| <= C (T^2 + T + E) lambda^2 xi^3", Ctt},
        {"|alpha_xt| <= C (T + 1) lambda^2 xi^2", Cxt},
    };
    rep.all_finite = true;
    for (const auto& row : rep.rows)
        if (!std::isfinite(row.fitted_C)) rep.all_finite = false;
    return rep;
}

} // namespace weights
} // namespace mdlab
