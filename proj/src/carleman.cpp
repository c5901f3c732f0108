#include "mdlab/carleman.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mdlab/logsum.hpp"
#include "mdlab/parallel.hpp"
#include "mdlab/pde.hpp"
#include "mdlab/rng.hpp"

namespace mdlab {
namespace carleman {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double lg(double v) { return v == 0.0 ? kNegInf : std::log(std::abs(v)); }

uint64_t mix(uint64_t a, uint64_t b) {
    uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// ---- random smooth fields -------------------------------------------------

// sum_m a_m cos(m pi x / L), coefficients decaying like (1+m)^-2.
struct Series1D {
    int J = 0;
    double L = 1.0;
    std::vector<double> a;

    static Series1D random(Rng& rng, int J, double L) {
        Series1D s;
        s.J = J;
        s.L = L;
        s.a.resize(J + 1);
        for (int m = 0; m <= J; ++m)
            s.a[m] = rng.symmetric() / ((1.0 + m) * (1.0 + m));
        return s;
    }

    Level eval(const Grid1D& g) const {
        Level out(g.npts(), 0.0);
        for (int m = 0; m <= J; ++m) {
            double km = m * M_PI / L;
            for (int j = 0; j <= g.n; ++j) out[j] += a[m] * std::cos(km * g.x(j));
        }
        return out;
    }
};

// sum_{j,k} a_jk cos(j pi x / L) cos(k pi t / T), decay (1+j)^-2 (1+k)^-2.
struct Series2D {
    int J = 0;
    double L = 1.0, T = 1.0;
    std::vector<double> a; // (J+1) x (J+1), x-mode major

    static Series2D random(Rng& rng, int J, double L, double T) {
        Series2D s;
        s.J = J;
        s.L = L;
        s.T = T;
        s.a.resize((size_t)(J + 1) * (J + 1));
        for (int mj = 0; mj <= J; ++mj)
            for (int mk = 0; mk <= J; ++mk)
                s.a[(size_t)mj * (J + 1) + mk] = rng.symmetric() /
                                                 ((1.0 + mj) * (1.0 + mj) *
                                                  (1.0 + mk) * (1.0 + mk));
        return s;
    }

    // Fills the value field and (optionally) the exact time derivative.
    void eval(const Grid1D& g, const TimeGrid& tg, SpaceTimeField* val,
              SpaceTimeField* val_t) const {
        int n = g.npts(), m = tg.npts(), M = J + 1;
        std::vector<double> Cx((size_t)M * n), Ct((size_t)M * m), Dt((size_t)M * m);
        for (int mj = 0; mj < M; ++mj) {
            double km = mj * M_PI / L;
            for (int j = 0; j < n; ++j) Cx[(size_t)mj * n + j] = std::cos(km * g.x(j));
        }
        for (int mk = 0; mk < M; ++mk) {
            double wm = mk * M_PI / T;
            for (int k = 0; k < m; ++k) {
                Ct[(size_t)mk * m + k] = std::cos(wm * tg.t(k));
                Dt[(size_t)mk * m + k] = -wm * std::sin(wm * tg.t(k));
            }
        }
        // B[mj][k] = sum_mk a[mj][mk] * Ct[mk][k]
        std::vector<double> B((size_t)M * m, 0.0), Bd((size_t)M * m, 0.0);
        for (int mj = 0; mj < M; ++mj)
            for (int mk = 0; mk < M; ++mk) {
                double c = a[(size_t)mj * M + mk];
                if (c == 0.0) continue;
                for (int k = 0; k < m; ++k) {
                    B[(size_t)mj * m + k] += c * Ct[(size_t)mk * m + k];
                    Bd[(size_t)mj * m + k] += c * Dt[(size_t)mk * m + k];
                }
            }
        for (int k = 0; k < m; ++k)
            for (int j = 0; j < n; ++j) {
                double v = 0.0, vt = 0.0;
                for (int mj = 0; mj < M; ++mj) {
                    v += Cx[(size_t)mj * n + j] * B[(size_t)mj * m + k];
                    vt += Cx[(size_t)mj * n + j] * Bd[(size_t)mj * m + k];
                }
                if (val) val->at(k, j) = v;
                if (val_t) val_t->at(k, j) = vt;
            }
    }
};

// ---- finite differences on stored fields ----------------------------------

SpaceTimeField fd_dt(const SpaceTimeField& f) {
    const Grid1D& g = f.grid();
    const TimeGrid& tg = f.time();
    SpaceTimeField out(g, tg);
    double dt = tg.dt();
    int m = tg.m;
    for (int j = 0; j <= g.n; ++j) {
        out.at(0, j) = (-3.0 * f.at(0, j) + 4.0 * f.at(1, j) - f.at(2, j)) / (2.0 * dt);
        out.at(m, j) =
            (3.0 * f.at(m, j) - 4.0 * f.at(m - 1, j) + f.at(m - 2, j)) / (2.0 * dt);
    }
    for (int k = 1; k < m; ++k)
        for (int j = 0; j <= g.n; ++j)
            out.at(k, j) = (f.at(k + 1, j) - f.at(k - 1, j)) / (2.0 * dt);
    return out;
}

SpaceTimeField fd_dx(const SpaceTimeField& f) {
    const Grid1D& g = f.grid();
    const TimeGrid& tg = f.time();
    SpaceTimeField out(g, tg);
    double dx = g.dx();
    int n = g.n;
    for (int k = 0; k <= tg.m; ++k) {
        const double* p = f.level(k);
        double* o = out.level(k);
        o[0] = (-3.0 * p[0] + 4.0 * p[1] - p[2]) / (2.0 * dx);
        o[n] = (3.0 * p[n] - 4.0 * p[n - 1] + p[n - 2]) / (2.0 * dx);
        for (int j = 1; j < n; ++j) o[j] = (p[j + 1] - p[j - 1]) / (2.0 * dx);
    }
    return out;
}

SpaceTimeField fd_dxx(const SpaceTimeField& f) {
    const Grid1D& g = f.grid();
    const TimeGrid& tg = f.time();
    SpaceTimeField out(g, tg);
    double dx2 = g.dx() * g.dx();
    int n = g.n;
    for (int k = 0; k <= tg.m; ++k) {
        const double* p = f.level(k);
        double* o = out.level(k);
        o[0] = (2.0 * p[0] - 5.0 * p[1] + 4.0 * p[2] - p[3]) / dx2;
        o[n] = (2.0 * p[n] - 5.0 * p[n - 1] + 4.0 * p[n - 2] - p[n - 3]) / dx2;
        for (int j = 1; j < n; ++j) o[j] = (p[j - 1] - 2.0 * p[j] + p[j + 1]) / dx2;
    }
    return out;
}

// ---- per-rung precomputed weight tables -----------------------------------

struct Rung {
    Grid1D g;
    TimeGrid tg;
    geometry::NestedSupports sup;
    weights::WeightSet ws;
    double s = 1.0, lam = 1.0, lgs = 0.0, lgl = 0.0;
    std::vector<double> logwt, logwx;
    // r-profile tables, valid for k >= 1 (the weight vanishes at t = 0)
    SpaceTimeField a2s, lxi;
    // l-profile tables, valid on all levels
    SpaceTimeField a2s_bar, lxi_bar;
    std::vector<double> lr1, lr2, lr3;
    SpaceTimeField in1, inom; // support membership at the true time
};

Rung build_rung(const CarlemanCheckConfig& cfg, int n) {
    Rung r;
    r.g = Grid1D(cfg.L, n);
    r.tg = TimeGrid(cfg.T, n);
    geometry::MovingDomain dom0 =
        geometry::make_moving_domain(cfg.L, cfg.T, cfg.ell, cfg.margin);
    r.sup = geometry::build_nested(dom0, cfg.ell1, cfg.ell_omega);
    weights::EtaFunction eta = weights::build_eta(r.sup.omega0);
    r.ws = weights::build_weights(eta, cfg.params, r.tg, cfg.t_cap_fraction);
    r.s = cfg.params.s;
    r.lam = cfg.params.lambda;
    r.lgs = std::log(r.s);
    r.lgl = std::log(r.lam);

    int m = r.tg.m;
    r.logwt.resize(m + 1);
    r.logwx.resize(r.g.npts());
    for (int k = 0; k <= m; ++k) r.logwt[k] = std::log(r.tg.wt(k));
    for (int j = 0; j <= r.g.n; ++j) r.logwx[j] = std::log(r.g.wx(j));

    r.a2s = SpaceTimeField(r.g, r.tg);
    r.lxi = SpaceTimeField(r.g, r.tg);
    r.a2s_bar = SpaceTimeField(r.g, r.tg);
    r.lxi_bar = SpaceTimeField(r.g, r.tg);
    r.lr1.resize(m + 1);
    r.lr2.resize(m + 1);
    r.lr3.resize(m + 1);
    double E = r.ws.E();
    double lam = r.lam;
    for (int k = 0; k <= m; ++k) {
        double t = r.tg.t(k);
        double tcl = std::min(t, r.ws.t_cap());
        double lv = r.ws.l(tcl);
        double rv = k >= 1 ? r.ws.r(tcl) : 0.0;
        for (int j = 0; j <= r.g.n; ++j) {
            double et = eta.eta(r.g.x(j), tcl);
            double ex = std::exp(lam * et);
            if (k >= 1) {
                r.a2s.at(k, j) = -2.0 * r.s * rv * (E - ex);
                r.lxi.at(k, j) = std::log(rv) + lam * et;
            } else {
                r.a2s.at(k, j) = kNegInf; // weight vanishes at t = 0
                r.lxi.at(k, j) = kNegInf;
            }
            r.a2s_bar.at(k, j) = -2.0 * r.s * lv * (E - ex);
            r.lxi_bar.at(k, j) = std::log(lv) + lam * et;
        }
        r.lr1[k] = r.ws.log_rho(1, t);
        r.lr2[k] = r.ws.log_rho(2, t);
        r.lr3[k] = r.ws.log_rho(3, t);
    }
    r.in1 = geometry::support_mask(r.sup.omega1, r.g, r.tg);
    r.inom = geometry::support_mask(r.sup.omega, r.g, r.tg);
    return r;
}

SampleRatio make_ratio(const SignedLog& lhs, const SignedLog& rhs) {
    SampleRatio out;
    out.lhs_log = lhs.log_abs;
    out.rhs_log = rhs.log_abs;
    if (lhs.sign == 0.0 && rhs.sign == 0.0)
        out.ratio = 0.0;
    else
        out.ratio = std::exp(lhs.log_abs - rhs.log_abs);
    return out;
}

void finalize_report(RatioReport& rep) {
    bool finite = true;
    double hi = 0.0, lo = std::numeric_limits<double>::infinity();
    for (GridRatios& gr : rep.grids) {
        gr.max_ratio = 0.0;
        for (const SampleRatio& s : gr.samples) {
            if (!std::isfinite(s.ratio)) finite = false;
            gr.max_ratio = std::max(gr.max_ratio, s.ratio);
        }
        hi = std::max(hi, gr.max_ratio);
        lo = std::min(lo, gr.max_ratio);
    }
    rep.stability_factor = lo > 0.0 ? hi / lo : (hi == 0.0 ? 1.0 : hi);
    rep.pass = finite && std::isfinite(rep.stability_factor) &&
               rep.stability_factor < 2.0;
}

} // namespace

void validate(const CarlemanCheckConfig& cfg) {
    require(cfg.samples >= 10, "carleman config: need at least 10 samples");
    require(cfg.grids.size() >= 2, "carleman config: ladder needs at least 2 rungs");
    for (size_t i = 0; i < cfg.grids.size(); ++i) {
        require(cfg.grids[i] >= 8, "carleman config: grid rung too small");
        if (i > 0)
            require(cfg.grids[i] > cfg.grids[i - 1],
                    "carleman config: ladder must be strictly increasing");
    }
    require(cfg.modes >= 1, "carleman config: need at least one series mode");
    require(cfg.sigma_value > 0.0, "carleman config: sigma must be positive");
}

RatioReport check_ode_carleman(const CarlemanCheckConfig& cfg) {
    validate(cfg);
    RatioReport rep;
    rep.name = "ode";
    for (size_t ri = 0; ri < cfg.grids.size(); ++ri) {
        Rung rung = build_rung(cfg, cfg.grids[ri]);
        const int m = rung.tg.m, n = rung.g.n;
        auto one = [&](int i) {
            Rng rng(mix(mix(cfg.seed, ri), (uint64_t)i));
            Series2D phi = Series2D::random(rng, cfg.modes, cfg.L, cfg.T);
            SpaceTimeField V(rung.g, rung.tg), Vt(rung.g, rung.tg);
            phi.eval(rung.g, rung.tg, &V, &Vt);

            LogAccumulator lhs, rhs_t, rhs_obs;
            for (int k = 1; k <= m; ++k)
                for (int j = 0; j <= n; ++j) {
                    double w = rung.logwt[k] + rung.logwx[j];
                    double e = rung.a2s.at(k, j);
                    double lv = lg(V.at(k, j));
                    if (lv != kNegInf) {
                        lhs.add(rung.lxi.at(k, j) + 2.0 * lv + e + w, 1.0);
                        if (rung.in1.at(k, j) != 0.0)
                            rhs_obs.add(2.0 * rung.lxi.at(k, j) + 2.0 * lv + e + w, 1.0);
                    }
                    double lt = lg(Vt.at(k, j));
                    if (lt != kNegInf) rhs_t.add(2.0 * lt + e + w, 1.0);
                }
            SignedLog L = lhs.result();
            if (L.sign != 0.0) L.log_abs += rung.lgs + 2.0 * rung.lgl;
            double rhs_log = log_add(rhs_t.result().log_abs,
                                     rhs_obs.result().sign == 0.0
                                         ? kNegInf
                                         : rhs_obs.result().log_abs +
                                               2.0 * (rung.lgs + rung.lgl));
            SignedLog R{rhs_log, rhs_log == kNegInf ? 0.0 : 1.0};
            return make_ratio(L, R);
        };
        GridRatios gr;
        gr.n = cfg.grids[ri];
        gr.samples = parallel::map<SampleRatio>(cfg.samples, one);
        rep.grids.push_back(std::move(gr));
    }
    finalize_report(rep);
    return rep;
}

namespace {

NeumannIntegralLogs neumann_logs_on_rung(const Rung& rung, const SpaceTimeField& psi,
                                         const SpaceTimeField& f) {
    const int m = rung.tg.m, n = rung.g.n;
    SpaceTimeField psi_t = fd_dt(psi), psi_x = fd_dx(psi), psi_xx = fd_dxx(psi);

    double c1 = -rung.lgs;                       // s^-1 xi^-1
    double c2 = rung.lgs + 2.0 * rung.lgl;       // s lam^2 xi
    double c3 = 3.0 * rung.lgs + 4.0 * rung.lgl; // s^3 lam^4 xi^3
    double cb = 3.0 * rung.lgs + 3.0 * rung.lgl; // s^3 lam^3 xi^3 boundary
    LogAccumulator curv, grad, state, bl, br, src, obs;
    for (int k = 1; k <= m; ++k) {
        for (int j = 0; j <= n; ++j) {
            double w = rung.logwt[k] + rung.logwx[j];
            double e = rung.a2s.at(k, j);
            double xl = rung.lxi.at(k, j);
            double a;
            if ((a = lg(psi_xx.at(k, j))) != kNegInf)
                curv.add(c1 - xl + 2.0 * a + e + w, 1.0);
            if ((a = lg(psi_t.at(k, j))) != kNegInf)
                curv.add(c1 - xl + 2.0 * a + e + w, 1.0);
            if ((a = lg(psi_x.at(k, j))) != kNegInf)
                grad.add(c2 + xl + 2.0 * a + e + w, 1.0);
            if ((a = lg(psi.at(k, j))) != kNegInf) {
                state.add(c3 + 3.0 * xl + 2.0 * a + e + w, 1.0);
                if (rung.in1.at(k, j) != 0.0)
                    obs.add(c3 + 3.0 * xl + 2.0 * a + e + w, 1.0);
            }
            if ((a = lg(f.at(k, j))) != kNegInf) src.add(2.0 * a + e + w, 1.0);
        }
        for (int j : {0, n}) {
            double a = lg(psi.at(k, j));
            if (a != kNegInf)
                (j == 0 ? bl : br)
                    .add(cb + 3.0 * rung.lxi.at(k, j) + 2.0 * a +
                             rung.a2s.at(k, j) + rung.logwt[k],
                         1.0);
        }
    }
    NeumannIntegralLogs out;
    out.curvature_time = curv.result().log_abs;
    out.gradient = grad.result().log_abs;
    out.state = state.result().log_abs;
    out.boundary_left = bl.result().log_abs;
    out.boundary_right = br.result().log_abs;
    out.source = src.result().log_abs;
    out.observation = obs.result().log_abs;
    return out;
}

} // namespace

NeumannIntegralLogs neumann_integral_logs(const CarlemanCheckConfig& cfg, int n,
                                          const SpaceTimeField& psi,
                                          const SpaceTimeField& f) {
    Rung rung = build_rung(cfg, n);
    SpaceTimeField probe(rung.g, rung.tg);
    require(psi.same_layout(probe) && f.same_layout(probe),
            "neumann_integral_logs: field layout does not match the rung");
    return neumann_logs_on_rung(rung, psi, f);
}

RatioReport check_neumann_carleman(const CarlemanCheckConfig& cfg) {
    validate(cfg);
    RatioReport rep;
    rep.name = "neumann";
    pde::Conductivity sigma = pde::constant_conductivity(cfg.sigma_value);
    for (size_t ri = 0; ri < cfg.grids.size(); ++ri) {
        Rung rung = build_rung(cfg, cfg.grids[ri]);
        SpaceTimeField zero(rung.g, rung.tg);
        Level zeroL(rung.g.npts(), 0.0);
        auto one = [&](int i) {
            Rng rng(mix(mix(cfg.seed, 1000 + ri), (uint64_t)i));
            Level psiT = Series1D::random(rng, cfg.modes, cfg.L).eval(rung.g);
            Series2D fs = Series2D::random(rng, cfg.modes, cfg.L, cfg.T);
            SpaceTimeField F(rung.g, rung.tg);
            fs.eval(rung.g, rung.tg, &F, nullptr);

            pde::AdjointResult ar =
                pde::solve_adjoint(zero, zero, sigma, zeroL, psiT, zero, F);
            NeumannIntegralLogs il = neumann_logs_on_rung(rung, ar.psi, F);

            LogAccumulator lhs, rhs;
            for (double b : {il.curvature_time, il.gradient, il.state,
                             il.boundary_left, il.boundary_right})
                if (b != kNegInf) lhs.add(b, 1.0);
            for (double b : {il.source, il.observation})
                if (b != kNegInf) rhs.add(b, 1.0);
            return make_ratio(lhs.result(), rhs.result());
        };
        GridRatios gr;
        gr.n = cfg.grids[ri];
        gr.samples = parallel::map<SampleRatio>(cfg.samples, one);
        rep.grids.push_back(std::move(gr));
    }
    finalize_report(rep);
    return rep;
}

CoeffProvider constant_coeffs(double ell_p_value, double A_value) {
    return [ell_p_value, A_value](const Grid1D& g, const TimeGrid& tg,
                                  SpaceTimeField& ell_p, SpaceTimeField& A) {
        ell_p = SpaceTimeField(g, tg);
        A = SpaceTimeField(g, tg);
        for (double& v : ell_p.raw()) v = ell_p_value;
        for (double& v : A.raw()) v = A_value;
    };
}

CoupledReports check_coupled_carleman(const CarlemanCheckConfig& cfg,
                                      const CoeffProvider& coeffs) {
    validate(cfg);
    CoupledReports reps;
    reps.theorem.name = "coupled";
    reps.nonvanishing.name = "nonvanishing";
    pde::Conductivity sigma = pde::constant_conductivity(cfg.sigma_value);
    for (size_t ri = 0; ri < cfg.grids.size(); ++ri) {
        Rung rung = build_rung(cfg, cfg.grids[ri]);
        const int m = rung.tg.m, n = rung.g.n;
        SpaceTimeField ell_p, A;
        coeffs(rung.g, rung.tg, ell_p, A);
        require(ell_p.same_layout(rung.a2s) && A.same_layout(rung.a2s),
                "check_coupled_carleman: coefficient provider layout mismatch");

        struct Pair {
            SampleRatio thm, nv;
        };
        auto one = [&](int i) {
            Rng rng(mix(mix(cfg.seed, 2000 + ri), (uint64_t)i));
            Level phiT = Series1D::random(rng, cfg.modes, cfg.L).eval(rung.g);
            Level psiT = Series1D::random(rng, cfg.modes, cfg.L).eval(rung.g);
            SpaceTimeField R(rung.g, rung.tg), S(rung.g, rung.tg);
            Series2D::random(rng, cfg.modes, cfg.L, cfg.T).eval(rung.g, rung.tg, &R, nullptr);
            Series2D::random(rng, cfg.modes, cfg.L, cfg.T).eval(rung.g, rung.tg, &S, nullptr);

            pde::AdjointResult ar = pde::solve_adjoint(ell_p, A, sigma, phiT, psiT, R, S);
            const SpaceTimeField& phi = ar.phi;
            const SpaceTimeField& psi = ar.psi;
            SpaceTimeField psi_t = fd_dt(psi), psi_x = fd_dx(psi), psi_xx = fd_dxx(psi);

            double c1 = -rung.lgs;
            double c2 = rung.lgs + 2.0 * rung.lgl;
            double c3 = 3.0 * rung.lgs + 4.0 * rung.lgl;
            double cobs = 7.0 * rung.lgs + 6.0 * rung.lgl;
            LogAccumulator tl, tr, nl, nr;
            for (int k = 0; k <= m; ++k)
                for (int j = 0; j <= n; ++j) {
                    double w = rung.logwt[k] + rung.logwx[j];
                    double lpsixx = lg(psi_xx.at(k, j));
                    double lpsit = lg(psi_t.at(k, j));
                    double lpsix = lg(psi_x.at(k, j));
                    double lpsi = lg(psi.at(k, j));
                    double lphi = lg(phi.at(k, j));
                    double lR = lg(R.at(k, j));
                    double lS = lg(S.at(k, j));

                    if (k >= 1) { // r-weighted (theorem) family
                        double e = rung.a2s.at(k, j);
                        double xl = rung.lxi.at(k, j);
                        if (lpsixx != kNegInf) tl.add(c1 - xl + 2.0 * lpsixx + e + w, 1.0);
                        if (lpsit != kNegInf) tl.add(c1 - xl + 2.0 * lpsit + e + w, 1.0);
                        if (lpsix != kNegInf) tl.add(c2 + xl + 2.0 * lpsix + e + w, 1.0);
                        if (lpsi != kNegInf) tl.add(c3 + 3.0 * xl + 2.0 * lpsi + e + w, 1.0);
                        if (lphi != kNegInf) {
                            tl.add(c2 + xl + 2.0 * lphi + e + w, 1.0);
                            if (rung.inom.at(k, j) != 0.0)
                                tr.add(cobs + 7.0 * xl + 2.0 * lphi + e + w, 1.0);
                        }
                        if (lR != kNegInf) tr.add(c3 + 3.0 * xl + 2.0 * lR + e + w, 1.0);
                        if (lS != kNegInf) tr.add(2.0 * lS + e + w, 1.0);
                    }

                    // l-weighted (nonvanishing) family, all levels
                    double eb = rung.a2s_bar.at(k, j);
                    double xb = rung.lxi_bar.at(k, j);
                    if (lpsixx != kNegInf) nl.add(-xb + 2.0 * lpsixx + eb + w, 1.0);
                    if (lpsit != kNegInf) nl.add(-xb + 2.0 * lpsit + eb + w, 1.0);
                    if (lpsix != kNegInf) nl.add(xb + 2.0 * lpsix + eb + w, 1.0);
                    if (lpsi != kNegInf) nl.add(3.0 * xb + 2.0 * lpsi + eb + w, 1.0);
                    if (lphi != kNegInf) {
                        nl.add(xb + 2.0 * lphi + eb + w, 1.0);
                        if (rung.inom.at(k, j) != 0.0)
                            nr.add(-2.0 * rung.lr3[k] + 2.0 * lphi + w, 1.0);
                    }
                    if (lR != kNegInf) nr.add(-2.0 * rung.lr1[k] + 2.0 * lR + w, 1.0);
                    if (lS != kNegInf) nr.add(-2.0 * rung.lr2[k] + 2.0 * lS + w, 1.0);
                }
            // || phi(0) ||^2 + || psi(0) ||^2 on the nonvanishing LHS
            for (int j = 0; j <= n; ++j) {
                double a = lg(phi.at(0, j));
                if (a != kNegInf) nl.add(2.0 * a + rung.logwx[j], 1.0);
                a = lg(psi.at(0, j));
                if (a != kNegInf) nl.add(2.0 * a + rung.logwx[j], 1.0);
            }
            Pair out;
            out.thm = make_ratio(tl.result(), tr.result());
            out.nv = make_ratio(nl.result(), nr.result());
            return out;
        };

        std::vector<Pair> pairs = parallel::map<Pair>(cfg.samples, one);
        GridRatios gt, gn;
        gt.n = gn.n = cfg.grids[ri];
        for (const Pair& p : pairs) {
            gt.samples.push_back(p.thm);
            gn.samples.push_back(p.nv);
        }
        reps.theorem.grids.push_back(std::move(gt));
        reps.nonvanishing.grids.push_back(std::move(gn));
    }
    finalize_report(reps.theorem);
    finalize_report(reps.nonvanishing);
    return reps;
}

ConjugationReport check_conjugation_identity(const CarlemanCheckConfig& cfg) {
    validate(cfg);
    ConjugationReport rep;
    for (size_t ri = 0; ri < cfg.grids.size(); ++ri) {
        Rung rung = build_rung(cfg, cfg.grids[ri]);
        const weights::WeightSet& ws = rung.ws;
        double s = cfg.params.s;
        double span = ws.E() - std::exp(cfg.params.lambda * ws.eta().M());
        require(s * span <= 690.0,
                "check_conjugation_identity: s is too large for the weight to be "
                "representable; reduce s below 690 / (E - e^{lambda M})");

        const Grid1D& g = rung.g;
        const TimeGrid& tg = rung.tg;
        int n = g.n, m = tg.m;
        double L = g.L, T = tg.T;

        // Test field w = e^{-s alpha} zeta, zeta = cos(pi x / L) sin^2(pi t / T),
        // so e^{s alpha} w = zeta exactly and the left side is
        // e^{-s alpha} (zeta_t + zeta_xx) in closed form. The right side
        // expands the derivatives of w by the product rule: alpha
        // derivatives closed-form, zeta derivatives by second-order
        // central differences. Every s-dependent term then has to cancel
        // between the operator coefficients and the product rule, and the
        // surviving residual is the difference-quotient error of zeta.
        // Differencing w itself instead would be hopeless wherever the
        // ramp of the r profile makes |d/dt e^{-s alpha}| huge.
        SpaceTimeField zeta(g, tg);
        for (int k = 0; k <= m; ++k) {
            double st = std::sin(M_PI * tg.t(k) / T);
            for (int j = 0; j <= n; ++j)
                zeta.at(k, j) = std::cos(M_PI * g.x(j) / L) * st * st;
        }
        SpaceTimeField z_t = fd_dt(zeta), z_x = fd_dx(zeta), z_xx = fd_dxx(zeta);

        double num = 0.0, den = 0.0;
        for (int k = 1; k < m; ++k) {
            double t = tg.t(k);
            for (int j = 1; j < n; ++j) {
                double x = g.x(j);
                weights::WeightValues wv = ws.eval(x, t);
                double es = std::exp(-s * wv.alpha);
                double zc = std::cos(M_PI * x / L);
                double st = std::sin(M_PI * t / T);
                double zv = zc * st * st;
                double zt = zc * 2.0 * st * std::cos(M_PI * t / T) * (M_PI / T);
                double zxx = -(M_PI / L) * (M_PI / L) * zv;
                double lhs = es * (zt + zxx);

                double sax = s * wv.alpha_x;
                double w0 = es * zv;
                double wt = es * (z_t.at(k, j) - s * wv.alpha_t * zv);
                double wx = es * (z_x.at(k, j) - sax * zv);
                double wxx = es * (z_xx.at(k, j) - 2.0 * sax * z_x.at(k, j) +
                                   (sax * sax - s * wv.alpha_xx) * zv);
                double rhs = wxx + (s * wv.alpha_t + sax * sax) * w0 + wt +
                             2.0 * sax * wx + s * wv.alpha_xx * w0;
                den = std::max(den, std::abs(rhs));
                num = std::max(num, std::abs(lhs - rhs));
            }
        }

        // Boundary relation w_x = -s alpha_x w, with w_x this time a
        // one-sided difference of the stored w grid (zeta is Neumann, so
        // the relation is exact up to the difference-quotient error).
        SpaceTimeField w(g, tg);
        for (int k = 1; k < m; ++k) {
            double t = tg.t(k);
            for (int j = 0; j <= n; ++j)
                w.at(k, j) = std::exp(-s * ws.alpha(g.x(j), t)) * zeta.at(k, j);
        }
        SpaceTimeField w_x = fd_dx(w);
        double bnum = 0.0, bden = 0.0;
        for (int k = 1; k < m; ++k) {
            double t = tg.t(k);
            for (int j : {0, n}) {
                weights::WeightValues wv = ws.eval(g.x(j), t);
                double target = -s * wv.alpha_x * w.at(k, j);
                bnum = std::max(bnum, std::abs(w_x.at(k, j) - target));
                bden = std::max(bden, std::abs(target));
            }
        }

        ConjugationGrid cg;
        cg.n = cfg.grids[ri];
        cg.max_rel_residual = den > 0.0 ? num / den : 0.0;
        cg.boundary_residual = bden > 0.0 ? bnum / bden : 0.0;
        rep.grids.push_back(cg);
    }
    size_t last = rep.grids.size() - 1;
    double r0 = rep.grids[last - 1].max_rel_residual;
    double r1 = rep.grids[last].max_rel_residual;
    double hratio = (double)rep.grids[last].n / rep.grids[last - 1].n;
    rep.observed_order = r1 > 0.0 ? std::log(r0 / r1) / std::log(hratio) : 0.0;
    rep.pass = rep.observed_order >= 1.7 &&
               rep.grids[last].max_rel_residual <= 5e-5 &&
               rep.grids[last].max_rel_residual > 0.0 &&
               rep.grids[last].boundary_residual <= 1e-2;
    return rep;
}

} // namespace carleman
} // namespace mdlab
