#include "mdlab/control.hpp"

#include <algorithm>
#include <cmath>

#include "mdlab/logsum.hpp"
#include "mdlab/parallel.hpp"
#include "mdlab/rng.hpp"
#include "mdlab/tridiag.hpp"

namespace mdlab {
namespace control {

namespace {

// Shared per-synthesis state: grid handles, the elliptic operator, the
// squared normalized weights per time level, and zero sources for the
// homogeneous solves.
struct Ctx {
    const ControlProblem* pb = nullptr;
    const SpaceTimeField* mask = nullptr;
    Grid1D g;
    TimeGrid tg;
    pde::EllipticK K;
    std::vector<double> r1sq, r2sq, r3sq;
    double eps = 1e-8;
    Level zeroL;
    SpaceTimeField zeroF;

    Ctx(const ControlProblem& prob, const SpaceTimeField& msk)
        : pb(&prob), mask(&msk), g(prob.G.grid()), tg(prob.G.time()),
          K(g, prob.sigma), eps(prob.eps_pen), zeroL(g.npts(), 0.0),
          zeroF(g, tg) {
        int m = tg.npts();
        r1sq.resize(m);
        r2sq.resize(m);
        r3sq.resize(m);
        for (int k = 0; k < m; ++k) {
            double t = tg.t(k);
            double v1 = prob.ws.rho(1, t);
            double v2 = prob.ws.rho(2, t);
            double v3 = prob.ws.rho(3, t);
            r1sq[k] = v1 * v1;
            r2sq[k] = v2 * v2;
            r3sq[k] = v3 * v3;
        }
    }
};

// Quadrature-weighted inner product sum_k wt_k sum_j wx_j a b.
double dot_hw(const SpaceTimeField& a, const SpaceTimeField& b) {
    const Grid1D& g = a.grid();
    const TimeGrid& tg = a.time();
    double acc = 0.0;
    for (int k = 0; k <= tg.m; ++k) {
        double lvl = 0.0;
        const double* pa = a.level(k);
        const double* pb = b.level(k);
        for (int j = 0; j <= g.n; ++j) lvl += g.wx(j) * pa[j] * pb[j];
        acc += tg.wt(k) * lvl;
    }
    return acc;
}

double norm_hw(const SpaceTimeField& a) { return std::sqrt(dot_hw(a, a)); }

void mask_into(const SpaceTimeField& mask, SpaceTimeField& f) {
    const auto& mv = mask.raw();
    auto& fv = f.raw();
    for (size_t i = 0; i < fv.size(); ++i) fv[i] *= mv[i];
}

// Exact transpose of the forward one-leg sweep. Seeds the multiplier
// with the W-gradient of the state terms of J at level m, walks
// backward through mu^{k+1} = B'^{-1} lambda^{k+1} and
// lambda^k = C' mu^{k+1} + gW^k, and returns the per-level averages of
// mu_theta that pair against the control in the discrete chain rule.
SpaceTimeField state_gradient(const Ctx& cx, const SpaceTimeField& theta,
                              const SpaceTimeField& q) {
    const Grid1D& g = cx.g;
    const TimeGrid& tg = cx.tg;
    const SpaceTimeField& ell_p = cx.pb->ell_p;
    const SpaceTimeField& A = cx.pb->A;
    int n = g.npts();
    int m = tg.m;
    double dt = tg.dt();

    Level lphi(n), lpsi(n);
    for (int j = 0; j < n; ++j) {
        lphi[j] = tg.wt(m) * cx.r1sq[m] * theta.at(m, j) + theta.at(m, j) / cx.eps;
        lpsi[j] = tg.wt(m) * cx.r2sq[m] * q.at(m, j) + q.at(m, j) / cx.eps;
    }

    SpaceTimeField mu(g, tg); // mu_theta at levels 1..m
    Level lp_mid(n), A_mid(n), rhs(n), phi_mu(n);
    for (int k = m - 1; k >= 0; --k) {
        for (int j = 0; j < n; ++j) {
            lp_mid[j] = 0.5 * (ell_p.at(k, j) + ell_p.at(k + 1, j));
            A_mid[j] = 0.5 * (A.at(k, j) + A.at(k + 1, j));
        }
        for (int j = 0; j < n; ++j) rhs[j] = lpsi[j] - 0.5 * dt * A_mid[j] * lphi[j];
        Tridiag B = cx.K.build_matrix(1.0, 0.5 * dt, lp_mid, 0.25 * dt * dt, &A_mid);
        Level psi_mu = solve_tridiag(B, rhs);
        for (int j = 0; j < n; ++j) phi_mu[j] = lphi[j] + 0.5 * dt * psi_mu[j];
        for (int j = 0; j < n; ++j) mu.at(k + 1, j) = phi_mu[j];

        Level Kpsi = cx.K.apply(psi_mu, lp_mid);
        for (int j = 0; j < n; ++j) {
            lphi[j] = phi_mu[j] + 0.5 * dt * psi_mu[j] +
                      tg.wt(k) * cx.r1sq[k] * theta.at(k, j);
            lpsi[j] = psi_mu[j] - 0.5 * dt * (A_mid[j] * phi_mu[j] + Kpsi[j]) +
                      tg.wt(k) * cx.r2sq[k] * q.at(k, j);
        }
    }

    SpaceTimeField gs(g, tg);
    for (int j = 0; j < n; ++j) {
        gs.at(0, j) = mu.at(1, j);
        gs.at(m, j) = mu.at(m, j);
    }
    for (int k = 1; k < m; ++k)
        for (int j = 0; j < n; ++j)
            gs.at(k, j) = 0.5 * (mu.at(k, j) + mu.at(k + 1, j));
    return gs;
}

pde::ThetaQResult forward_full(const Ctx& cx, const SpaceTimeField& h) {
    return pde::solve_theta_q(cx.pb->ell_p, cx.pb->A, cx.pb->sigma, cx.pb->theta0,
                              cx.pb->q0, cx.pb->G, h, *cx.mask);
}

pde::ThetaQResult forward_control_only(const Ctx& cx, const SpaceTimeField& h) {
    return pde::solve_theta_q(cx.pb->ell_p, cx.pb->A, cx.pb->sigma, cx.zeroL,
                              cx.zeroL, cx.zeroF, h, *cx.mask);
}

// grad J = mask .* (rho3^2 h + avg mu_theta); the homogeneous part of
// it (zero data, zero G) is the CG operator.
SpaceTimeField apply_hessian(const Ctx& cx, const SpaceTimeField& hdir) {
    pde::ThetaQResult tq = forward_control_only(cx, hdir);
    SpaceTimeField out = state_gradient(cx, tq.theta, tq.q);
    for (int k = 0; k <= cx.tg.m; ++k) {
        double w = cx.r3sq[k];
        double* po = out.level(k);
        const double* ph = hdir.level(k);
        for (int j = 0; j <= cx.g.n; ++j) po[j] += w * ph[j];
    }
    mask_into(*cx.mask, out);
    return out;
}

double eval_J(const Ctx& cx, const SpaceTimeField& theta, const SpaceTimeField& q,
              const SpaceTimeField& h_masked) {
    const Grid1D& g = cx.g;
    const TimeGrid& tg = cx.tg;
    double acc = 0.0;
    for (int k = 0; k <= tg.m; ++k) {
        double lvl = 0.0;
        const double* pt = theta.level(k);
        const double* pq = q.level(k);
        const double* ph = h_masked.level(k);
        for (int j = 0; j <= g.n; ++j) {
            lvl += g.wx(j) * (cx.r3sq[k] * ph[j] * ph[j] + cx.r1sq[k] * pt[j] * pt[j] +
                              cx.r2sq[k] * pq[j] * pq[j]);
        }
        acc += tg.wt(k) * lvl;
    }
    double term = 0.0;
    for (int j = 0; j <= g.n; ++j) {
        double th = theta.at(tg.m, j), qu = q.at(tg.m, j);
        term += g.wx(j) * (th * th + qu * qu);
    }
    return 0.5 * acc + 0.5 * term / cx.eps;
}

struct CgOutcome {
    SpaceTimeField x;
    int iterations = 0;
    double residual = 0.0;
    bool converged = false;
};

CgOutcome run_pcg(const Ctx& cx, const SpaceTimeField& b) {
    CgOutcome out;
    out.x = SpaceTimeField(cx.g, cx.tg);
    double bnorm = norm_hw(b);
    if (bnorm == 0.0) {
        out.converged = true;
        return out;
    }

    auto precond = [&](const SpaceTimeField& r) {
        SpaceTimeField z(cx.g, cx.tg);
        for (int k = 0; k <= cx.tg.m; ++k) {
            double d = std::max(cx.r3sq[k], 1e-300);
            const double* pr = r.level(k);
            double* pz = z.level(k);
            for (int j = 0; j <= cx.g.n; ++j) pz[j] = pr[j] / d;
        }
        return z;
    };

    SpaceTimeField r = b;
    SpaceTimeField z = precond(r);
    SpaceTimeField p = z;
    double rz = dot_hw(r, z);
    double best = 1.0;
    int since_best = 0;

    for (int it = 1; it <= cx.pb->cg_max; ++it) {
        SpaceTimeField Ap = apply_hessian(cx, p);
        double pAp = dot_hw(p, Ap);
        if (!(pAp > 0.0)) break; // operator is SPD; loss of that is stagnation
        double alpha = rz / pAp;
        {
            auto& xv = out.x.raw();
            auto& rv = r.raw();
            const auto& pv = p.raw();
            const auto& av = Ap.raw();
            for (size_t i = 0; i < xv.size(); ++i) {
                xv[i] += alpha * pv[i];
                rv[i] -= alpha * av[i];
            }
        }
        out.iterations = it;
        out.residual = norm_hw(r) / bnorm;
        if (out.residual <= cx.pb->cg_tol) {
            out.converged = true;
            break;
        }
        if (out.residual < 0.999 * best) {
            best = out.residual;
            since_best = 0;
        } else if (++since_best >= 2000) {
            break; // stagnated
        }
        z = precond(r);
        double rz_new = dot_hw(r, z);
        if (rz_new == 0.0) {
            out.converged = true;
            break;
        }
        double beta = rz_new / rz;
        {
            auto& pv = p.raw();
            const auto& zv = z.raw();
            for (size_t i = 0; i < pv.size(); ++i) pv[i] = zv[i] + beta * pv[i];
        }
        rz = rz_new;
    }
    return out;
}

double weighted_field_norm(const Ctx& cx, const SpaceTimeField& f,
                           const std::vector<double>& rsq) {
    double acc = 0.0;
    for (int k = 0; k <= cx.tg.m; ++k) {
        double lvl = 0.0;
        const double* pf = f.level(k);
        for (int j = 0; j <= cx.g.n; ++j) lvl += cx.g.wx(j) * pf[j] * pf[j];
        acc += cx.tg.wt(k) * rsq[k] * lvl;
    }
    return std::sqrt(acc);
}

Level terminal_p_level(const Ctx& cx, const pde::ThetaQResult& tq) {
    Level qm = tq.q.level_copy(cx.tg.m);
    Level lpm = cx.pb->ell_p.level_copy(cx.tg.m);
    Level Kq = cx.K.apply(qm, lpm);
    Level p(cx.g.npts());
    for (int j = 0; j <= cx.g.n; ++j) p[j] = tq.theta.at(cx.tg.m, j) - Kq[j];
    return p;
}

} // namespace

ControlProblem make_control_problem(const models::LinearizationCoeffs& coeffs,
                                    const pde::Conductivity& sigma,
                                    const geometry::NestedSupports& supports,
                                    const weights::WeightSet& ws, const Level& p0,
                                    const Level& q0, const SpaceTimeField& G,
                                    double eps_pen) {
    require(eps_pen > 0.0, "make_control_problem: eps_pen must be positive");
    require(G.same_layout(coeffs.ell_p) && G.same_layout(coeffs.A),
            "make_control_problem: coefficient and source layouts differ");
    const Grid1D& g = G.grid();
    const TimeGrid& tg = G.time();
    require((int)p0.size() == g.npts() && (int)q0.size() == g.npts(),
            "make_control_problem: initial data size mismatch");
    const geometry::MovingDomain& dom = supports.omega;
    require(std::abs(dom.L - g.L) <= 1e-12 * g.L && std::abs(dom.T - tg.T) <= 1e-12 * tg.T,
            "make_control_problem: support domain does not match the grid");
    require(ws.t_cap() < tg.T, "make_control_problem: weight clamp must sit below T");

    // rho4-weighted admissibility of G, accumulated in log space with
    // the exact (unnormalized) logarithms.
    LogAccumulator acc;
    bool all_finite = true;
    for (int k = 0; k <= tg.m && all_finite; ++k) {
        double lr4 = ws.log_rho(4, tg.t(k));
        for (int j = 0; j <= g.n; ++j) {
            double v = G.at(k, j);
            if (!std::isfinite(v)) {
                all_finite = false;
                break;
            }
            if (v == 0.0) continue;
            acc.add(2.0 * lr4 + 2.0 * std::log(std::abs(v)) +
                        std::log(tg.wt(k) * g.wx(j)),
                    1);
        }
    }
    require(all_finite && acc.result().log_abs < std::log(1e300),
            "make_control_problem: rho4-weighted source norm is not finite");

    ControlProblem prob;
    prob.ell_p = coeffs.ell_p;
    prob.A = coeffs.A;
    prob.sigma = sigma;
    prob.supports = supports;
    prob.ws = ws;
    prob.p0 = p0;
    prob.q0 = q0;
    prob.theta0 = pde::theta0_from_pq(p0, q0, sigma, coeffs.ell_p);
    prob.G = G;
    prob.eps_pen = eps_pen;
    return prob;
}

ControlReport synthesize_with_mask(const ControlProblem& prob,
                                   const SpaceTimeField& mask) {
    require(mask.same_layout(prob.G), "synthesize: mask layout mismatch");
    Ctx cx(prob, mask);

    // Free run (h = 0): right-hand side of the optimality system and
    // the reference terminal norms.
    pde::ThetaQResult free_run = forward_full(cx, cx.zeroF);
    SpaceTimeField b = state_gradient(cx, free_run.theta, free_run.q);
    {
        auto& bv = b.raw();
        for (size_t i = 0; i < bv.size(); ++i) bv[i] = -bv[i];
    }
    mask_into(mask, b);

    CgOutcome cg = run_pcg(cx, b);

    ControlReport rep;
    rep.h = cg.x;
    rep.cg_iterations = cg.iterations;
    rep.residual = cg.residual;
    rep.converged = cg.converged;
    rep.terminal_q_free = norm_space(free_run.q, cx.tg.m);
    rep.terminal_theta_free = norm_space(free_run.theta, cx.tg.m);

    pde::ThetaQResult run = cg.iterations == 0 && norm_hw(cg.x) == 0.0
                                ? std::move(free_run)
                                : forward_full(cx, rep.h);
    SpaceTimeField h_masked = rep.h;
    mask_into(mask, h_masked); // already masked; keeps the invariant exact
    rep.h = h_masked;
    rep.J_value = eval_J(cx, run.theta, run.q, h_masked);
    rep.terminal_theta = norm_space(run.theta, cx.tg.m);
    rep.terminal_q = norm_space(run.q, cx.tg.m);
    rep.terminal_p = norm_space(terminal_p_level(cx, run), cx.g);
    rep.weighted_theta = weighted_field_norm(cx, run.theta, cx.r1sq);
    rep.weighted_q = weighted_field_norm(cx, run.q, cx.r2sq);
    rep.weighted_h = weighted_field_norm(cx, h_masked, cx.r3sq);
    return rep;
}

ControlReport synthesize_null_control(const ControlProblem& prob) {
    SpaceTimeField mask =
        geometry::support_mask(prob.supports.omega, prob.G.grid(), prob.G.time());
    return synthesize_with_mask(prob, mask);
}

double gradient_check(const ControlProblem& prob, const SpaceTimeField& h_probe,
                      int n_dirs, uint64_t seed) {
    require(n_dirs >= 1, "gradient_check: need at least one direction");
    require(h_probe.same_layout(prob.G), "gradient_check: probe layout mismatch");
    SpaceTimeField mask =
        geometry::support_mask(prob.supports.omega, prob.G.grid(), prob.G.time());
    Ctx cx(prob, mask);

    SpaceTimeField h = h_probe;
    mask_into(mask, h);

    // Exact gradient at h.
    pde::ThetaQResult run = forward_full(cx, h);
    SpaceTimeField grad = state_gradient(cx, run.theta, run.q);
    for (int k = 0; k <= cx.tg.m; ++k) {
        double w = cx.r3sq[k];
        double* pg = grad.level(k);
        const double* ph = h.level(k);
        for (int j = 0; j <= cx.g.n; ++j) pg[j] += w * ph[j];
    }
    mask_into(mask, grad);

    auto J_at = [&](const SpaceTimeField& hh) {
        pde::ThetaQResult tq = forward_full(cx, hh);
        return eval_J(cx, tq.theta, tq.q, hh);
    };

    Rng rng(seed);
    double hnorm = norm_hw(h);
    double worst = 0.0;
    for (int d = 0; d < n_dirs; ++d) {
        SpaceTimeField dir(cx.g, cx.tg);
        for (double& v : dir.raw()) v = rng.symmetric();
        mask_into(mask, dir);
        double dnorm = norm_hw(dir);
        if (dnorm == 0.0) continue;
        double step = 1e-4 * (1.0 + hnorm) / dnorm;

        SpaceTimeField hp = h, hm = h;
        {
            auto& pv = hp.raw();
            auto& mv = hm.raw();
            const auto& dv = dir.raw();
            for (size_t i = 0; i < pv.size(); ++i) {
                pv[i] += step * dv[i];
                mv[i] -= step * dv[i];
            }
        }
        double fd = (J_at(hp) - J_at(hm)) / (2.0 * step);
        double an = dot_hw(grad, dir);
        double scale = std::max({std::abs(fd), std::abs(an), 1e-300});
        worst = std::max(worst, std::abs(fd - an) / scale);
    }
    return worst;
}

SpaceTimeField reconstruct_stimulation(const SpaceTimeField& h,
                                       const models::IonicModel& m) {
    SpaceTimeField out = h;
    const TimeGrid& tg = h.time();
    for (int k = 0; k <= tg.m; ++k) {
        double t = tg.t(k);
        double* po = out.level(k);
        for (int j = 0; j <= h.grid().n; ++j)
            po[j] = models::stimulation_from_control(po[j], t, m);
    }
    return out;
}

geometry::Interval1D default_fixed_interval(const geometry::MovingDomain& omega) {
    double meas = geometry::average_support_measure(omega, 512);
    double lo = 0.5 * (omega.L - meas);
    return geometry::Interval1D{lo, lo + meas};
}

ComparisonTable fixed_vs_moving_comparison(const ControlProblem& prob,
                                           const geometry::Interval1D& fixed_interval,
                                           std::vector<double> ladder) {
    require(fixed_interval.lo >= 0.0 && fixed_interval.hi <= prob.G.grid().L &&
                fixed_interval.lo < fixed_interval.hi,
            "fixed_vs_moving_comparison: interval must sit inside [0, L]");
    if (ladder.empty()) ladder = {1e-4, 1e-5, 1e-6, 1e-7, 1e-8};

    SpaceTimeField moving_mask =
        geometry::support_mask(prob.supports.omega, prob.G.grid(), prob.G.time());
    SpaceTimeField static_mask =
        geometry::interval_mask(fixed_interval, prob.G.grid(), prob.G.time());

    std::vector<ControlReport> reps = parallel::map<ControlReport>(
        2 * (int)ladder.size(),
        [&prob, &moving_mask, &static_mask, &ladder](int i) {
            ControlProblem local = prob;
            local.eps_pen = ladder[i / 2];
            return synthesize_with_mask(local,
                                        i % 2 == 0 ? moving_mask : static_mask);
        });

    ComparisonTable table;
    table.fixed_interval = fixed_interval;
    for (size_t i = 0; i < ladder.size(); ++i) {
        const ControlReport& mov = reps[2 * i];
        const ControlReport& sta = reps[2 * i + 1];
        ComparisonRow row;
        row.eps_pen = ladder[i];
        row.moving_terminal_theta = mov.terminal_theta;
        row.moving_terminal_q = mov.terminal_q;
        row.moving_J = mov.J_value;
        row.moving_iterations = mov.cg_iterations;
        row.static_terminal_theta = sta.terminal_theta;
        row.static_terminal_q = sta.terminal_q;
        row.static_J = sta.J_value;
        row.static_iterations = sta.cg_iterations;
        table.rows.push_back(row);
    }
    return table;
}

} // namespace control
} // namespace mdlab
