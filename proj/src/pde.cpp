#include "mdlab/pde.hpp"

#include <cmath>
#include <sstream>

namespace mdlab {
namespace pde {

Conductivity constant_conductivity(double value) {
    require(value > 0.0, "constant_conductivity: value must be positive");
    Conductivity c;
    c.sigma = [value](double) { return value; };
    c.sigma_min = value;
    return c;
}

// ---- EllipticK --------------------------------------------------------------

EllipticK::EllipticK(const Grid1D& g, const Conductivity& sigma) : g_(g) {
    require(sigma.sigma_min > 0.0, "EllipticK: sigma_min must be positive");
    face_.resize(g.n);
    for (int j = 0; j < g.n; ++j) {
        face_[j] = sigma.sigma((j + 0.5) * g.dx());
        require(face_[j] >= sigma.sigma_min * (1.0 - 1e-12),
                "EllipticK: sigma drops below sigma_min at a face");
    }
}

Level EllipticK::apply(const Level& q, const Level& ell_p) const {
    int n = g_.n;
    require((int)q.size() == n + 1 && (int)ell_p.size() == n + 1,
            "EllipticK::apply: size mismatch");
    double ih2 = 1.0 / (g_.dx() * g_.dx());
    Level out(n + 1);
    out[0] = 2.0 * ih2 * face_[0] * (q[0] - q[1]) + ell_p[0] * q[0];
    for (int j = 1; j < n; ++j)
        out[j] = ih2 * (-face_[j - 1] * q[j - 1] +
                        (face_[j - 1] + face_[j]) * q[j] - face_[j] * q[j + 1]) +
                 ell_p[j] * q[j];
    out[n] = 2.0 * ih2 * face_[n - 1] * (q[n] - q[n - 1]) + ell_p[n] * q[n];
    return out;
}

Tridiag EllipticK::build_matrix(double id_coef, double k_coef, const Level& ell_p,
                                double extra_coef, const Level* extra) const {
    int n = g_.n;
    require((int)ell_p.size() == n + 1, "EllipticK::build_matrix: size mismatch");
    double ih2 = 1.0 / (g_.dx() * g_.dx());
    Tridiag A(n + 1);
    for (int j = 0; j <= n; ++j) {
        double diag_k, lo = 0.0, up = 0.0;
        if (j == 0) {
            diag_k = 2.0 * ih2 * face_[0];
            up = -2.0 * ih2 * face_[0];
        } else if (j == n) {
            diag_k = 2.0 * ih2 * face_[n - 1];
            lo = -2.0 * ih2 * face_[n - 1];
        } else {
            diag_k = ih2 * (face_[j - 1] + face_[j]);
            lo = -ih2 * face_[j - 1];
            up = -ih2 * face_[j];
        }
        A.diag[j] = id_coef + k_coef * (diag_k + ell_p[j]);
        if (extra) A.diag[j] += extra_coef * (*extra)[j];
        A.lower[j] = k_coef * lo;
        A.upper[j] = k_coef * up;
    }
    return A;
}

// ---- shared helpers ---------------------------------------------------------

namespace {

Level mid_level(const SpaceTimeField& f, int k) {
    const Grid1D& g = f.grid();
    Level out(g.npts());
    for (int j = 0; j <= g.n; ++j) out[j] = 0.5 * (f.at(k, j) + f.at(k + 1, j));
    return out;
}

// (G + h .* mask) averaged between levels k and k+1.
Level mid_source(const SpaceTimeField& G, const SpaceTimeField& h,
                 const SpaceTimeField& mask, int k) {
    const Grid1D& g = G.grid();
    Level out(g.npts());
    for (int j = 0; j <= g.n; ++j)
        out[j] = 0.5 * (G.at(k, j) + h.at(k, j) * mask.at(k, j) + G.at(k + 1, j) +
                        h.at(k + 1, j) * mask.at(k + 1, j));
    return out;
}

void check_level(const Level& v, const Grid1D& g, const char* who) {
    require((int)v.size() == g.npts(), std::string(who) + ": level size mismatch");
}

} // namespace

// ---- monodomain -------------------------------------------------------------

namespace {

struct NewtonStats {
    int iters = 0;
    bool ok = false;
};

// One implicit-midpoint step of the monodomain system on [t, t+dt].
// f_mid is the averaged external source (I_si + I_se). w is eliminated
// exactly: with delta = dt*gamma/2,
//   w_next = [w (1 - delta*beta) + 2 delta v_hat] / (1 + delta*beta),
//   w_hat  = (w + delta v_hat) / (1 + delta*beta).
NewtonStats monodomain_step(const models::IonicModel& m, const EllipticK& K,
                            const Level& zero_ell, double dt, const Level& f_mid,
                            Level& v, Level& w) {
    int n = K.grid().n;
    double delta = 0.5 * dt * m.gamma;
    double wden = 1.0 + delta * m.beta;
    double dwdv = delta / wden;

    // explicit predictor
    Level u = v;
    {
        Level Kv = K.apply(v, zero_ell);
        for (int j = 0; j <= n; ++j)
            u[j] = v[j] + dt * (-Kv[j] - models::ionic_current(m, v[j], w[j]) + f_mid[j]);
    }

    NewtonStats st;
    double scale = 1.0;
    for (int j = 0; j <= n; ++j) scale = std::max(scale, std::abs(v[j]));
    const double tol = 1e-10 * scale;

    Level vhat(n + 1), what(n + 1), res(n + 1), jac_diag(n + 1);
    for (st.iters = 0; st.iters < 25; ++st.iters) {
        for (int j = 0; j <= n; ++j) {
            vhat[j] = 0.5 * (v[j] + u[j]);
            what[j] = (w[j] + delta * vhat[j]) / wden;
        }
        Level Kv = K.apply(vhat, zero_ell);
        double rmax = 0.0;
        for (int j = 0; j <= n; ++j) {
            res[j] = u[j] - v[j] +
                     dt * (Kv[j] + models::ionic_current(m, vhat[j], what[j]) - f_mid[j]);
            rmax = std::max(rmax, std::abs(res[j]));
        }
        if (rmax <= tol) {
            st.ok = true;
            break;
        }
        for (int j = 0; j <= n; ++j)
            jac_diag[j] = models::ionic_current_dv(m, vhat[j], what[j]) +
                          models::ionic_current_dw(m, vhat[j]) * dwdv;
        Tridiag J = K.build_matrix(1.0, 0.5 * dt, zero_ell, 0.5 * dt, &jac_diag);
        Level du = solve_tridiag(J, res);
        for (int j = 0; j <= n; ++j) u[j] -= du[j];
    }
    if (!st.ok) return st;

    for (int j = 0; j <= n; ++j) {
        double vh = 0.5 * (v[j] + u[j]);
        w[j] = (w[j] * (1.0 - delta * m.beta) + 2.0 * delta * vh) / wden;
        v[j] = u[j];
    }
    return st;
}

} // namespace

MonodomainResult solve_monodomain(const models::IonicModel& m, const Conductivity& sigma,
                                  const Level& v0, const Level& w0,
                                  const SpaceTimeField& I_si, const SpaceTimeField& I_se) {
    require(I_si.same_layout(I_se), "solve_monodomain: source layout mismatch");
    const Grid1D& g = I_si.grid();
    const TimeGrid& tg = I_si.time();
    check_level(v0, g, "solve_monodomain v0");
    check_level(w0, g, "solve_monodomain w0");
    require(m.gamma >= 0.0 && m.beta >= 0.0 && m.b >= 0.0,
            "solve_monodomain: gamma, beta, b must be nonnegative");

    EllipticK K(g, sigma);
    Level zero_ell(g.npts(), 0.0);
    MonodomainResult out;
    out.v = SpaceTimeField(g, tg);
    out.w = SpaceTimeField(g, tg);
    out.v.set_level(0, v0);
    out.w.set_level(0, w0);

    double dt = tg.dt();
    Level v = v0, w = w0;
    for (int k = 0; k < tg.m; ++k) {
        Level f_mid(g.npts());
        for (int j = 0; j <= g.n; ++j)
            f_mid[j] = 0.5 * (I_si.at(k, j) + I_se.at(k, j) + I_si.at(k + 1, j) +
                              I_se.at(k + 1, j));

        NewtonStats st = monodomain_step(m, K, zero_ell, dt, f_mid, v, w);
        out.total_newton_iters += st.iters;
        out.max_newton_iters = std::max(out.max_newton_iters, st.iters);
        if (!st.ok) {
            // Emergency halving: sub-steps share the midpoint source
            // (the source is only known on levels; within one step the
            // averaged value is the second-order choice at every
            // sub-midpoint up to O(dt^2)).
            int pieces = 2;
            bool done = false;
            for (; pieces <= 64 && !done; pieces *= 2) {
                Level vt = out.v.level_copy(k), wt = out.w.level_copy(k);
                done = true;
                for (int p = 0; p < pieces && done; ++p) {
                    NewtonStats sub =
                        monodomain_step(m, K, zero_ell, dt / pieces, f_mid, vt, wt);
                    out.total_newton_iters += sub.iters;
                    done = sub.ok;
                }
                if (done) {
                    v = vt;
                    w = wt;
                    ++out.substep_halvings;
                }
            }
            if (!done) {
                std::ostringstream msg;
                msg << "solve_monodomain: Newton failed to converge at step " << k
                    << " (t=" << tg.t(k) << ") even after halving to dt/" << (pieces / 2)
                    << "; residual tolerance 1e-10";
                throw convergence_error(msg.str());
            }
        }
        out.v.set_level(k + 1, v);
        out.w.set_level(k + 1, w);
    }
    return out;
}

TrajectoryReport solve_trajectory(const models::IonicModel& m, const Conductivity& sigma,
                                  const Level& v0, const Level& w0,
                                  const SpaceTimeField& I_si) {
    SpaceTimeField zero(I_si.grid(), I_si.time());
    MonodomainResult res = solve_monodomain(m, sigma, v0, w0, I_si, zero);

    TrajectoryReport rep;
    rep.total_newton_iters = res.total_newton_iters;
    const Grid1D& g = I_si.grid();
    const TimeGrid& tg = I_si.time();
    auto linf_h1 = [&](const SpaceTimeField& f) {
        double worst = 0.0;
        for (int k = 0; k <= tg.m; ++k) {
            double l2 = 0.0, grad = 0.0;
            for (int j = 0; j <= g.n; ++j) l2 += g.wx(j) * f.at(k, j) * f.at(k, j);
            for (int j = 0; j < g.n; ++j) {
                double s = (f.at(k, j + 1) - f.at(k, j)) / g.dx();
                grad += g.dx() * s * s;
            }
            worst = std::max(worst, std::sqrt(l2 + grad));
        }
        return worst;
    };
    rep.linf_h1_v = linf_h1(res.v);
    rep.linf_h1_w = linf_h1(res.w);
    rep.v = std::move(res.v);
    rep.w = std::move(res.w);
    return rep;
}

// ---- linearized p-q ---------------------------------------------------------

PQResult solve_linearized_pq(const SpaceTimeField& ell_p, const SpaceTimeField& ell_q,
                             const Conductivity& sigma, const Level& p0, const Level& q0,
                             const SpaceTimeField& G, const SpaceTimeField& h,
                             const SpaceTimeField& mask) {
    require(ell_p.same_layout(ell_q) && ell_p.same_layout(G) && ell_p.same_layout(h) &&
                ell_p.same_layout(mask),
            "solve_linearized_pq: layout mismatch");
    const Grid1D& g = G.grid();
    const TimeGrid& tg = G.time();
    check_level(p0, g, "solve_linearized_pq p0");
    check_level(q0, g, "solve_linearized_pq q0");

    EllipticK K(g, sigma);
    double dt = tg.dt();
    PQResult out;
    out.p = SpaceTimeField(g, tg);
    out.q = SpaceTimeField(g, tg);
    out.p.set_level(0, p0);
    out.q.set_level(0, q0);

    Level p = p0, q = q0;
    for (int k = 0; k < tg.m; ++k) {
        Level lp = mid_level(ell_p, k), lq = mid_level(ell_q, k);
        Level F = mid_source(G, h, mask, k);
        Level Kp = K.apply(p, lp);
        Level rhs(g.npts());
        for (int j = 0; j <= g.n; ++j)
            rhs[j] = p[j] - 0.5 * dt * Kp[j] - 0.25 * dt * dt * lq[j] * p[j] -
                     dt * lq[j] * q[j] + dt * F[j];
        Tridiag M = K.build_matrix(1.0, 0.5 * dt, lp, 0.25 * dt * dt, &lq);
        Level pn = solve_tridiag(M, rhs);
        for (int j = 0; j <= g.n; ++j) q[j] += 0.5 * dt * (p[j] + pn[j]);
        p = std::move(pn);
        out.p.set_level(k + 1, p);
        out.q.set_level(k + 1, q);
    }
    return out;
}

PQResult solve_linearized_pq(const models::LinearizationCoeffs& coeffs,
                             const Conductivity& sigma, const Level& p0, const Level& q0,
                             const SpaceTimeField& G, const SpaceTimeField& h,
                             const SpaceTimeField& mask) {
    return solve_linearized_pq(coeffs.ell_p, coeffs.ell_q, sigma, p0, q0, G, h, mask);
}

// ---- theta-q ----------------------------------------------------------------

ThetaQResult solve_theta_q(const SpaceTimeField& ell_p, const SpaceTimeField& A,
                           const Conductivity& sigma, const Level& theta0,
                           const Level& q0, const SpaceTimeField& G,
                           const SpaceTimeField& h, const SpaceTimeField& mask) {
    require(ell_p.same_layout(A) && ell_p.same_layout(G) && ell_p.same_layout(h) &&
                ell_p.same_layout(mask),
            "solve_theta_q: layout mismatch");
    const Grid1D& g = G.grid();
    const TimeGrid& tg = G.time();
    check_level(theta0, g, "solve_theta_q theta0");
    check_level(q0, g, "solve_theta_q q0");

    EllipticK K(g, sigma);
    double dt = tg.dt();
    ThetaQResult out;
    out.theta = SpaceTimeField(g, tg);
    out.q = SpaceTimeField(g, tg);
    out.theta.set_level(0, theta0);
    out.q.set_level(0, q0);

    Level th = theta0, q = q0;
    for (int k = 0; k < tg.m; ++k) {
        Level lp = mid_level(ell_p, k), Am = mid_level(A, k);
        Level F = mid_source(G, h, mask, k);
        Level Kq = K.apply(q, lp);
        Level rhs(g.npts());
        for (int j = 0; j <= g.n; ++j)
            rhs[j] = q[j] + dt * th[j] - 0.5 * dt * Kq[j] -
                     0.25 * dt * dt * Am[j] * q[j] + 0.5 * dt * dt * F[j];
        Tridiag M = K.build_matrix(1.0, 0.5 * dt, lp, 0.25 * dt * dt, &Am);
        Level qn = solve_tridiag(M, rhs);
        for (int j = 0; j <= g.n; ++j)
            th[j] += dt * (F[j] - 0.5 * Am[j] * (q[j] + qn[j]));
        q = std::move(qn);
        out.theta.set_level(k + 1, th);
        out.q.set_level(k + 1, q);
    }
    return out;
}

// ---- adjoint ----------------------------------------------------------------

AdjointResult solve_adjoint(const SpaceTimeField& ell_p, const SpaceTimeField& A,
                            const Conductivity& sigma, const Level& phiT,
                            const Level& psiT, const SpaceTimeField& R,
                            const SpaceTimeField& S) {
    require(ell_p.same_layout(A) && ell_p.same_layout(R) && ell_p.same_layout(S),
            "solve_adjoint: layout mismatch");
    const Grid1D& g = R.grid();
    const TimeGrid& tg = R.time();
    check_level(phiT, g, "solve_adjoint phiT");
    check_level(psiT, g, "solve_adjoint psiT");

    EllipticK K(g, sigma);
    double dt = tg.dt();
    AdjointResult out;
    out.phi = SpaceTimeField(g, tg);
    out.psi = SpaceTimeField(g, tg);
    out.phi.set_level(tg.m, phiT);
    out.psi.set_level(tg.m, psiT);

    Level phi = phiT, psi = psiT;
    for (int k = tg.m - 1; k >= 0; --k) {
        // midpoint coefficients of the interval [t_k, t_{k+1}] — the
        // same levels the forward step uses, which is what makes the
        // map the exact transpose.
        Level lp = mid_level(ell_p, k), Am = mid_level(A, k);
        Level Rm = mid_level(R, k), Sm = mid_level(S, k);
        Level Kpsi = K.apply(psi, lp);
        Level rphi(g.npts()), rpsi(g.npts());
        for (int j = 0; j <= g.n; ++j) {
            rphi[j] = phi[j] + 0.5 * dt * psi[j] + dt * Rm[j];
            rpsi[j] = psi[j] - 0.5 * dt * (Am[j] * phi[j] + Kpsi[j]) + dt * Sm[j];
        }
        Level rhs(g.npts());
        for (int j = 0; j <= g.n; ++j)
            rhs[j] = rpsi[j] - 0.5 * dt * Am[j] * rphi[j];
        Tridiag M = K.build_matrix(1.0, 0.5 * dt, lp, 0.25 * dt * dt, &Am);
        psi = solve_tridiag(M, rhs);
        for (int j = 0; j <= g.n; ++j) phi[j] = rphi[j] + 0.5 * dt * psi[j];
        out.phi.set_level(k, phi);
        out.psi.set_level(k, psi);
    }
    return out;
}

// ---- heat with memory ---------------------------------------------------------

SpaceTimeField solve_heat_memory(const Conductivity& sigma, double d, const Level& p0,
                                 const SpaceTimeField& h, const SpaceTimeField& mask) {
    require(h.same_layout(mask), "solve_heat_memory: layout mismatch");
    const Grid1D& g = h.grid();
    const TimeGrid& tg = h.time();
    check_level(p0, g, "solve_heat_memory p0");

    EllipticK K(g, sigma);
    double dt = tg.dt();
    SpaceTimeField out(g, tg);
    out.set_level(0, p0);

    Level dlev(g.npts(), d), ones(g.npts(), 1.0);
    Level p = p0, mem(g.npts(), 0.0); // mem = int_0^{t_k} p, trapezoid
    SpaceTimeField zeroG(g, tg);
    for (int k = 0; k < tg.m; ++k) {
        Level F = mid_source(zeroG, h, mask, k);
        Level Kp = K.apply(p, dlev);
        Level rhs(g.npts());
        for (int j = 0; j <= g.n; ++j)
            rhs[j] = p[j] - 0.5 * dt * Kp[j] - 0.25 * dt * dt * p[j] - dt * mem[j] +
                     dt * F[j];
        Tridiag M = K.build_matrix(1.0, 0.5 * dt, dlev, 0.25 * dt * dt, &ones);
        Level pn = solve_tridiag(M, rhs);
        for (int j = 0; j <= g.n; ++j) mem[j] += 0.5 * dt * (p[j] + pn[j]);
        p = std::move(pn);
        out.set_level(k + 1, p);
    }
    return out;
}

// ---- glue ---------------------------------------------------------------------

Level theta0_from_pq(const Level& p0, const Level& q0, const Conductivity& sigma,
                     const SpaceTimeField& ell_p) {
    const Grid1D& g = ell_p.grid();
    check_level(p0, g, "theta0_from_pq p0");
    check_level(q0, g, "theta0_from_pq q0");
    EllipticK K(g, sigma);
    Level Kq = K.apply(q0, ell_p.level_copy(0));
    Level out(g.npts());
    for (int j = 0; j <= g.n; ++j) out[j] = p0[j] + Kq[j];
    return out;
}

SpaceTimeField reconstruct_p(const ThetaQResult& tq, const SpaceTimeField& ell_p,
                             const Conductivity& sigma) {
    require(tq.theta.same_layout(ell_p), "reconstruct_p: layout mismatch");
    const Grid1D& g = ell_p.grid();
    const TimeGrid& tg = ell_p.time();
    EllipticK K(g, sigma);
    SpaceTimeField p(g, tg);
    for (int k = 0; k <= tg.m; ++k) {
        Level Kq = K.apply(tq.q.level_copy(k), ell_p.level_copy(k));
        for (int j = 0; j <= g.n; ++j) p.at(k, j) = tq.theta.at(k, j) - Kq[j];
    }
    return p;
}

} // namespace pde
} // namespace mdlab
