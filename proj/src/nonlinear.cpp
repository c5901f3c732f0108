#include "mdlab/nonlinear.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "mdlab/logsum.hpp"
#include "mdlab/parallel.hpp"

namespace mdlab {
namespace nonlinear {

namespace {

constexpr double kPicardTol = 1e-6;

double combined_norm(const SpaceTimeField& a, const SpaceTimeField& b) {
    double na = norm_space_time(a);
    double nb = norm_space_time(b);
    return std::sqrt(na * na + nb * nb);
}

bool field_finite(const SpaceTimeField& f) {
    for (double v : f.raw())
        if (!std::isfinite(v)) return false;
    return true;
}

double weighted_log_norm(const weights::WeightSet& ws, const SpaceTimeField& f) {
    const Grid1D& g = f.grid();
    const TimeGrid& tg = f.time();
    LogAccumulator acc;
    for (int k = 0; k <= tg.m; ++k) {
        double lr4 = ws.log_rho(4, tg.t(k));
        const double* pf = f.level(k);
        for (int j = 0; j <= g.n; ++j) {
            if (pf[j] == 0.0) continue;
            acc.add(2.0 * lr4 + 2.0 * std::log(std::abs(pf[j])) +
                        std::log(tg.wt(k) * g.wx(j)),
                    1);
        }
    }
    return 0.5 * acc.result().log_abs;
}

void q_diagnostics(const weights::WeightSet& ws, const SpaceTimeField& q,
                   IterationTrace& tr) {
    const Grid1D& g = q.grid();
    const TimeGrid& tg = q.time();
    double l2 = 0.0, l4 = 0.0;
    for (int k = 0; k <= tg.m; ++k) {
        double r4 = ws.rho(4, tg.t(k));
        double r4sq = r4 * r4;
        const double* pq = q.level(k);
        double a2 = 0.0, a4 = 0.0;
        for (int j = 0; j <= g.n; ++j) {
            double v = pq[j] * pq[j];
            a2 += g.wx(j) * v;
            a4 += g.wx(j) * v * v;
        }
        l2 += tg.wt(k) * r4sq * a2;
        l4 += tg.wt(k) * r4sq * a4;
    }
    tr.q_rho4_l2 = std::sqrt(l2);
    tr.q_rho4_l4 = std::pow(l4, 0.25);
}

} // namespace

SteeringReport steer_to_trajectory(const SteeringProblem& sp) {
    require(sp.v_bar.same_layout(sp.w_bar) && sp.v_bar.same_layout(sp.I_si),
            "steer_to_trajectory: trajectory field layouts differ");
    const Grid1D& g = sp.v_bar.grid();
    const TimeGrid& tg = sp.v_bar.time();
    require((int)sp.v0.size() == g.npts() && (int)sp.w0.size() == g.npts(),
            "steer_to_trajectory: initial data size mismatch");
    require(sp.max_outer >= 1, "steer_to_trajectory: max_outer must be >= 1");

    // Perturbation at t = 0 in both variable sets.
    Level y0(g.npts()), z0(g.npts()), p0(g.npts()), q0(g.npts());
    for (int j = 0; j <= g.n; ++j) {
        y0[j] = sp.v0[j] - sp.v_bar.at(0, j);
        z0[j] = sp.w0[j] - sp.w_bar.at(0, j);
        auto pq = models::change_variables_forward(y0[j], z0[j], 0.0, sp.model);
        p0[j] = pq.first;
        q0[j] = pq.second;
    }
    double perturb = std::sqrt(norm_space(y0, g) * norm_space(y0, g) +
                               norm_space(z0, g) * norm_space(z0, g));

    SteeringReport rep;
    rep.tol_terminal = sp.tol_terminal > 0.0 ? sp.tol_terminal : 1e-3 * perturb;

    models::LinearizationCoeffs coeffs = models::linearize(sp.model, sp.v_bar, sp.w_bar);
    SpaceTimeField mask = geometry::support_mask(sp.supports.omega, g, tg);

    SpaceTimeField G(g, tg); // G_0 = 0
    SpaceTimeField h(g, tg);
    SpaceTimeField p(g, tg), q(g, tg);
    double norm_prev = 0.0, norm_first = 0.0;
    bool have_prev = false;
    bool picard_converged = false;

    for (int it = 1; it <= sp.max_outer; ++it) {
        if (!field_finite(G)) {
            rep.diverged = true;
            rep.diagnostic = "frozen source left the admissible set (non-finite values)";
            break;
        }

        control::ControlProblem prob = control::make_control_problem(
            coeffs, sp.sigma, sp.supports, sp.ws, p0, q0, G, sp.eps_pen);
        prob.cg_max = sp.cg_max;
        prob.cg_tol = sp.cg_tol;
        control::ControlReport crep = control::synthesize_null_control(prob);
        h = crep.h;

        pde::PQResult pq =
            pde::solve_linearized_pq(coeffs, sp.sigma, p0, q0, G, h, mask);

        double norm_new = combined_norm(pq.p, pq.q);
        IterationTrace tr;
        tr.iteration = it;
        tr.g_norm = norm_space_time(G);
        tr.g_weighted_log = weighted_log_norm(sp.ws, G);
        tr.iterate_norm = norm_new;
        tr.cg_iterations = crep.cg_iterations;
        tr.cg_residual = crep.residual;
        q_diagnostics(sp.ws, pq.q, tr);

        double rel;
        if (!have_prev) {
            rel = norm_new == 0.0 ? 0.0 : 1.0;
            norm_first = norm_new;
        } else {
            double num = 0.0;
            {
                double dp = 0.0, dq = 0.0;
                SpaceTimeField diff_p = pq.p, diff_q = pq.q;
                auto& dpv = diff_p.raw();
                auto& dqv = diff_q.raw();
                const auto& opv = p.raw();
                const auto& oqv = q.raw();
                for (size_t i = 0; i < dpv.size(); ++i) {
                    dpv[i] -= opv[i];
                    dqv[i] -= oqv[i];
                }
                dp = norm_space_time(diff_p);
                dq = norm_space_time(diff_q);
                num = std::sqrt(dp * dp + dq * dq);
            }
            rel = num / std::max(norm_prev, 1e-300);
        }
        tr.rel_change = rel;
        rep.trace.push_back(tr);
        rep.outer_iterations = it;

        p = std::move(pq.p);
        q = std::move(pq.q);
        norm_prev = norm_new;
        have_prev = true;

        if (!std::isfinite(norm_new) ||
            (norm_first > 0.0 && norm_new > sp.divergence_factor * norm_first)) {
            rep.diverged = true;
            std::ostringstream os;
            os << "fixed-point iterate norm grew to " << norm_new << " from "
               << norm_first << " (abort factor " << sp.divergence_factor << ")";
            rep.diagnostic = os.str();
            break;
        }
        if (rel <= kPicardTol) {
            picard_converged = true;
            break;
        }
        G = models::nonlinearity_field(sp.model, sp.v_bar, p, q);
        for (double& v : G.raw()) v = -v;
    }

    rep.h = h;
    rep.I_se = control::reconstruct_stimulation(h, sp.model);

    // Verification in the original variables.
    try {
        pde::MonodomainResult ver =
            pde::solve_monodomain(sp.model, sp.sigma, sp.v0, sp.w0, sp.I_si, rep.I_se);
        Level dv(g.npts()), dw(g.npts());
        for (int j = 0; j <= g.n; ++j) {
            dv[j] = ver.v.at(tg.m, j) - sp.v_bar.at(tg.m, j);
            dw[j] = ver.w.at(tg.m, j) - sp.w_bar.at(tg.m, j);
        }
        rep.terminal_error = std::sqrt(norm_space(dv, g) * norm_space(dv, g) +
                                       norm_space(dw, g) * norm_space(dw, g));
        rep.v = std::move(ver.v);
        rep.w = std::move(ver.w);
    } catch (const convergence_error& e) {
        rep.terminal_error = std::numeric_limits<double>::infinity();
        if (rep.diagnostic.empty())
            rep.diagnostic = std::string("verification solve failed: ") + e.what();
    }

    rep.converged = picard_converged && !rep.diverged &&
                    rep.terminal_error <= rep.tol_terminal;
    if (!rep.converged && rep.diagnostic.empty()) {
        rep.diagnostic = picard_converged
                             ? "fixed point converged but the terminal error "
                               "exceeds the tolerance"
                             : "fixed point did not converge within max_outer";
    }
    return rep;
}

std::vector<BasinRow> basin_sweep(const SteeringProblem& sp,
                                  const std::vector<double>& deltas) {
    const Grid1D& g = sp.v_bar.grid();
    Level dv(g.npts()), dw(g.npts());
    for (int j = 0; j <= g.n; ++j) {
        dv[j] = sp.v0[j] - sp.v_bar.at(0, j);
        dw[j] = sp.w0[j] - sp.w_bar.at(0, j);
    }

    return parallel::map<BasinRow>(
        (int)deltas.size(), [&sp, &dv, &dw, &g, &deltas](int i) {
            double delta = deltas[i];
            SteeringProblem local = sp;
            for (int j = 0; j <= g.n; ++j) {
                local.v0[j] = sp.v_bar.at(0, j) + delta * dv[j];
                local.w0[j] = sp.w_bar.at(0, j) + delta * dw[j];
            }
            BasinRow row;
            row.delta = delta;
            try {
                SteeringReport r = steer_to_trajectory(local);
                row.converged = r.converged;
                row.terminal_error = r.terminal_error;
                row.outer_iterations = r.outer_iterations;
            } catch (const std::exception&) {
                row.converged = false;
                row.terminal_error = std::numeric_limits<double>::infinity();
                row.outer_iterations = 0;
            }
            return row;
        });
}

} // namespace nonlinear
} // namespace mdlab
