#include "mdlab/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"

#include "mdlab/carleman.hpp"
#include "mdlab/config.hpp"
#include "mdlab/control.hpp"
#include "mdlab/errors.hpp"
#include "mdlab/geometry.hpp"
#include "mdlab/grid.hpp"
#include "mdlab/models.hpp"
#include "mdlab/nonlinear.hpp"
#include "mdlab/parallel.hpp"
#include "mdlab/pde.hpp"
#include "mdlab/svg.hpp"
#include "mdlab/weights.hpp"

namespace fs = std::filesystem;

namespace mdlab {
namespace cli {

using namespace config;

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

const char* yesno(bool b) { return b ? "yes" : "no"; }

void write_text(const fs::path& p, const std::string& body) {
    std::ofstream out(p, std::ios::binary);
    require(out.good(), "cannot open '" + p.string() + "' for writing");
    out.write(body.data(), (std::streamsize)body.size());
    require(out.good(), "failed writing '" + p.string() + "'");
}

fs::path ensure_outdir(const ExperimentConfig& cfg) {
    fs::path dir(cfg.output.dir);
    fs::create_directories(dir);
    return dir;
}

void write_meta(const fs::path& dir, const ExperimentConfig& cfg,
                const std::string& subcommand) {
    std::ostringstream o;
    o << "# mdlab 1.0.0\n";
    o << "# subcommand: " << subcommand << "\n";
    o << render_config(cfg);
    write_text(dir / "meta.txt", o.str());
}

void maybe_plots(const ExperimentConfig& cfg) {
    if (cfg.output.plots) emit_plots(cfg.output.dir, std::cout);
}

models::IonicModel model_from(const ModelConfig& mc) {
    models::IonicModel m;
    m.kind = mc.kind == "fhn" ? models::ModelKind::FHN : models::ModelKind::RM;
    m.a = mc.a;
    m.b = mc.b;
    m.c = mc.c;
    m.gamma = mc.gamma;
    m.beta = mc.beta;
    return m;
}

// Gaussian bump amp * exp(-((x - center) / width)^2) on the nodes.
Level bump_level(const Grid1D& g, double amp, double center, double width) {
    Level v(g.npts());
    for (int j = 0; j <= g.n; ++j) {
        double u = (g.x(j) - center) / width;
        v[j] = amp * std::exp(-u * u);
    }
    return v;
}

geometry::NestedSupports supports_from(const ExperimentConfig& cfg) {
    geometry::MovingDomain dom = geometry::make_moving_domain(
        cfg.domain.L, cfg.domain.T, cfg.domain.ell, cfg.domain.margin);
    return geometry::build_nested(dom, cfg.domain.ell1, cfg.domain.ell_omega);
}

double resolve_s(const ExperimentConfig& cfg, const weights::EtaFunction& eta,
                 const TimeGrid& tg, bool conjugation) {
    if (cfg.carleman.s > 0.0) return cfg.carleman.s;
    if (conjugation) return 1e-3;
    return weights::auto_s(eta, cfg.carleman.lambda, cfg.carleman.tau, tg,
                           cfg.carleman.t_cap_fraction, cfg.carleman.budget);
}

weights::WeightSet build_weight_set(const ExperimentConfig& cfg,
                                    const geometry::NestedSupports& sup,
                                    const TimeGrid& tg) {
    weights::EtaFunction eta = weights::build_eta(sup.omega0);
    weights::CarlemanParams prm;
    prm.s = resolve_s(cfg, eta, tg, false);
    prm.lambda = cfg.carleman.lambda;
    prm.tau = cfg.carleman.tau;
    return weights::build_weights(eta, prm, tg, cfg.carleman.t_cap_fraction);
}

// Shared scaffolding for the linear-control commands: reference
// trajectory, linearized coefficients, and the perturbation expressed
// in the controlled variables.
struct LinearSetup {
    Grid1D g;
    TimeGrid tg;
    models::IonicModel model;
    pde::Conductivity sigma;
    geometry::NestedSupports supports;
    weights::WeightSet ws;
    pde::TrajectoryReport trajectory;
    models::LinearizationCoeffs coeffs;
    Level p0, q0;
    double p0_norm = 0.0;
};

LinearSetup build_linear_setup(const ExperimentConfig& cfg) {
    LinearSetup s;
    s.g = Grid1D(cfg.domain.L, cfg.grid.n);
    s.tg = TimeGrid(cfg.domain.T, cfg.grid.m);
    s.model = model_from(cfg.model);
    s.sigma = pde::constant_conductivity(cfg.model.sigma);
    s.supports = supports_from(cfg);
    geometry::verify_nesting(s.supports, s.g);
    s.ws = build_weight_set(cfg, s.supports, s.tg);

    Level vb0 = bump_level(s.g, cfg.model.v0_amp, cfg.model.v0_center, cfg.model.v0_width);
    Level wb0 = bump_level(s.g, cfg.model.w0_amp, cfg.model.v0_center, cfg.model.v0_width);
    SpaceTimeField zero(s.g, s.tg);
    s.trajectory = pde::solve_trajectory(s.model, s.sigma, vb0, wb0, zero);
    s.coeffs = models::linearize(s.model, s.trajectory.v, s.trajectory.w);

    Level shape = bump_level(s.g, 1.0, cfg.nonlinear.pert_center, cfg.nonlinear.pert_width);
    s.p0.resize(s.g.npts());
    s.q0.resize(s.g.npts());
    for (int j = 0; j <= s.g.n; ++j) {
        double y0 = cfg.nonlinear.delta * shape[j];
        double z0 = cfg.nonlinear.delta * cfg.nonlinear.pert_w * shape[j];
        std::pair<double, double> pq =
            models::change_variables_forward(y0, z0, 0.0, s.model);
        s.p0[j] = pq.first;
        s.q0[j] = pq.second;
    }
    s.p0_norm = norm_space(s.p0, s.g);
    return s;
}

// ---- subcommands -----------------------------------------------------------

int cmd_simulate(const ExperimentConfig& cfg) {
    Grid1D g(cfg.domain.L, cfg.grid.n);
    TimeGrid tg(cfg.domain.T, cfg.grid.m);
    models::IonicModel m = model_from(cfg.model);
    pde::Conductivity sigma = pde::constant_conductivity(cfg.model.sigma);
    Level v0 = bump_level(g, cfg.model.v0_amp, cfg.model.v0_center, cfg.model.v0_width);
    Level w0 = bump_level(g, cfg.model.w0_amp, cfg.model.v0_center, cfg.model.v0_width);
    SpaceTimeField zero(g, tg);
    pde::MonodomainResult res = pde::solve_monodomain(m, sigma, v0, w0, zero, zero);

    fs::path dir = ensure_outdir(cfg);
    write_field_csv((dir / "v.csv").string(), res.v);
    write_field_csv((dir / "w.csv").string(), res.w);

    std::ostringstream r;
    r << "monodomain simulation, model " << cfg.model.kind << "\n";
    r << "  grid n=" << cfg.grid.n << " m=" << cfg.grid.m << ", L=" << fmt(cfg.domain.L)
      << " T=" << fmt(cfg.domain.T) << "\n";
    r << "  newton iterations: worst step " << res.max_newton_iters << ", total "
      << res.total_newton_iters << ", emergency halvings " << res.substep_halvings
      << "\n";
    r << "  ||v(T)|| = " << fmt(norm_space(res.v, cfg.grid.m)) << ", ||w(T)|| = "
      << fmt(norm_space(res.w, cfg.grid.m)) << "\n";
    r << "  max |v| = " << fmt(norm_linf(res.v)) << ", max |w| = "
      << fmt(norm_linf(res.w)) << "\n";
    write_text(dir / "report.txt", r.str());
    write_meta(dir, cfg, "simulate");
    maybe_plots(cfg);
    return 0;
}

int cmd_trajectory(const ExperimentConfig& cfg) {
    Grid1D g(cfg.domain.L, cfg.grid.n);
    TimeGrid tg(cfg.domain.T, cfg.grid.m);
    models::IonicModel m = model_from(cfg.model);
    pde::Conductivity sigma = pde::constant_conductivity(cfg.model.sigma);
    Level v0 = bump_level(g, cfg.model.v0_amp, cfg.model.v0_center, cfg.model.v0_width);
    Level w0 = bump_level(g, cfg.model.w0_amp, cfg.model.v0_center, cfg.model.v0_width);
    SpaceTimeField zero(g, tg);
    pde::TrajectoryReport tr = pde::solve_trajectory(m, sigma, v0, w0, zero);

    fs::path dir = ensure_outdir(cfg);
    write_field_csv((dir / "v_bar.csv").string(), tr.v);
    write_field_csv((dir / "w_bar.csv").string(), tr.w);

    std::ostringstream r;
    r << "reference trajectory, model " << cfg.model.kind << "\n";
    r << "  grid n=" << cfg.grid.n << " m=" << cfg.grid.m << "\n";
    r << "  sup_t H1 norm of v: " << fmt(tr.linf_h1_v) << "\n";
    r << "  sup_t H1 norm of w: " << fmt(tr.linf_h1_w) << "\n";
    r << "  newton iterations total: " << tr.total_newton_iters << "\n";
    write_text(dir / "report.txt", r.str());
    write_meta(dir, cfg, "trajectory");
    maybe_plots(cfg);
    return 0;
}

int cmd_control_linear(const ExperimentConfig& cfg) {
    LinearSetup s = build_linear_setup(cfg);
    SpaceTimeField zero(s.g, s.tg);
    control::ControlProblem prob = control::make_control_problem(
        s.coeffs, s.sigma, s.supports, s.ws, s.p0, s.q0, zero, cfg.control.eps_pen);
    prob.cg_max = cfg.control.cg_max;
    prob.cg_tol = cfg.control.cg_tol;

    // A fixed interval replaces the sweeping support mask when requested.
    const bool static_omega = cfg.control.fixed_lo < cfg.control.fixed_hi;
    geometry::Interval1D fixed{cfg.control.fixed_lo, cfg.control.fixed_hi};
    SpaceTimeField static_mask;
    if (static_omega) static_mask = geometry::interval_mask(fixed, s.g, s.tg);
    auto synth = [&](const control::ControlProblem& p) {
        return static_omega ? control::synthesize_with_mask(p, static_mask)
                            : control::synthesize_null_control(p);
    };

    control::ControlReport rep = synth(prob);

    std::vector<double> ladder = cfg.control.ladder;
    std::vector<control::ControlReport> lreps =
        parallel::map<control::ControlReport>(
            (int)ladder.size(), [&prob, &ladder, &synth](int i) {
                control::ControlProblem local = prob;
                local.eps_pen = ladder[i];
                return synth(local);
            });

    fs::path dir = ensure_outdir(cfg);
    write_field_csv((dir / "control.csv").string(), rep.h);
    std::vector<std::vector<double>> rows;
    for (size_t i = 0; i < ladder.size(); ++i) {
        const control::ControlReport& lr = lreps[i];
        rows.push_back({ladder[i], lr.terminal_p, lr.terminal_q, lr.terminal_theta,
                        lr.terminal_q_free, lr.J_value, lr.weighted_h,
                        (double)lr.cg_iterations, lr.converged ? 1.0 : 0.0,
                        lr.residual});
    }
    write_table_csv((dir / "ladder.csv").string(),
                    {"eps_pen", "terminal_p", "terminal_q", "terminal_theta",
                     "terminal_q_free", "J", "weighted_h", "cg_iterations",
                     "converged", "residual"},
                    rows);

    std::ostringstream r;
    if (static_omega)
        r << "linear null control on the static interval [" << fmt(fixed.lo) << ", "
          << fmt(fixed.hi) << "]\n";
    else
        r << "linear null control on the moving support\n";
    r << "  grid n=" << cfg.grid.n << " m=" << cfg.grid.m << ", s = "
      << fmt(s.ws.params().s) << ", lambda = " << fmt(s.ws.params().lambda) << "\n";
    r << "  eps_pen = " << fmt(cfg.control.eps_pen) << "\n";
    r << "  cg iterations " << rep.cg_iterations << ", relative gradient "
      << fmt(rep.residual) << ", converged " << yesno(rep.converged) << "\n";
    r << "  J = " << fmt(rep.J_value) << "\n";
    r << "  ||p0|| = " << fmt(s.p0_norm) << "\n";
    r << "  ||p(T)|| = " << fmt(rep.terminal_p);
    if (s.p0_norm > 0.0)
        r << "  (" << fmt(rep.terminal_p / s.p0_norm) << " of ||p0||)";
    r << "\n";
    r << "  ||q(T)|| = " << fmt(rep.terminal_q) << ", free run " << fmt(rep.terminal_q_free);
    if (rep.terminal_q > 0.0)
        r << "  (reduction " << fmt(rep.terminal_q_free / rep.terminal_q) << "x)";
    r << "\n";
    r << "penalty ladder (eps_pen, ||p(T)||, ||q(T)||, cg iters, converged):\n";
    for (size_t i = 0; i < ladder.size(); ++i) {
        r << "  " << fmt(ladder[i]) << "  " << fmt(lreps[i].terminal_p) << "  "
          << fmt(lreps[i].terminal_q) << "  " << lreps[i].cg_iterations << "  "
          << yesno(lreps[i].converged) << "\n";
    }
    write_text(dir / "report.txt", r.str());
    write_meta(dir, cfg, "control-linear");
    maybe_plots(cfg);
    return rep.converged ? 0 : 3;
}

int cmd_control_nonlinear(const ExperimentConfig& cfg, bool sweep) {
    Grid1D g(cfg.domain.L, cfg.grid.n);
    TimeGrid tg(cfg.domain.T, cfg.grid.m);
    models::IonicModel m = model_from(cfg.model);
    pde::Conductivity sigma = pde::constant_conductivity(cfg.model.sigma);
    geometry::NestedSupports sup = supports_from(cfg);
    geometry::verify_nesting(sup, g);
    weights::WeightSet ws = build_weight_set(cfg, sup, tg);

    Level vb0 = bump_level(g, cfg.model.v0_amp, cfg.model.v0_center, cfg.model.v0_width);
    Level wb0 = bump_level(g, cfg.model.w0_amp, cfg.model.v0_center, cfg.model.v0_width);
    SpaceTimeField zero(g, tg);
    pde::TrajectoryReport tr = pde::solve_trajectory(m, sigma, vb0, wb0, zero);

    nonlinear::SteeringProblem sp;
    sp.model = m;
    sp.sigma = sigma;
    sp.v_bar = tr.v;
    sp.w_bar = tr.w;
    sp.I_si = zero;
    sp.supports = sup;
    sp.ws = ws;
    sp.tol_terminal = cfg.nonlinear.tol_terminal;
    sp.max_outer = cfg.nonlinear.max_outer;
    sp.eps_pen = cfg.control.eps_pen;
    sp.cg_max = cfg.control.cg_max;
    sp.cg_tol = cfg.control.cg_tol;
    sp.divergence_factor = cfg.nonlinear.divergence_factor;

    // The stored perturbation acts as the unit shape in sweep mode and
    // as the full perturbation in single-run mode.
    double amp = sweep ? 1.0 : cfg.nonlinear.delta;
    Level shape = bump_level(g, 1.0, cfg.nonlinear.pert_center, cfg.nonlinear.pert_width);
    sp.v0.resize(g.npts());
    sp.w0.resize(g.npts());
    for (int j = 0; j <= g.n; ++j) {
        sp.v0[j] = tr.v.at(0, j) + amp * shape[j];
        sp.w0[j] = tr.w.at(0, j) + amp * cfg.nonlinear.pert_w * shape[j];
    }

    fs::path dir = ensure_outdir(cfg);

    if (sweep) {
        std::vector<nonlinear::BasinRow> rows =
            nonlinear::basin_sweep(sp, cfg.nonlinear.deltas);
        std::vector<std::vector<double>> table;
        for (const nonlinear::BasinRow& row : rows)
            table.push_back({row.delta, row.converged ? 1.0 : 0.0,
                             row.terminal_error, (double)row.outer_iterations});
        write_table_csv((dir / "basin.csv").string(),
                        {"delta", "converged", "terminal_error", "outer_iterations"},
                        table);
        std::ostringstream r;
        r << "perturbation-size sweep, model " << cfg.model.kind << "\n";
        r << "  grid n=" << cfg.grid.n << " m=" << cfg.grid.m << ", eps_pen = "
          << fmt(cfg.control.eps_pen) << "\n";
        r << "  delta  converged  terminal error  outer iters\n";
        for (const nonlinear::BasinRow& row : rows)
            r << "  " << fmt(row.delta) << "  " << yesno(row.converged) << "  "
              << fmt(row.terminal_error) << "  " << row.outer_iterations << "\n";
        write_text(dir / "report.txt", r.str());
        write_meta(dir, cfg, "control-nonlinear");
        maybe_plots(cfg);
        return 0;
    }

    nonlinear::SteeringReport rep = nonlinear::steer_to_trajectory(sp);

    write_field_csv((dir / "stimulation.csv").string(), rep.I_se);
    write_field_csv((dir / "control.csv").string(), rep.h);
    write_field_csv((dir / "v.csv").string(), rep.v);
    write_field_csv((dir / "w.csv").string(), rep.w);
    std::vector<std::vector<double>> trace;
    for (const nonlinear::IterationTrace& it : rep.trace)
        trace.push_back({(double)it.iteration, it.g_norm, it.g_weighted_log,
                         it.iterate_norm, it.rel_change, (double)it.cg_iterations,
                         it.cg_residual, it.q_rho4_l2, it.q_rho4_l4});
    write_table_csv((dir / "trace.csv").string(),
                    {"iteration", "g_norm", "g_weighted_log", "iterate_norm",
                     "rel_change", "cg_iterations", "cg_residual", "q_rho4_l2",
                     "q_rho4_l4"},
                    trace);

    std::ostringstream r;
    r << "nonlinear steering to the reference trajectory, model " << cfg.model.kind
      << "\n";
    r << "  grid n=" << cfg.grid.n << " m=" << cfg.grid.m << ", delta = "
      << fmt(cfg.nonlinear.delta) << ", eps_pen = " << fmt(cfg.control.eps_pen)
      << "\n";
    r << "  outer iterations " << rep.outer_iterations << ", converged "
      << yesno(rep.converged) << ", diverged " << yesno(rep.diverged) << "\n";
    r << "  terminal error " << fmt(rep.terminal_error) << " (tolerance "
      << fmt(rep.tol_terminal) << ")\n";
    if (!rep.diagnostic.empty()) r << "  note: " << rep.diagnostic << "\n";
    r << "  iteration trace (iter, ||G||, ||(p,q)||, rel change, cg iters):\n";
    for (const nonlinear::IterationTrace& it : rep.trace)
        r << "    " << it.iteration << "  " << fmt(it.g_norm) << "  "
          << fmt(it.iterate_norm) << "  " << fmt(it.rel_change) << "  "
          << it.cg_iterations << "\n";
    write_text(dir / "report.txt", r.str());
    write_meta(dir, cfg, "control-nonlinear");
    maybe_plots(cfg);
    return rep.converged ? 0 : 3;
}

carleman::CheckKind parse_check_kind(const std::string& which) {
    if (which == "ode") return carleman::CheckKind::ode;
    if (which == "neumann") return carleman::CheckKind::neumann;
    if (which == "coupled") return carleman::CheckKind::coupled;
    if (which == "nonvanishing") return carleman::CheckKind::nonvanishing;
    if (which == "conjugation") return carleman::CheckKind::conjugation;
    throw precondition_error("unknown check '" + which + "'");
}

// Coefficients of the adjoint pair from a reference trajectory solved
// on each rung's own grid.
carleman::CoeffProvider trajectory_coeffs(const ExperimentConfig& cfg) {
    return [cfg](const Grid1D& g, const TimeGrid& tg, SpaceTimeField& ell_p,
                 SpaceTimeField& A) {
        models::IonicModel m = model_from(cfg.model);
        pde::Conductivity sigma = pde::constant_conductivity(cfg.model.sigma);
        Level v0 =
            bump_level(g, cfg.model.v0_amp, cfg.model.v0_center, cfg.model.v0_width);
        Level w0 =
            bump_level(g, cfg.model.w0_amp, cfg.model.v0_center, cfg.model.v0_width);
        SpaceTimeField zero(g, tg);
        pde::TrajectoryReport tr = pde::solve_trajectory(m, sigma, v0, w0, zero);
        models::LinearizationCoeffs co = models::linearize(m, tr.v, tr.w);
        ell_p = co.ell_p;
        A = co.A;
    };
}

void append_ratio_block(std::ostringstream& r, const carleman::RatioReport& rep) {
    r << rep.name << ":\n";
    for (const carleman::GridRatios& gr : rep.grids)
        r << "  n=" << gr.n << ": max ratio " << fmt(gr.max_ratio) << " over "
          << gr.samples.size() << " samples\n";
    r << "  stability factor " << fmt(rep.stability_factor) << ", pass "
      << yesno(rep.pass) << "\n";
}

void write_ratio_csv(const fs::path& path, const carleman::RatioReport& rep) {
    std::vector<std::vector<double>> rows;
    for (const carleman::GridRatios& gr : rep.grids)
        for (size_t i = 0; i < gr.samples.size(); ++i)
            rows.push_back({(double)gr.n, (double)i, gr.samples[i].lhs_log,
                            gr.samples[i].rhs_log, gr.samples[i].ratio});
    write_table_csv(path.string(), {"n", "sample", "lhs_log", "rhs_log", "ratio"},
                    rows);
}

int cmd_carleman_check(const ExperimentConfig& cfg) {
    carleman::CarlemanCheckConfig cc;
    cc.which = parse_check_kind(cfg.carleman.which);
    cc.samples = cfg.carleman.samples;
    cc.seed = cfg.carleman.seed;
    cc.grids = cfg.carleman.ladder;
    cc.L = cfg.domain.L;
    cc.T = cfg.domain.T;
    cc.margin = cfg.domain.margin;
    cc.ell = cfg.domain.ell;
    cc.ell1 = cfg.domain.ell1;
    cc.ell_omega = cfg.domain.ell_omega;
    cc.t_cap_fraction = cfg.carleman.t_cap_fraction;
    cc.sigma_value = cfg.model.sigma;
    cc.modes = cfg.carleman.modes;

    weights::EtaFunction eta = weights::build_eta(geometry::make_moving_domain(
        cc.L, cc.T, cc.ell, cc.margin));
    TimeGrid coarse(cc.T, cc.grids.front());
    cc.params.s =
        resolve_s(cfg, eta, coarse, cc.which == carleman::CheckKind::conjugation);
    cc.params.lambda = cfg.carleman.lambda;
    cc.params.tau = cfg.carleman.tau;

    fs::path dir = ensure_outdir(cfg);
    std::ostringstream r;
    r << "weighted inequality check: " << cfg.carleman.which << "\n";
    r << "  s = " << fmt(cc.params.s) << ", lambda = " << fmt(cc.params.lambda)
      << ", tau = " << fmt(cc.params.tau) << "\n";
    r << "  samples " << cc.samples << ", seed " << cc.seed << ", modes " << cc.modes
      << "\n";

    bool pass = false;
    if (cc.which == carleman::CheckKind::conjugation) {
        carleman::ConjugationReport rep = carleman::check_conjugation_identity(cc);
        std::vector<std::vector<double>> rows;
        for (const carleman::ConjugationGrid& gr : rep.grids)
            rows.push_back({(double)gr.n, gr.max_rel_residual, gr.boundary_residual});
        write_table_csv((dir / "residuals.csv").string(),
                        {"n", "max_rel_residual", "boundary_residual"}, rows);
        for (const carleman::ConjugationGrid& gr : rep.grids)
            r << "  n=" << gr.n << ": interior residual " << fmt(gr.max_rel_residual)
              << ", boundary residual " << fmt(gr.boundary_residual) << "\n";
        r << "  observed order " << fmt(rep.observed_order) << ", pass "
          << yesno(rep.pass) << "\n";
        pass = rep.pass;
    } else if (cc.which == carleman::CheckKind::ode) {
        carleman::RatioReport rep = carleman::check_ode_carleman(cc);
        write_ratio_csv(dir / "ratios.csv", rep);
        append_ratio_block(r, rep);
        pass = rep.pass;
    } else if (cc.which == carleman::CheckKind::neumann) {
        carleman::RatioReport rep = carleman::check_neumann_carleman(cc);
        write_ratio_csv(dir / "ratios.csv", rep);
        append_ratio_block(r, rep);
        pass = rep.pass;
    } else {
        carleman::CoupledReports reps =
            carleman::check_coupled_carleman(cc, trajectory_coeffs(cfg));
        const carleman::RatioReport& primary =
            cc.which == carleman::CheckKind::coupled ? reps.theorem
                                                     : reps.nonvanishing;
        write_ratio_csv(dir / "ratios.csv", primary);
        append_ratio_block(r, reps.theorem);
        append_ratio_block(r, reps.nonvanishing);
        pass = primary.pass;
    }
    write_text(dir / "report.txt", r.str());
    write_text(dir / "summary.txt", r.str());
    write_meta(dir, cfg, "carleman-check");
    maybe_plots(cfg);
    return pass ? 0 : 3;
}

int cmd_weights_dump(const ExperimentConfig& cfg) {
    Grid1D g(cfg.domain.L, cfg.grid.n);
    TimeGrid tg(cfg.domain.T, cfg.grid.m);
    geometry::NestedSupports sup = supports_from(cfg);
    weights::WeightSet ws = build_weight_set(cfg, sup, tg);
    const weights::EtaFunction& eta = ws.eta();

    std::vector<std::vector<double>> rows;
    for (int k = 1; k <= tg.m; ++k)
        for (int j = 0; j <= g.n; ++j) {
            weights::WeightValues v = ws.eval(g.x(j), tg.t(k));
            rows.push_back({g.x(j), tg.t(k), v.alpha, v.xi, v.rho1, v.rho2, v.rho3,
                            v.rho4});
        }
    fs::path dir = ensure_outdir(cfg);
    write_table_csv((dir / "weights.csv").string(),
                    {"x", "t", "alpha", "xi", "rho1", "rho2", "rho3", "rho4"}, rows);

    double eta_min = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= tg.m; ++k)
        eta_min = std::min(eta_min, eta.eta_min(tg.t(k)));

    geometry::AssumptionReport ar = geometry::check_assumption(sup.omega0, tg.m);
    weights::EstimateReport er = weights::verify_pointwise_estimates(ws, g, tg);

    std::ostringstream r;
    r << "weight family diagnostics\n";
    r << "  s = " << fmt(ws.params().s) << ", lambda = " << fmt(ws.params().lambda)
      << ", tau = " << fmt(ws.params().tau) << ", t_cap = " << fmt(ws.t_cap()) << "\n";
    r << "  D = " << fmt(eta.D()) << ", M = " << fmt(eta.M()) << ", E = "
      << fmt(ws.E()) << "\n";
    r << "  min eta = " << fmt(eta_min) << " (3/4 of max " << fmt(eta.norm_inf())
      << ")\n";
    r << "  normalization shifts: " << fmt(ws.shift(1)) << " (rho1..rho3), "
      << fmt(ws.shift(4)) << " (rho4)\n";
    for (int i = 1; i <= 4; ++i)
        r << "  rho" << i << " nondecreasing from t = "
          << fmt(ws.rho_monotone_from(i, tg.m)) << "\n";
    r << "sweep geometry: t1 = " << fmt(ar.t1) << ", t2 = " << fmt(ar.t2) << ", pass "
      << yesno(ar.pass) << "\n";
    r << "  never covers (0,L) " << yesno(ar.clause_a) << ", sweeps all of (0,L) "
      << yesno(ar.clause_b) << ", complement connected outside (t1,t2) "
      << yesno(ar.clause_c) << ", two components inside " << yesno(ar.clause_d)
      << "\n";
    if (!ar.diagnostic.empty()) r << "  note: " << ar.diagnostic << "\n";
    r << "pointwise derivative bounds (fitted constants):\n";
    for (const weights::EstimateRow& row : er.rows)
        r << "  " << row.name << ": C = " << fmt(row.fitted_C) << "\n";
    r << "  all finite: " << yesno(er.all_finite) << "\n";
    write_text(dir / "report.txt", r.str());
    write_meta(dir, cfg, "weights-dump");
    maybe_plots(cfg);
    return 0;
}

int cmd_sweep(const ExperimentConfig& cfg) {
    LinearSetup s = build_linear_setup(cfg);
    SpaceTimeField zero(s.g, s.tg);
    control::ControlProblem prob = control::make_control_problem(
        s.coeffs, s.sigma, s.supports, s.ws, s.p0, s.q0, zero, cfg.control.eps_pen);
    prob.cg_max = cfg.control.cg_max;
    prob.cg_tol = cfg.control.cg_tol;

    geometry::Interval1D fixed;
    if (cfg.control.fixed_lo < cfg.control.fixed_hi)
        fixed = {cfg.control.fixed_lo, cfg.control.fixed_hi};
    else
        fixed = control::default_fixed_interval(s.supports.omega);

    control::ComparisonTable table =
        control::fixed_vs_moving_comparison(prob, fixed, cfg.control.ladder);

    pde::ThetaQResult free_run = pde::solve_theta_q(
        prob.ell_p, prob.A, prob.sigma, prob.theta0, prob.q0, prob.G, zero, zero);
    double q_free = norm_space(free_run.q, s.tg.m);

    std::vector<std::vector<double>> rows;
    for (const control::ComparisonRow& row : table.rows)
        rows.push_back({row.eps_pen, row.moving_terminal_theta, row.moving_terminal_q,
                        row.moving_J, (double)row.moving_iterations,
                        row.static_terminal_theta, row.static_terminal_q,
                        row.static_J, (double)row.static_iterations, q_free});
    fs::path dir = ensure_outdir(cfg);
    write_table_csv((dir / "sweep.csv").string(),
                    {"eps_pen", "moving_terminal_theta", "moving_terminal_q",
                     "moving_J", "moving_iterations", "static_terminal_theta",
                     "static_terminal_q", "static_J", "static_iterations",
                     "terminal_q_free"},
                    rows);

    std::ostringstream r;
    r << "moving vs static support comparison\n";
    r << "  static interval [" << fmt(table.fixed_interval.lo) << ", "
      << fmt(table.fixed_interval.hi) << "], measure "
      << fmt(table.fixed_interval.length()) << "\n";
    r << "  free run ||q(T)|| = " << fmt(q_free) << "\n";
    r << "  eps_pen  moving ||q(T)||  static ||q(T)||  moving reduction  static reduction\n";
    for (const control::ComparisonRow& row : table.rows) {
        double red_m = row.moving_terminal_q > 0.0
                           ? q_free / row.moving_terminal_q
                           : std::numeric_limits<double>::infinity();
        double red_s = row.static_terminal_q > 0.0
                           ? q_free / row.static_terminal_q
                           : std::numeric_limits<double>::infinity();
        r << "  " << fmt(row.eps_pen) << "  " << fmt(row.moving_terminal_q) << "  "
          << fmt(row.static_terminal_q) << "  " << fmt(red_m) << "  " << fmt(red_s)
          << "\n";
    }
    write_text(dir / "report.txt", r.str());
    write_meta(dir, cfg, "sweep");
    maybe_plots(cfg);
    return 0;
}

// ---- plots -----------------------------------------------------------------

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            cells.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    cells.push_back(cur);
    return cells;
}

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

bool read_table(const fs::path& p, Table& t) {
    std::ifstream in(p);
    if (!in.good()) return false;
    std::string line;
    if (!std::getline(in, line)) return false;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    t.header = split_csv(line);
    t.rows.clear();
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<double> row;
        for (const std::string& c : split_csv(line)) {
            try {
                row.push_back(std::stod(c));
            } catch (...) {
                row.push_back(std::numeric_limits<double>::quiet_NaN());
            }
        }
        t.rows.push_back(row);
    }
    return true;
}

int column(const Table& t, const std::string& name) {
    for (size_t i = 0; i < t.header.size(); ++i)
        if (t.header[i] == name) return (int)i;
    return -1;
}

int plot_snapshots(const fs::path& dir, const char* csv, const char* svg_name,
                   const char* title, std::ostream& log) {
    fs::path p = dir / csv;
    if (!fs::exists(p)) return 0;
    SpaceTimeField f;
    try {
        f = read_field_csv(p.string());
    } catch (const std::exception& e) {
        log << "plots: skipped " << csv << " (" << e.what() << ")\n";
        return 0;
    }
    const Grid1D& g = f.grid();
    const TimeGrid& tg = f.time();
    svg::PlotSpec spec;
    spec.title = title;
    spec.xlabel = "x";
    spec.ylabel = "value";
    int m = tg.m;
    int ks[5] = {0, m / 4, m / 2, (3 * m) / 4, m};
    for (int i = 0; i < 5; ++i) {
        if (i > 0 && ks[i] == ks[i - 1]) continue;
        svg::Series se;
        se.label = "t=" + fmt(tg.t(ks[i]));
        for (int j = 0; j <= g.n; ++j) {
            se.x.push_back(g.x(j));
            se.y.push_back(f.at(ks[i], j));
        }
        spec.series.push_back(se);
    }
    svg::write_plot((dir / svg_name).string(), spec);
    log << "plots: wrote " << svg_name << "\n";
    return 1;
}

int plot_ladder(const fs::path& dir, std::ostream& log) {
    Table t;
    if (!read_table(dir / "ladder.csv", t)) return 0;
    int ce = column(t, "eps_pen"), cp = column(t, "terminal_p"),
        cq = column(t, "terminal_q");
    if (ce < 0 || cp < 0 || cq < 0) return 0;
    svg::PlotSpec spec;
    spec.title = "terminal norms vs penalty";
    spec.xlabel = "eps_pen";
    spec.ylabel = "terminal norm";
    spec.logx = true;
    spec.logy = true;
    svg::Series sp, sq;
    sp.label = "||p(T)||";
    sq.label = "||q(T)||";
    for (const std::vector<double>& row : t.rows) {
        sp.x.push_back(row[ce]);
        sp.y.push_back(row[cp]);
        sq.x.push_back(row[ce]);
        sq.y.push_back(row[cq]);
    }
    spec.series = {sp, sq};
    svg::write_plot((dir / "ladder.svg").string(), spec);
    log << "plots: wrote ladder.svg\n";
    return 1;
}

int plot_ratios(const fs::path& dir, std::ostream& log) {
    Table t;
    if (!read_table(dir / "ratios.csv", t)) return 0;
    int cn = column(t, "n"), cr = column(t, "ratio");
    if (cn < 0 || cr < 0) return 0;
    std::vector<double> ns;
    std::vector<double> maxr;
    for (const std::vector<double>& row : t.rows) {
        size_t i = 0;
        while (i < ns.size() && ns[i] != row[cn]) ++i;
        if (i == ns.size()) {
            ns.push_back(row[cn]);
            maxr.push_back(row[cr]);
        } else {
            maxr[i] = std::max(maxr[i], row[cr]);
        }
    }
    svg::PlotSpec spec;
    spec.title = "max sample ratio per grid";
    spec.xlabel = "n";
    spec.ylabel = "max LHS/RHS";
    svg::Series se;
    se.label = "max ratio";
    se.x = ns;
    se.y = maxr;
    spec.series = {se};
    svg::write_plot((dir / "ratios.svg").string(), spec);
    log << "plots: wrote ratios.svg\n";
    return 1;
}

int plot_residuals(const fs::path& dir, std::ostream& log) {
    Table t;
    if (!read_table(dir / "residuals.csv", t)) return 0;
    int cn = column(t, "n"), cr = column(t, "max_rel_residual");
    if (cn < 0 || cr < 0) return 0;
    svg::PlotSpec spec;
    spec.title = "conjugation residual vs grid";
    spec.xlabel = "n";
    spec.ylabel = "max relative residual";
    spec.logx = true;
    spec.logy = true;
    svg::Series se;
    se.label = "residual";
    for (const std::vector<double>& row : t.rows) {
        se.x.push_back(row[cn]);
        se.y.push_back(row[cr]);
    }
    spec.series = {se};
    svg::write_plot((dir / "conjugation.svg").string(), spec);
    log << "plots: wrote conjugation.svg\n";
    return 1;
}

int plot_sweep(const fs::path& dir, std::ostream& log) {
    Table t;
    if (!read_table(dir / "sweep.csv", t)) return 0;
    int ce = column(t, "eps_pen"), cm = column(t, "moving_terminal_q"),
        cs = column(t, "static_terminal_q");
    if (ce < 0 || cm < 0 || cs < 0) return 0;
    svg::PlotSpec spec;
    spec.title = "moving vs static support";
    spec.xlabel = "eps_pen";
    spec.ylabel = "terminal ||q(T)||";
    spec.logx = true;
    spec.logy = true;
    svg::Series mo, st;
    mo.label = "moving";
    st.label = "static";
    for (const std::vector<double>& row : t.rows) {
        mo.x.push_back(row[ce]);
        mo.y.push_back(row[cm]);
        st.x.push_back(row[ce]);
        st.y.push_back(row[cs]);
    }
    spec.series = {mo, st};
    svg::write_plot((dir / "sweep.svg").string(), spec);
    log << "plots: wrote sweep.svg\n";
    return 1;
}

int plot_basin(const fs::path& dir, std::ostream& log) {
    Table t;
    if (!read_table(dir / "basin.csv", t)) return 0;
    int cd = column(t, "delta"), ce = column(t, "terminal_error");
    if (cd < 0 || ce < 0) return 0;
    svg::PlotSpec spec;
    spec.title = "steering error vs perturbation size";
    spec.xlabel = "delta";
    spec.ylabel = "terminal error";
    spec.logx = true;
    spec.logy = true;
    svg::Series se;
    se.label = "terminal error";
    for (const std::vector<double>& row : t.rows) {
        se.x.push_back(row[cd]);
        se.y.push_back(row[ce]);
    }
    spec.series = {se};
    svg::write_plot((dir / "basin.svg").string(), spec);
    log << "plots: wrote basin.svg\n";
    return 1;
}

int plot_weights(const fs::path& dir, std::ostream& log) {
    Table t;
    if (!read_table(dir / "weights.csv", t)) return 0;
    int cx = column(t, "x"), ct = column(t, "t");
    if (cx < 0 || ct < 0 || t.rows.empty()) return 0;
    double x0 = t.rows.front()[cx];
    svg::PlotSpec spec;
    spec.title = "normalized weights at x = " + fmt(x0);
    spec.xlabel = "t";
    spec.ylabel = "rho";
    spec.logy = true;
    for (int i = 1; i <= 4; ++i) {
        int c = column(t, "rho" + std::to_string(i));
        if (c < 0) continue;
        svg::Series se;
        se.label = "rho" + std::to_string(i);
        for (const std::vector<double>& row : t.rows) {
            if (row[cx] != x0) continue;
            se.x.push_back(row[ct]);
            se.y.push_back(row[c]);
        }
        spec.series.push_back(se);
    }
    svg::write_plot((dir / "weights.svg").string(), spec);
    log << "plots: wrote weights.svg\n";
    return 1;
}

} // namespace

void emit_plots(const std::string& dir_s, std::ostream& log) {
    fs::path dir(dir_s);
    int made = 0;
    made += plot_snapshots(dir, "v.csv", "v_snapshots.svg", "membrane potential", log);
    made += plot_snapshots(dir, "w.csv", "w_snapshots.svg", "recovery variable", log);
    made += plot_snapshots(dir, "v_bar.csv", "trajectory_v_snapshots.svg",
                           "reference potential", log);
    made += plot_snapshots(dir, "control.csv", "control_snapshots.svg",
                           "control h", log);
    made += plot_snapshots(dir, "stimulation.csv", "stimulation_snapshots.svg",
                           "applied stimulation", log);
    made += plot_ladder(dir, log);
    made += plot_ratios(dir, log);
    made += plot_residuals(dir, log);
    made += plot_sweep(dir, log);
    made += plot_basin(dir, log);
    made += plot_weights(dir, log);
    if (made == 0)
        log << "plots: no known CSV artifacts in '" << dir_s << "'\n";
}

int run(const std::vector<std::string>& args) {
    CLI::App app{"numerical laboratory for steering monodomain dynamics with a "
                 "moving support"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path, out_dir;
    uint64_t seed = 0;
    int threads = 0;
    CLI::Option* o_config =
        app.add_option("--config", config_path, "configuration file")
            ->check(CLI::ExistingFile);
    CLI::Option* o_seed = app.add_option("--seed", seed, "sampling seed override");
    CLI::Option* o_out =
        app.add_option("--out", out_dir, "artifact directory override");
    CLI::Option* o_threads =
        app.add_option("--threads", threads, "worker cap for concurrent runs")
            ->check(CLI::PositiveNumber);

    CLI::App* c_sim = app.add_subcommand(
        "simulate", "run the nonlinear monodomain solver and store v, w");
    CLI::App* c_traj = app.add_subcommand(
        "trajectory", "solve the reference trajectory (zero applied stimulation)");

    CLI::App* c_lin = app.add_subcommand(
        "control-linear", "synthesize the weighted null control for the linearized system");
    double eps_pen = 0.0;
    std::vector<double> dladder;
    std::vector<double> fixed_lin;
    CLI::Option* o_eps =
        c_lin->add_option("--eps-pen", eps_pen, "terminal penalty strength");
    CLI::Option* o_dladder =
        c_lin->add_option("--ladder", dladder, "penalty ladder values")
            ->delimiter(',');
    CLI::Option* o_fixed_lin =
        c_lin->add_option("--fixed-omega", fixed_lin,
                          "synthesize on a static interval lo,hi instead")
            ->delimiter(',')
            ->expected(2);

    CLI::App* c_nl = app.add_subcommand(
        "control-nonlinear", "steer the nonlinear system back to the reference trajectory");
    double delta = 0.0;
    std::vector<double> sweep_deltas;
    std::string model_kind;
    CLI::Option* o_delta =
        c_nl->add_option("--delta", delta, "perturbation amplitude");
    CLI::Option* o_sweep =
        c_nl->add_option("--sweep", sweep_deltas,
                         "perturbation sizes for a basin sweep (comma separated)")
            ->delimiter(',');
    CLI::Option* o_model =
        c_nl->add_option("--model", model_kind, "ionic model (rm or fhn)");

    CLI::App* c_check = app.add_subcommand(
        "carleman-check", "sample-based check of one weighted inequality");
    std::string which;
    int samples = 0;
    std::vector<int> iladder;
    double s_opt = 0.0, lambda_opt = 0.0;
    CLI::Option* o_which = c_check->add_option(
        "--which", which, "ode, neumann, coupled, nonvanishing, or conjugation");
    CLI::Option* o_samples =
        c_check->add_option("--samples", samples, "random fields per grid");
    CLI::Option* o_iladder =
        c_check->add_option("--ladder", iladder, "grid sizes (n = m per rung)")
            ->delimiter(',');
    CLI::Option* o_s = c_check->add_option("--s", s_opt, "weight exponent scale");
    CLI::Option* o_lambda =
        c_check->add_option("--lambda", lambda_opt, "weight sharpness");

    CLI::App* c_wd = app.add_subcommand(
        "weights-dump", "tabulate the weight family and its pointwise bounds");

    CLI::App* c_sweepcmd = app.add_subcommand(
        "sweep", "moving vs static support comparison across the penalty ladder");
    std::vector<double> fixed_omega;
    CLI::Option* o_fixed =
        c_sweepcmd->add_option("--fixed-omega", fixed_omega, "static interval lo hi")
            ->expected(2);

    CLI::App* c_plots = app.add_subcommand(
        "plots", "render plots from the CSV artifacts in the output directory");

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        ExperimentConfig cfg;
        if (o_config->count()) cfg = load_config(config_path);
        if (o_seed->count()) cfg.carleman.seed = seed;
        if (o_out->count()) cfg.output.dir = out_dir;
        if (o_threads->count()) parallel::set_max_workers(threads);
        if (o_eps->count()) cfg.control.eps_pen = eps_pen;
        if (o_dladder->count()) cfg.control.ladder = dladder;
        if (o_fixed_lin->count()) {
            cfg.control.fixed_lo = fixed_lin[0];
            cfg.control.fixed_hi = fixed_lin[1];
        }
        if (o_delta->count()) cfg.nonlinear.delta = delta;
        if (o_sweep->count()) cfg.nonlinear.deltas = sweep_deltas;
        if (o_model->count()) cfg.model.kind = model_kind;
        if (o_which->count()) cfg.carleman.which = which;
        if (o_samples->count()) cfg.carleman.samples = samples;
        if (o_iladder->count()) cfg.carleman.ladder = iladder;
        if (o_s->count()) cfg.carleman.s = s_opt;
        if (o_lambda->count()) cfg.carleman.lambda = lambda_opt;
        if (o_fixed->count()) {
            cfg.control.fixed_lo = fixed_omega[0];
            cfg.control.fixed_hi = fixed_omega[1];
        }
        validate_config(cfg);

        if (c_sim->parsed()) return cmd_simulate(cfg);
        if (c_traj->parsed()) return cmd_trajectory(cfg);
        if (c_lin->parsed()) return cmd_control_linear(cfg);
        if (c_nl->parsed()) return cmd_control_nonlinear(cfg, o_sweep->count() > 0);
        if (c_check->parsed()) return cmd_carleman_check(cfg);
        if (c_wd->parsed()) return cmd_weights_dump(cfg);
        if (c_sweepcmd->parsed()) return cmd_sweep(cfg);
        if (c_plots->parsed()) {
            emit_plots(cfg.output.dir, std::cout);
            return 0;
        }
        return 2;
    } catch (const precondition_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const convergence_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

int run(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args);
}

} // namespace cli
} // namespace mdlab
