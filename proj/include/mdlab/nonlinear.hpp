#pragma once

// Steering the nonlinear monodomain system to a reference trajectory
// with a support-constrained stimulation.
//
// The perturbation (y, z) = (v - v_bar, w - w_bar) is moved to the
// (p, q) variables, where the dynamics are the linearized p-q system
// plus a cubic remainder N(p, q). The steering loop is the fixed-point
// scheme
//     G_k = -N(p_k, q_k),  h_k = null control for source G_k,
//     (p_{k+1}, q_{k+1})  = linearized solve with (G_k, h_k 1_omega),
// starting from G_0 = 0, stopped on relative iterate change, with a
// divergence abort when the iterate norm grows past a fixed multiple
// of its first value. The final control is mapped back to a
// stimulation I_se = gamma^{-1} e^{-gamma beta t} h and verified by
// re-running the nonlinear solver in the original variables; the
// report's terminal error always comes from that verification run.

#include <string>
#include <vector>

#include "mdlab/control.hpp"
#include "mdlab/geometry.hpp"
#include "mdlab/models.hpp"
#include "mdlab/pde.hpp"
#include "mdlab/weights.hpp"

namespace mdlab {
namespace nonlinear {

struct SteeringProblem {
    models::IonicModel model;
    pde::Conductivity sigma;
    SpaceTimeField v_bar, w_bar; // reference trajectory (zero I_se)
    SpaceTimeField I_si;         // its intrinsic stimulation
    Level v0, w0;                // perturbed initial data
    geometry::NestedSupports supports;
    weights::WeightSet ws;
    // <= 0 selects 1e-3 times the initial perturbation norm.
    double tol_terminal = -1.0;
    int max_outer = 25;
    double eps_pen = 1e-8;
    int cg_max = 500;
    double cg_tol = 1e-8;
    double divergence_factor = 10.0;
};

struct IterationTrace {
    int iteration = 0;
    double g_norm = 0.0;         // space-time L2 of the frozen source G_k
    double g_weighted_log = 0.0; // log of its exact rho4-weighted norm
    double iterate_norm = 0.0;   // ||(p, q)|| after the linear solve
    double rel_change = 0.0;
    int cg_iterations = 0;
    double cg_residual = 0.0;
    // E-space diagnostics of q (normalized rho4 scale)
    double q_rho4_l2 = 0.0;
    double q_rho4_l4 = 0.0;
};

struct SteeringReport {
    SpaceTimeField I_se; // supported exactly inside omega(t)
    SpaceTimeField h;
    SpaceTimeField v, w; // verification run, original variables
    int outer_iterations = 0;
    double terminal_error = 0.0; // ||(v,w)(T) - (v_bar,w_bar)(T)||
    double tol_terminal = 0.0;   // resolved tolerance
    bool converged = false;
    bool diverged = false;
    std::vector<IterationTrace> trace;
    std::string diagnostic;
};

SteeringReport steer_to_trajectory(const SteeringProblem& sp);

struct BasinRow {
    double delta = 0.0;
    bool converged = false;
    double terminal_error = 0.0;
    int outer_iterations = 0;
};

// Scales the problem's initial perturbation by each delta (the stored
// (v0, w0) acts as the delta = 1 shape) and steers; rows keep the
// input order, runs execute concurrently. Divergent entries report
// instead of throwing.
std::vector<BasinRow> basin_sweep(const SteeringProblem& sp,
                                  const std::vector<double>& deltas);

} // namespace nonlinear
} // namespace mdlab
