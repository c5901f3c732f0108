#pragma once

// Discretizations and solvers for the six systems in play:
//
//   monodomain      v_t + I_ion(v,w) - (sigma v_x)_x = I_si + I_se,
//                   w_t = gamma (v - beta w), Neumann flux zero
//   trajectory      same with I_se = 0 (plus smoothness diagnostics)
//   linearized p-q  p_t - (sigma p_x)_x + ell_p p + ell_q q = G + h 1_omega,
//                   q_t = p
//   theta-q         theta_t + A q = G + h 1_omega,
//                   q_t + K q = theta,  K q = -(sigma q_x)_x + ell_p q
//   adjoint         -phi_t = psi + R,
//                   -psi_t + K psi + A phi = S (backward, Neumann on psi)
//   heat w/ memory  p_t - (sigma p_x)_x + d p + int_0^t p = h 1_omega
//
// Space: flux-form second-order finite volumes on uniform nodes with
// ghost-flux-zero Neumann rows (half-cell scaling at the boundary, so K
// is self-adjoint in the control-volume inner product and constants are
// exact equilibria of the diffusion part).
//
// Time: one-leg implicit midpoint for every linear system, with
// coefficient fields evaluated as midpoint averages of their two
// levels. The scheme is its own transpose run backward (both step
// factors are polynomials in the same matrix), which makes the adjoint
// solver simultaneously the exact discrete transpose of the forward
// theta-q map and a second-order discretization of the adjoint system.
// The discrete duality identity, exact up to roundoff, is
//
//   <U^m, L^m> - <U^0, L^0> =
//       sum_k dt [ <F^{k+1/2}, (L^k + L^{k+1})/2> -
//                  <(U^k + U^{k+1})/2, c^{k+1/2}> ]
//
// with U = (theta, q), L = (phi, psi), F = (G + h 1_omega, 0),
// c = (R, S), and midpoint sources F^{k+1/2} = (F^k + F^{k+1})/2.
//
// The nonlinear monodomain steps use the same midpoint form with a
// Newton iteration in v per step (w is eliminated exactly, being linear
// in the step unknowns).
//
// Per-step cost is one tridiagonal solve for every system; the 2x2
// reaction blocks are eliminated exactly rather than iterated, so all
// linear solution maps are exactly linear in their data.

#include <functional>

#include "mdlab/grid.hpp"
#include "mdlab/models.hpp"
#include "mdlab/tridiag.hpp"

namespace mdlab {
namespace pde {

struct Conductivity {
    std::function<double(double)> sigma = [](double) { return 1.0; };
    double sigma_min = 1.0;
};

Conductivity constant_conductivity(double value);

// Discrete K = -(sigma q_x)_x + ell_p on the nodes; sigma sampled at
// cell faces once at construction.
class EllipticK {
public:
    EllipticK(const Grid1D& g, const Conductivity& sigma);

    // K q with the given zero-order coefficient level.
    Level apply(const Level& q, const Level& ell_p) const;

    // id_coef * I + k_coef * K(ell_p) + extra_coef * diag(extra)
    Tridiag build_matrix(double id_coef, double k_coef, const Level& ell_p,
                         double extra_coef, const Level* extra) const;

    const Grid1D& grid() const { return g_; }

private:
    Grid1D g_;
    std::vector<double> face_; // sigma at x_{j+1/2}, j = 0..n-1
};

// ---- nonlinear systems ----------------------------------------------------

struct MonodomainResult {
    SpaceTimeField v, w;
    int max_newton_iters = 0;  // worst step
    long total_newton_iters = 0;
    int substep_halvings = 0; // emergency halvings that were needed
};

MonodomainResult solve_monodomain(const models::IonicModel& m, const Conductivity& sigma,
                                  const Level& v0, const Level& w0,
                                  const SpaceTimeField& I_si, const SpaceTimeField& I_se);

struct TrajectoryReport {
    SpaceTimeField v, w;
    double linf_h1_v = 0.0; // max_k sqrt(||v||^2 + ||v_x||^2)
    double linf_h1_w = 0.0;
    long total_newton_iters = 0;
};

TrajectoryReport solve_trajectory(const models::IonicModel& m, const Conductivity& sigma,
                                  const Level& v0, const Level& w0,
                                  const SpaceTimeField& I_si);

// ---- linear systems -------------------------------------------------------

struct PQResult {
    SpaceTimeField p, q;
};

// h is masked level-by-level with mask before entering the equation.
PQResult solve_linearized_pq(const SpaceTimeField& ell_p, const SpaceTimeField& ell_q,
                             const Conductivity& sigma, const Level& p0, const Level& q0,
                             const SpaceTimeField& G, const SpaceTimeField& h,
                             const SpaceTimeField& mask);

PQResult solve_linearized_pq(const models::LinearizationCoeffs& coeffs,
                             const Conductivity& sigma, const Level& p0, const Level& q0,
                             const SpaceTimeField& G, const SpaceTimeField& h,
                             const SpaceTimeField& mask);

struct ThetaQResult {
    SpaceTimeField theta, q;
};

ThetaQResult solve_theta_q(const SpaceTimeField& ell_p, const SpaceTimeField& A,
                           const Conductivity& sigma, const Level& theta0,
                           const Level& q0, const SpaceTimeField& G,
                           const SpaceTimeField& h, const SpaceTimeField& mask);

struct AdjointResult {
    SpaceTimeField phi, psi;
};

AdjointResult solve_adjoint(const SpaceTimeField& ell_p, const SpaceTimeField& A,
                            const Conductivity& sigma, const Level& phiT,
                            const Level& psiT, const SpaceTimeField& R,
                            const SpaceTimeField& S);

SpaceTimeField solve_heat_memory(const Conductivity& sigma, double d, const Level& p0,
                                 const SpaceTimeField& h, const SpaceTimeField& mask);

// ---- theta-q <-> p-q glue -------------------------------------------------

// theta_0 = p_0 + K q_0 with ell_p taken at the first level.
Level theta0_from_pq(const Level& p0, const Level& q0, const Conductivity& sigma,
                     const SpaceTimeField& ell_p);

// p = q_t recovered through the discrete identity p = theta - K q.
SpaceTimeField reconstruct_p(const ThetaQResult& tq, const SpaceTimeField& ell_p,
                             const Conductivity& sigma);

} // namespace pde
} // namespace mdlab
