#pragma once

// Numerical verification harness for the four weighted inequalities the
// control synthesis rests on, plus the conjugation identity behind
// their proofs.
//
// Each check samples random smooth fields (truncated cosine series,
// Neumann-compatible, coefficient decay (1+j)^-2 (1+k)^-2, seeded),
// evaluates both sides of one inequality with trapezoid quadrature,
// and reports the per-sample ratio LHS/RHS. The analytic statements
// hold for s, lambda above unknown thresholds with unknown constants,
// so the harness does not grade against a constant: the pass criterion
// is empirical boundedness, i.e. the max ratio moves by less than a
// factor 2 across the grid ladder (and across seeds, which the caller
// varies).
//
// The four checks:
//   ode:     s l^2 II xi |phi|^2 e^{-2sa}
//              <= C [ II |phi_t|^2 e^{-2sa}
//                     + s^2 l^2 II_{omega1} xi^2 |phi|^2 e^{-2sa} ]
//   neumann: backward Neumann heat -psi_t - (sigma psi_x)_x = f; five
//            left blocks (interior psi_xx/psi_t, psi_x, psi, and the
//            two boundary psi^2 terms) against f and the omega1
//            observation of psi
//   coupled: the adjoint pair (-phi_t = psi + R,
//            -psi_t + K psi + A phi = S) with the s^7 l^6 xi^7
//            observation of phi alone on the sweeping omega
//   nonvanishing: same solve, weights built from the l profile (finite
//            at t = 0), LHS augmented by ||phi(0)||^2 + ||psi(0)||^2,
//            RHS weighted by rho1^-2, rho2^-2, rho3^-2
//
// Every weighted integral is accumulated in log space, so huge s or
// lambda only shift exponents instead of underflowing; time quadrature
// runs on the clamped interval (the weight module's t_cap), and the
// t = 0 level is skipped exactly in the r-weighted integrals, where
// the weight vanishes in the limit.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mdlab/geometry.hpp"
#include "mdlab/grid.hpp"
#include "mdlab/weights.hpp"

namespace mdlab {
namespace carleman {

enum class CheckKind { ode, neumann, coupled, nonvanishing, conjugation };

struct CarlemanCheckConfig {
    CheckKind which = CheckKind::ode;
    int samples = 100;
    uint64_t seed = 1;
    weights::CarlemanParams params;
    std::vector<int> grids = {64, 128, 256}; // n = m per rung, increasing
    // sweep geometry (canonical desk-scale defaults)
    double L = 1.0, T = 1.0;
    double margin = 0.05;
    double ell = 0.2, ell1 = 0.25, ell_omega = 0.3;
    double t_cap_fraction = 0.0;
    double sigma_value = 1.0;
    int modes = 8; // series truncation per direction
};

void validate(const CarlemanCheckConfig& cfg);

struct SampleRatio {
    double lhs_log = 0.0;
    double rhs_log = 0.0;
    double ratio = 0.0; // exp(lhs_log - rhs_log); 0 when both sides vanish
};

struct GridRatios {
    int n = 0;
    std::vector<SampleRatio> samples;
    double max_ratio = 0.0;
};

struct RatioReport {
    std::string name;
    std::vector<GridRatios> grids;
    double stability_factor = 0.0; // max over rungs / min over rungs
    bool pass = false;             // finite everywhere and factor < 2
};

RatioReport check_ode_carleman(const CarlemanCheckConfig& cfg);
RatioReport check_neumann_carleman(const CarlemanCheckConfig& cfg);

// Natural logarithms of the seven weighted integrals of the backward
// Neumann heat inequality for a supplied (psi, source) pair on the
// n-point rung, prefactors in s and lambda folded in, -inf when an
// integral vanishes. psi derivatives are taken by the same second
// order differences the sampling loop uses. Exposed so the tests can
// pin the quadrature against an independently assembled evaluation.
struct NeumannIntegralLogs {
    double curvature_time = 0.0; // s^-1 II xi^-1 (psi_xx^2 + psi_t^2)
    double gradient = 0.0;       // s lam^2 II xi psi_x^2
    double state = 0.0;          // s^3 lam^4 II xi^3 psi^2
    double boundary_left = 0.0;  // s^3 lam^3 int_t xi^3 psi^2 at x = 0
    double boundary_right = 0.0; // same at x = L
    double source = 0.0;         // II f^2
    double observation = 0.0;    // s^3 lam^4 II_{omega1} xi^3 psi^2
};

NeumannIntegralLogs neumann_integral_logs(const CarlemanCheckConfig& cfg, int n,
                                          const SpaceTimeField& psi,
                                          const SpaceTimeField& f);

// Produces the zero-order coefficients of the adjoint pair on a rung's
// grid (the coupled checks run the ladder, so coefficients are built
// per grid rather than passed as fixed fields).
using CoeffProvider =
    std::function<void(const Grid1D&, const TimeGrid&, SpaceTimeField& ell_p,
                       SpaceTimeField& A)>;

CoeffProvider constant_coeffs(double ell_p_value, double A_value);

struct CoupledReports {
    RatioReport theorem;      // r-weighted form, phi observed on omega
    RatioReport nonvanishing; // l/rho-weighted form with the t = 0 norms
};

CoupledReports check_coupled_carleman(const CarlemanCheckConfig& cfg,
                                      const CoeffProvider& coeffs);

struct ConjugationGrid {
    int n = 0;
    double max_rel_residual = 0.0; // interior nodes, relative to op scale
    double boundary_residual = 0.0; // w_x + s alpha_x w at x in {0, L}
};

struct ConjugationReport {
    std::vector<ConjugationGrid> grids;
    double observed_order = 0.0; // rate between the last two rungs
    bool pass = false;
};

// Checks e^{-s alpha} P(e^{s alpha} w) = P_e w + P_k w for
// w = e^{-s alpha} cos(pi x / L) sin(pi t / T)^2 with P = d_t + d_xx
// (unit conductivity). The left side is closed-form; the right side
// expands the derivatives of w by the product rule with closed-form
// alpha derivatives and central differences on the smooth factor, so
// all s-dependent terms must cancel exactly and the residual is the
// difference-quotient truncation error (second order in the mesh).
// Also verifies the boundary relation w_x = -s alpha_x w at x in
// {0, L}, with w_x a one-sided difference of the stored w grid.
// Requires s (E - e^{lambda M}) <= 690 so that e^{-s alpha} stays
// representable on the plateau of the time profile.
ConjugationReport check_conjugation_identity(const CarlemanCheckConfig& cfg);

} // namespace carleman
} // namespace mdlab
