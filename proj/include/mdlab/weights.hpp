#pragma once

// Carleman weight machinery for sweeping supports.
//
// The spatial shape is the closed-form parabola
//     eta(x,t) = M - (x - c(t))^2,   M = 4D,  D = sup_{x,t} (x - c(t))^2,
// which satisfies all the structural properties the estimates need:
// nonzero slope off the support, sign-definite eta_t near t = 0 and
// t = T, min eta = (3/4) max eta exactly, and boundary slopes bounded
// away from zero by the sweep margin.
//
// The time profiles are
//     r(t) = 1/t on (0, tau/2], a strictly decreasing C^3-matched
//            bridge on (tau/2, tau), 1 on [tau, T/2], and r(T - t)
//            mirrored on [T/2, T);
//     l(t) = 1 on [0, T/2], r(t) on [T/2, T).
//
// Weights (E := e^{2 lambda ||eta||_inf}):
//     alpha = r (E - e^{lambda eta}),   xi = r e^{lambda eta},
// barred variants use l instead of r, starred/hatted variants are the
// spatial extrema of the barred ones, and
//     rho1 = (xi_bar_star)^{-3/2} e^{s alpha_bar_star}
//     rho2 =                      e^{s alpha_bar_star}
//     rho3 = (xi_bar_star)^{-7/2} e^{s alpha_bar_star}
//     rho4 = (xi_bar_hat)^{-1/2}  e^{s alpha_bar_hat}.
//
// e^{s alpha_bar_star} overflows double for interesting s, so the rho
// evaluators come in two forms: exact logarithms (used by the Carleman
// ratio checks, which accumulate integrals in log space) and values
// normalized by a fixed constant e^{shift} (used inside the penalized
// control functional, where a common rescaling of rho1..rho3 is just a
// reparameterization of the terminal penalty).
//
// All derivatives of alpha are closed-form; a chained finite-difference
// oracle in the tests pins them to <= 1e-6 relative error.

#include <string>
#include <vector>

#include "mdlab/geometry.hpp"
#include "mdlab/grid.hpp"

namespace mdlab {
namespace weights {

struct CarlemanParams {
    double s = 1.0;      // Carleman exponent scale, > 0
    double lambda = 1.5; // shape sharpness, >= 1
    double tau = 0.15;   // profile ramp length, in (0, min{1, T/2}]
};

class EtaFunction {
public:
    EtaFunction() = default;

    double eta(double x, double t) const {
        double d = x - dom_.c(t);
        return M_ - d * d;
    }
    double eta_x(double x, double t) const { return -2.0 * (x - dom_.c(t)); }
    double eta_xx() const { return -2.0; }
    double eta_xxx() const { return 0.0; }
    double eta_xxxx() const { return 0.0; }
    double eta_t(double x, double t) const { return 2.0 * dom_.dc(t) * (x - dom_.c(t)); }
    double eta_tt(double x, double t) const {
        double cp = dom_.dc(t);
        return 2.0 * dom_.ddc(t) * (x - dom_.c(t)) - 2.0 * cp * cp;
    }
    double eta_xt(double /*x*/, double t) const { return 2.0 * dom_.dc(t); }

    // min over x in [0, L] at fixed t (attained at the farther endpoint).
    double eta_min(double t) const {
        double c = dom_.c(t);
        double far = std::max(c * c, (dom_.L - c) * (dom_.L - c));
        return M_ - far;
    }

    double D() const { return D_; }
    double M() const { return M_; }
    double norm_inf() const { return M_; } // eta > 0, max attained at x = c(t)

    const geometry::MovingDomain& domain() const { return dom_; }

private:
    friend EtaFunction build_eta(const geometry::MovingDomain& dom);

    geometry::MovingDomain dom_;
    double D_ = 0.0, M_ = 0.0;
};

// Builds eta and verifies its structural properties numerically on a
// sample grid before returning.
EtaFunction build_eta(const geometry::MovingDomain& dom);

// Standalone profile evaluations (also exposed through WeightSet).
double r_profile(double t, double T, double tau);
double l_profile(double t, double T, double tau);

// Record produced by WeightSet::eval. rho1..rho4 are the normalized
// values (exact value times e^{-shift} with the set's fixed shifts).
struct WeightValues {
    double alpha = 0.0, xi = 0.0;
    double alpha_x = 0.0, alpha_xx = 0.0, alpha_xxx = 0.0, alpha_xxxx = 0.0;
    double alpha_t = 0.0, alpha_tt = 0.0, alpha_xt = 0.0;
    double alpha_bar = 0.0, xi_bar = 0.0;
    double rho1 = 0.0, rho2 = 0.0, rho3 = 0.0, rho4 = 0.0;
};

class WeightSet {
public:
    WeightSet() = default;

    const EtaFunction& eta() const { return eta_; }
    const CarlemanParams& params() const { return prm_; }
    double t_cap() const { return t_cap_; }
    double E() const { return E_; } // e^{2 lambda M}

    // Full record at (x, t); t > t_cap clamps to t_cap, t <= 0 errors.
    WeightValues eval(double x, double t) const;

    // Profiles with derivatives (t in (0, T) for r, [0, T) for l).
    double r(double t) const;
    double r_t(double t) const;
    double r_tt(double t) const;
    double l(double t) const;
    double l_t(double t) const;

    // Unclamped evaluators used by the eval record and the lab.
    double alpha(double x, double t) const;
    double xi(double x, double t) const;
    double log_xi(double x, double t) const;
    double alpha_bar(double x, double t) const;
    double xi_bar(double x, double t) const;
    double log_xi_bar(double x, double t) const;
    double alpha_bar_star(double t) const; // min_x alpha_bar
    double xi_bar_star(double t) const;    // max_x xi_bar
    double alpha_bar_hat(double t) const;  // max_x alpha_bar
    double xi_bar_hat(double t) const;     // min_x xi_bar

    // Exact logarithms of rho_i (i in 1..4); defined for t >= 0 (only
    // the l profile enters), clamps t to t_cap.
    double log_rho(int i, double t) const;
    // exp(log_rho(i, t) - shift(i)); finite on [0, t_cap] by the choice
    // of shifts.
    double rho(int i, double t) const;
    // shift(1) = shift(2) = shift(3) = s * min_t alpha_bar_star,
    // shift(4) = s * min_t alpha_bar_hat.
    double shift(int i) const;

    // First time level (on nt samples) from which rho_i is
    // nondecreasing through T^-; reported, not asserted.
    double rho_monotone_from(int i, int nt) const;

private:
    friend WeightSet build_weights(const EtaFunction& eta, const CarlemanParams& prm,
                                   const TimeGrid& tg, double t_cap_fraction);

    EtaFunction eta_;
    CarlemanParams prm_;
    double T_ = 1.0;
    double t_cap_ = 1.0;
    double E_ = 1.0;
    double shift123_ = 0.0, shift4_ = 0.0;
};

// Validates params against the domain (tau vs t1/t2 margins) and
// resolves the clamp time: t_cap_fraction <= 0 selects the default
// T - dt/2, otherwise t_cap = T * t_cap_fraction.
WeightSet build_weights(const EtaFunction& eta, const CarlemanParams& prm,
                        const TimeGrid& tg, double t_cap_fraction = 0.0);

// Default s: makes s * (alpha_bar_star(t_cap) - min_t alpha_bar_star)
// equal to budget, so normalized weights span about e^{budget}.
double auto_s(const EtaFunction& eta, double lambda, double tau, const TimeGrid& tg,
              double t_cap_fraction, double budget);

struct EstimateRow {
    std::string name;
    double fitted_C = 0.0;
};

struct EstimateReport {
    std::vector<EstimateRow> rows;
    bool all_finite = false;
    double max_fd_rel_error = 0.0; // filled by tests, not by the verifier
};

// Smallest empirical constants for the pointwise derivative bounds
// (|alpha_x| <= C lambda xi, |alpha_xx| <= C lambda^2 xi, ..., mixed
// and time derivatives against powers of xi), scanned over the grid.
EstimateReport verify_pointwise_estimates(const WeightSet& ws, const Grid1D& g,
                                          const TimeGrid& tg);

} // namespace weights
} // namespace mdlab
