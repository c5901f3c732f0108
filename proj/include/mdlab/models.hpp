#pragma once

// Ionic models and the algebra connecting the physical variables to
// the controlled ones.
//
// Monodomain reaction terms (v membrane potential, w recovery):
//   FHN:  I_ion(v, w) = b v (a - v)(1 - v) + c w
//   RM:   I_ion(v, w) = b v (a - v)(1 - v) + c v w
//   recovery ODE: w_t + g(v, w) = 0 with g(v, w) = -gamma (v - beta w)
//
// Perturbations around a trajectory (v_bar, w_bar) are steered in the
// exponentially rescaled variables
//   p = gamma e^{gamma beta t} (v - v_bar),  q = e^{gamma beta t} (w - w_bar),
// in which the dynamics become p_t - (sigma p_x)_x + ell_p p + ell_q q
// + N(p, q) = h on the support, q_t = p. linearize produces the
// coefficient fields ell_y, ell_p, ell_q and A = ell_q - d/dt ell_p
// (the coupling coefficient of the theta-q form); nonlinearity
// evaluates the quadratic-cubic remainder N.

#include <utility>

#include "mdlab/grid.hpp"

namespace mdlab {
namespace models {

enum class ModelKind { FHN, RM };

struct IonicModel {
    ModelKind kind = ModelKind::RM;
    double a = 0.13; // excitation threshold (desk-scale default)
    double b = 1.0;  // cubic strength
    double c = 1.0;  // recovery coupling
    double gamma = 1.0;
    double beta = 1.0;
};

// Throws if any parameter is not positive.
void validate(const IonicModel& m);

double ionic_current(const IonicModel& m, double v, double w);
double ionic_current_dv(const IonicModel& m, double v, double w);
double ionic_current_dw(const IonicModel& m, double v);

// g(v, w); the recovery equation is w_t = -g(v, w) = gamma (v - beta w).
double recovery_rhs(const IonicModel& m, double v, double w);

struct LinearizationCoeffs {
    SpaceTimeField ell_y; // linear-in-y coefficient of the y-z system
    SpaceTimeField ell_p; // ell_y - gamma beta + a b
    SpaceTimeField ell_q;
    SpaceTimeField A; // ell_q - d/dt ell_p (centered/one-sided differences)
    // Discrete W^{1,inf} smoothness diagnostics: sup |f| + sup |f_x| + sup |f_t|.
    double w1inf_ell_p = 0.0;
    double w1inf_ell_q = 0.0;
};

LinearizationCoeffs linearize(const IonicModel& m, const SpaceTimeField& v_bar,
                              const SpaceTimeField& w_bar);

// N(p, q) at a point where the trajectory value is v_bar:
//   RM:  b/gamma e^{-gamma beta t} (3 v_bar - (1 + a)) p^2
//        + c e^{-gamma beta t} p q + b/gamma^2 e^{-2 gamma beta t} p^3
//   FHN: same with c e^{-gamma beta t} q in place of the p q term.
double nonlinearity(const IonicModel& m, double v_bar, double p, double q, double t);

SpaceTimeField nonlinearity_field(const IonicModel& m, const SpaceTimeField& v_bar,
                                  const SpaceTimeField& p, const SpaceTimeField& q);

// (y, z) -> (p, q) and back; the control maps as h = gamma e^{gamma beta t} I_se.
std::pair<double, double> change_variables_forward(double y, double z, double t,
                                                   const IonicModel& m);
std::pair<double, double> change_variables_inverse(double p, double q, double t,
                                                   const IonicModel& m);
double stimulation_from_control(double h, double t, const IonicModel& m);
double control_from_stimulation(double I_se, double t, const IonicModel& m);

} // namespace models
} // namespace mdlab
