// Null-control synthesis: exact zero/homogeneity invariants, the
// Taylor test for the adjoint gradient, support-mask exactness,
// optimality of the returned objective value, and the moving-vs-static
// comparison harness.

#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "mdlab/control.hpp"
#include "mdlab/geometry.hpp"
#include "mdlab/grid.hpp"
#include "mdlab/models.hpp"
#include "mdlab/pde.hpp"
#include "mdlab/weights.hpp"

using namespace mdlab;
using namespace mdlab::control;

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Setup {
    Grid1D g;
    TimeGrid tg;
    geometry::NestedSupports sup;
    weights::WeightSet ws;
    models::LinearizationCoeffs coeffs;
    pde::Conductivity sigma;

    Setup(int n, int m) : g(1.0, n), tg(1.0, m), sigma(pde::constant_conductivity(1.0)) {
        geometry::MovingDomain dom = geometry::make_moving_domain(1.0, 1.0, 0.2, 0.05);
        sup = geometry::build_nested(dom, 0.25, 0.3);
        geometry::verify_nesting(sup, g);
        weights::EtaFunction eta = weights::build_eta(sup.omega0);
        weights::CarlemanParams prm;
        prm.lambda = 1.5;
        prm.tau = 0.15;
        prm.s = weights::auto_s(eta, prm.lambda, prm.tau, tg, 0.0, 10.0);
        ws = weights::build_weights(eta, prm, tg, 0.0);
        SpaceTimeField zero(g, tg);
        coeffs = models::linearize(models::IonicModel{}, zero, zero);
    }

    ControlProblem problem(const Level& p0, const Level& q0, double eps_pen) const {
        return make_control_problem(coeffs, sigma, sup, ws, p0, q0,
                                    SpaceTimeField(g, tg), eps_pen);
    }
};

// The objective the synthesizer minimizes, evaluated on an arbitrary
// controlled run; used to confirm J(h*) <= J(0).
double objective(const Setup& s, const ControlProblem& prob, const SpaceTimeField& h,
                 const SpaceTimeField& mask) {
    pde::ThetaQResult run = pde::solve_theta_q(prob.ell_p, prob.A, prob.sigma,
                                               prob.theta0, prob.q0, prob.G, h, mask);
    double acc = 0.0;
    for (int k = 0; k <= s.tg.m; ++k) {
        double t = s.tg.t(k);
        double r1 = s.ws.rho(1, t), r2 = s.ws.rho(2, t), r3 = s.ws.rho(3, t);
        double lvl = 0.0;
        for (int j = 0; j <= s.g.n; ++j) {
            double hm = h.at(k, j) * mask.at(k, j);
            lvl += s.g.wx(j) *
                   (r3 * r3 * hm * hm + r1 * r1 * run.theta.at(k, j) * run.theta.at(k, j) +
                    r2 * r2 * run.q.at(k, j) * run.q.at(k, j));
        }
        acc += s.tg.wt(k) * lvl;
    }
    double term = 0.0;
    for (int j = 0; j <= s.g.n; ++j) {
        double th = run.theta.at(s.tg.m, j), qu = run.q.at(s.tg.m, j);
        term += s.g.wx(j) * (th * th + qu * qu);
    }
    return 0.5 * acc + 0.5 * term / prob.eps_pen;
}

} // namespace

TEST_CASE("zero data produce the zero control at zero cost") {
    Setup s(32, 32);
    Level z(s.g.npts(), 0.0);
    ControlProblem prob = s.problem(z, z, 1e-6);
    ControlReport rep = synthesize_null_control(prob);
    CHECK(norm_linf(rep.h) == 0.0);
    CHECK(rep.J_value == 0.0);
    CHECK(rep.converged);
    CHECK(rep.cg_iterations == 0);
    CHECK(rep.terminal_theta == 0.0);
    CHECK(rep.terminal_q == 0.0);

    // the gradient of a fully zero problem is exactly zero as well
    SpaceTimeField probe(s.g, s.tg);
    CHECK(gradient_check(prob, probe, 3) <= 1e-14);
}

TEST_CASE("the synthesis map is homogeneous in the data") {
    Setup s(32, 32);
    Level p0 = sample_level(s.g, [](double x) { return std::cos(kPi * x); });
    Level p2 = p0;
    for (double& v : p2) v *= 2.0;
    Level z(s.g.npts(), 0.0);

    ControlReport r1 = synthesize_null_control(s.problem(p0, z, 1e-4));
    ControlReport r2 = synthesize_null_control(s.problem(p2, z, 1e-4));
    CHECK(r1.cg_iterations == r2.cg_iterations);
    double worst = 0.0, scale = norm_linf(r1.h);
    for (size_t i = 0; i < r1.h.raw().size(); ++i)
        worst = std::max(worst, std::abs(r2.h.raw()[i] - 2.0 * r1.h.raw()[i]));
    CHECK(scale > 0.0);
    CHECK(worst <= 1e-10 * scale);
}

TEST_CASE("the adjoint gradient passes the Taylor test") {
    Setup s(32, 32);
    Level p0 = sample_level(s.g, [](double x) { return std::cos(kPi * x); });
    Level q0 = sample_level(s.g, [](double x) { return 0.2 * std::cos(2 * kPi * x); });
    ControlProblem prob = s.problem(p0, q0, 1e-4);
    SpaceTimeField probe = sample_field(s.g, s.tg, [](double x, double t) {
        return 0.5 * std::cos(2 * kPi * x) * (1.0 - t);
    });
    CHECK(gradient_check(prob, probe, 5) <= 1e-5);
}

TEST_CASE("the control lives exactly on the moving support") {
    Setup s(48, 48);
    Level p0 = sample_level(s.g, [](double x) { return std::cos(kPi * x); });
    Level z(s.g.npts(), 0.0);
    ControlProblem prob = s.problem(p0, z, 1e-6);
    prob.cg_max = 2000;
    ControlReport rep = synthesize_null_control(prob);
    CHECK(rep.converged);

    SpaceTimeField mask = geometry::support_mask(prob.supports.omega, s.g, s.tg);
    for (size_t i = 0; i < mask.raw().size(); ++i)
        if (mask.raw()[i] == 0.0) CHECK(rep.h.raw()[i] == 0.0);

    // the optimizer can only improve on the zero control
    double J0 = objective(s, prob, SpaceTimeField(s.g, s.tg), mask);
    CHECK(rep.J_value <= J0 * (1.0 + 1e-9));
    CHECK(rep.J_value < 0.9 * J0); // and for this data it strictly must

    // terminal norms drop well below the free run's
    CHECK(rep.terminal_theta_free > 0.0);
    CHECK(rep.terminal_theta <= 0.1 * rep.terminal_theta_free);
    CHECK(std::isfinite(rep.weighted_theta));
    CHECK(std::isfinite(rep.weighted_q));
    CHECK(std::isfinite(rep.weighted_h));
    CHECK(rep.weighted_h > 0.0);

    // the stimulation readout undoes the exponential rescaling
    models::IonicModel m;
    m.gamma = 2.0;
    SpaceTimeField ise = reconstruct_stimulation(rep.h, m);
    for (int k : {0, 17, 48})
        for (int j : {5, 24, 40})
            CHECK(ise.at(k, j) ==
                  doctest::Approx(models::stimulation_from_control(rep.h.at(k, j),
                                                                   s.tg.t(k), m))
                      .epsilon(1e-14));
}

TEST_CASE("moving and static supports run through the same ladder") {
    Setup s(32, 32);
    Level p0 = sample_level(s.g, [](double x) { return std::cos(kPi * x); });
    Level z(s.g.npts(), 0.0);
    ControlProblem prob = s.problem(p0, z, 1e-4);

    geometry::Interval1D fixed = default_fixed_interval(prob.supports.omega);
    double meas = geometry::average_support_measure(prob.supports.omega, 512);
    CHECK(fixed.length() == doctest::Approx(meas).epsilon(1e-12));
    CHECK(fixed.lo + fixed.hi == doctest::Approx(1.0).epsilon(1e-12));

    ComparisonTable table = fixed_vs_moving_comparison(prob, fixed, {1e-3, 1e-5});
    REQUIRE(table.rows.size() == 2);
    CHECK(table.rows[0].eps_pen == 1e-3);
    CHECK(table.rows[1].eps_pen == 1e-5);
    for (const ComparisonRow& row : table.rows) {
        CHECK(std::isfinite(row.moving_terminal_theta));
        CHECK(std::isfinite(row.static_terminal_theta));
        CHECK(row.moving_J > 0.0);
        CHECK(row.static_J > 0.0);
    }
    // a stiffer penalty can only push the moving terminal norm down
    CHECK(table.rows[1].moving_terminal_theta <=
          table.rows[0].moving_terminal_theta * (1.0 + 1e-6));

    CHECK_THROWS_AS(
        fixed_vs_moving_comparison(prob, geometry::Interval1D{0.7, 0.2}, {1e-4}),
        precondition_error);
}

TEST_CASE("problem construction validates its inputs") {
    Setup s(32, 32);
    Level z(s.g.npts(), 0.0);
    CHECK_THROWS_AS(s.problem(z, z, 0.0), precondition_error);
    CHECK_THROWS_AS(s.problem(z, z, -1e-8), precondition_error);

    SpaceTimeField bad(s.g, s.tg);
    bad.at(0, 0) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(make_control_problem(s.coeffs, s.sigma, s.sup, s.ws, z, z, bad, 1e-8),
                    precondition_error);

    Level short_p0(4, 0.0);
    CHECK_THROWS_AS(
        make_control_problem(s.coeffs, s.sigma, s.sup, s.ws, short_p0, z,
                             SpaceTimeField(s.g, s.tg), 1e-8),
        precondition_error);
}
