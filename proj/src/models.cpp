#include "mdlab/models.hpp"

#include <cmath>

namespace mdlab {
namespace models {

void validate(const IonicModel& m) {
    require(m.a > 0.0 && m.b > 0.0 && m.c > 0.0 && m.gamma > 0.0 && m.beta > 0.0,
            "IonicModel: all parameters must be positive");
}

double ionic_current(const IonicModel& m, double v, double w) {
    double cubic = m.b * v * (m.a - v) * (1.0 - v);
    return m.kind == ModelKind::RM ? cubic + m.c * v * w : cubic + m.c * w;
}

double ionic_current_dv(const IonicModel& m, double v, double w) {
    // d/dv [b v (a - v)(1 - v)] = b (a - 2(1+a) v + 3 v^2)
    double dcubic = m.b * (m.a - 2.0 * (1.0 + m.a) * v + 3.0 * v * v);
    return m.kind == ModelKind::RM ? dcubic + m.c * w : dcubic;
}

double ionic_current_dw(const IonicModel& m, double v) {
    return m.kind == ModelKind::RM ? m.c * v : m.c;
}

double recovery_rhs(const IonicModel& m, double v, double w) {
    return -m.gamma * (v - m.beta * w);
}

LinearizationCoeffs linearize(const IonicModel& m, const SpaceTimeField& v_bar,
                              const SpaceTimeField& w_bar) {
    validate(m);
    require(v_bar.same_layout(w_bar), "linearize: trajectory fields on different grids");
    const Grid1D& g = v_bar.grid();
    const TimeGrid& tg = v_bar.time();

    LinearizationCoeffs out;
    out.ell_y = SpaceTimeField(g, tg);
    out.ell_p = SpaceTimeField(g, tg);
    out.ell_q = SpaceTimeField(g, tg);
    out.A = SpaceTimeField(g, tg);

    for (int k = 0; k <= tg.m; ++k) {
        for (int j = 0; j <= g.n; ++j) {
            double v = v_bar.at(k, j);
            double ly = 3.0 * m.b * v * v - 2.0 * m.b * (1.0 + m.a) * v;
            ly += (m.kind == ModelKind::RM) ? m.c * w_bar.at(k, j) : m.c;
            out.ell_y.at(k, j) = ly;
            out.ell_p.at(k, j) = ly - m.gamma * m.beta + m.a * m.b;
            out.ell_q.at(k, j) =
                (m.kind == ModelKind::RM) ? m.gamma * m.c * v : m.gamma * m.c;
        }
    }

    // A = ell_q - d/dt ell_p, centered in the interior and one-sided
    // second order at the first/last levels.
    double dt = tg.dt();
    for (int j = 0; j <= g.n; ++j) {
        for (int k = 0; k <= tg.m; ++k) {
            double dlp;
            if (k == 0)
                dlp = (-3.0 * out.ell_p.at(0, j) + 4.0 * out.ell_p.at(1, j) -
                       out.ell_p.at(2, j)) /
                      (2.0 * dt);
            else if (k == tg.m)
                dlp = (3.0 * out.ell_p.at(k, j) - 4.0 * out.ell_p.at(k - 1, j) +
                       out.ell_p.at(k - 2, j)) /
                      (2.0 * dt);
            else
                dlp = (out.ell_p.at(k + 1, j) - out.ell_p.at(k - 1, j)) / (2.0 * dt);
            out.A.at(k, j) = out.ell_q.at(k, j) - dlp;
        }
    }

    // Discrete W^{1,inf} diagnostics.
    auto w1inf = [&](const SpaceTimeField& f) {
        double sup = 0.0, sup_x = 0.0, sup_t = 0.0;
        double dx = g.dx();
        for (int k = 0; k <= tg.m; ++k)
            for (int j = 0; j <= g.n; ++j) {
                sup = std::max(sup, std::abs(f.at(k, j)));
                if (j < g.n)
                    sup_x = std::max(sup_x, std::abs(f.at(k, j + 1) - f.at(k, j)) / dx);
                if (k < tg.m)
                    sup_t = std::max(sup_t, std::abs(f.at(k + 1, j) - f.at(k, j)) / dt);
            }
        return sup + sup_x + sup_t;
    };
    out.w1inf_ell_p = w1inf(out.ell_p);
    out.w1inf_ell_q = w1inf(out.ell_q);
    return out;
}

double nonlinearity(const IonicModel& m, double v_bar, double p, double q, double t) {
    double e1 = std::exp(-m.gamma * m.beta * t);
    double quad = m.b / m.gamma * e1 * (3.0 * v_bar - (1.0 + m.a)) * p * p;
    double cubic = m.b / (m.gamma * m.gamma) * e1 * e1 * p * p * p;
    double cross = (m.kind == ModelKind::RM) ? m.c * e1 * p * q : m.c * e1 * q;
    return quad + cross + cubic;
}

SpaceTimeField nonlinearity_field(const IonicModel& m, const SpaceTimeField& v_bar,
                                  const SpaceTimeField& p, const SpaceTimeField& q) {
    require(v_bar.same_layout(p) && p.same_layout(q),
            "nonlinearity_field: layout mismatch");
    SpaceTimeField out(p.grid(), p.time());
    for (int k = 0; k <= p.time().m; ++k) {
        double t = p.time().t(k);
        for (int j = 0; j <= p.grid().n; ++j)
            out.at(k, j) = nonlinearity(m, v_bar.at(k, j), p.at(k, j), q.at(k, j), t);
    }
    return out;
}

std::pair<double, double> change_variables_forward(double y, double z, double t,
                                                   const IonicModel& m) {
    double e = std::exp(m.gamma * m.beta * t);
    return {m.gamma * e * y, e * z};
}

std::pair<double, double> change_variables_inverse(double p, double q, double t,
                                                   const IonicModel& m) {
    double e = std::exp(-m.gamma * m.beta * t);
    return {e * p / m.gamma, e * q};
}

double stimulation_from_control(double h, double t, const IonicModel& m) {
    return std::exp(-m.gamma * m.beta * t) * h / m.gamma;
}

double control_from_stimulation(double I_se, double t, const IonicModel& m) {
    return m.gamma * std::exp(m.gamma * m.beta * t) * I_se;
}

} // namespace models
} // namespace mdlab
