#pragma once

// Streaming signed log-space accumulation. Carleman-weighted integrals
// involve factors like e^{2s*alpha} whose magnitude far exceeds double
// range; sums are therefore accumulated as (sign, log|value|) pairs and
// only ratios of sums are ever exponentiated.

#include <cmath>
#include <limits>

namespace mdlab {

struct SignedLog {
    double log_abs = -std::numeric_limits<double>::infinity();
    double sign = 0.0; // -1, 0, +1

    static SignedLog from_value(double v) {
        if (v == 0.0) return {};
        return {std::log(std::abs(v)), v > 0.0 ? 1.0 : -1.0};
    }
};

class LogAccumulator {
public:
    // Add sign * exp(log_abs) to the running sum.
    void add(double log_abs, double sign) {
        if (sign == 0.0 || log_abs == -std::numeric_limits<double>::infinity()) return;
        if (log_abs > shift_ + 200.0 || total_count_ == 0) rescale(log_abs);
        double w = std::exp(log_abs - shift_);
        if (sign > 0.0) pos_ += w; else neg_ += w;
        ++total_count_;
    }
    void add(const SignedLog& t) { add(t.log_abs, t.sign); }
    void add_value(double v) { add(SignedLog::from_value(v)); }

    SignedLog result() const {
        double net = pos_ - neg_;
        if (net == 0.0) return {};
        return {shift_ + std::log(std::abs(net)), net > 0.0 ? 1.0 : -1.0};
    }

private:
    void rescale(double new_shift) {
        if (new_shift <= shift_) return;
        double f = std::exp(shift_ - new_shift);
        pos_ *= f;
        neg_ *= f;
        shift_ = new_shift;
    }

    double shift_ = -std::numeric_limits<double>::infinity();
    double pos_ = 0.0, neg_ = 0.0;
    long total_count_ = 0;
};

// log(exp(a) + exp(b)) without overflow.
inline double log_add(double a, double b) {
    if (a == -std::numeric_limits<double>::infinity()) return b;
    if (b == -std::numeric_limits<double>::infinity()) return a;
    double hi = a > b ? a : b, lo = a > b ? b : a;
    return hi + std::log1p(std::exp(lo - hi));
}

} // namespace mdlab
