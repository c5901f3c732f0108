#pragma once

// Tridiagonal matrices and the Thomas solve. All implicit steps in the
// project reduce to one tridiagonal system per time step; matrices are
// strictly diagonally dominant there, so no pivoting is needed.

#include <vector>

#include "mdlab/errors.hpp"

namespace mdlab {

struct Tridiag {
    // lower[i] multiplies x[i-1] in row i (lower[0] unused),
    // upper[i] multiplies x[i+1] in row i (upper[n-1] unused).
    std::vector<double> lower, diag, upper;

    explicit Tridiag(int n = 0) : lower(n, 0.0), diag(n, 0.0), upper(n, 0.0) {}
    int size() const { return (int)diag.size(); }

    Tridiag transposed() const {
        Tridiag t(size());
        t.diag = diag;
        for (int i = 0; i + 1 < size(); ++i) {
            t.upper[i] = lower[i + 1];
            t.lower[i + 1] = upper[i];
        }
        return t;
    }
};

inline std::vector<double> apply_tridiag(const Tridiag& A, const std::vector<double>& x) {
    int n = A.size();
    require((int)x.size() == n, "apply_tridiag: size mismatch");
    std::vector<double> y(n);
    for (int i = 0; i < n; ++i) {
        double v = A.diag[i] * x[i];
        if (i > 0) v += A.lower[i] * x[i - 1];
        if (i + 1 < n) v += A.upper[i] * x[i + 1];
        y[i] = v;
    }
    return y;
}

inline std::vector<double> solve_tridiag(const Tridiag& A, std::vector<double> rhs) {
    int n = A.size();
    require((int)rhs.size() == n, "solve_tridiag: size mismatch");
    std::vector<double> c(n, 0.0);
    double piv = A.diag[0];
    require(piv != 0.0, "solve_tridiag: zero pivot");
    c[0] = (n > 1) ? A.upper[0] / piv : 0.0;
    rhs[0] /= piv;
    for (int i = 1; i < n; ++i) {
        piv = A.diag[i] - A.lower[i] * c[i - 1];
        require(piv != 0.0, "solve_tridiag: zero pivot");
        if (i + 1 < n) c[i] = A.upper[i] / piv;
        rhs[i] = (rhs[i] - A.lower[i] * rhs[i - 1]) / piv;
    }
    for (int i = n - 2; i >= 0; --i) rhs[i] -= c[i] * rhs[i + 1];
    return rhs;
}

} // namespace mdlab
