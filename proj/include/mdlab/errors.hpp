#pragma once

#include <stdexcept>
#include <string>

namespace mdlab {

// Thrown when an operation's input contract is violated (bad geometry,
// incompatible grids, out-of-range parameters, malformed config).
// The CLI maps this to exit code 2.
class precondition_error : public std::runtime_error {
public:
    explicit precondition_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Thrown when an iterative solve fails to reach its tolerance (Newton,
// CG, fixed-point divergence). The CLI maps this to exit code 3.
class convergence_error : public std::runtime_error {
public:
    explicit convergence_error(const std::string& msg) : std::runtime_error(msg) {}
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw precondition_error(msg);
}

} // namespace mdlab
