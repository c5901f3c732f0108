#pragma once

// Command line front end. Subcommands cover the full pipeline: forward
// simulation, reference trajectories, linear and nonlinear control
// synthesis, the weighted-inequality checks, weight diagnostics, the
// moving-vs-static support comparison, and SVG plots rendered from the
// CSV artifacts of earlier runs.
//
// Exit codes: 0 success, 2 invalid arguments or configuration,
// 3 failed convergence or a failed check, 1 unexpected error.

#include <iosfwd>
#include <string>
#include <vector>

namespace mdlab {
namespace cli {

// args in natural order, program name excluded.
int run(const std::vector<std::string>& args);
int run(int argc, char** argv);

// Renders the standard plots for whatever CSV artifacts exist in dir,
// logging one line per plot written or skipped.
void emit_plots(const std::string& dir, std::ostream& log);

} // namespace cli
} // namespace mdlab
