#pragma once

// Experiment configuration: INI-style sections with a fixed key set,
// strict parsing (unknown sections, unknown keys, duplicate keys and
// malformed values are load errors that list every offender), and
// cross-field validation of the sweep geometry. The resolved config
// renders back to the same INI dialect, so the meta file written next
// to every artifact round-trips through the parser.

#include <cstdint>
#include <string>
#include <vector>

#include "mdlab/errors.hpp"

namespace mdlab {
namespace config {

struct DomainConfig {
    double L = 1.0;
    double T = 1.0;
    double ell = 0.2;       // half-width of the innermost sweeping support
    double ell1 = 0.25;     // middle support
    double ell_omega = 0.3; // outer (control) support
    double margin = 0.05;   // sweep start/end distance from the boundary
};

struct GridConfig {
    int n = 128; // space cells
    int m = 128; // time steps
};

struct ModelConfig {
    std::string kind = "rm"; // rm | fhn
    double a = 0.13;
    double b = 1.0;
    double c = 1.0;
    double gamma = 1.0;
    double beta = 1.0;
    double sigma = 1.0; // constant conductivity
    // initial state of the reference run: v0 = amp * bump(center, width)
    double v0_amp = 0.0;
    double v0_center = 0.5;
    double v0_width = 0.1;
    double w0_amp = 0.0;
};

struct CarlemanSection {
    double s = 0.0; // <= 0 selects auto scaling with the budget below
    double budget = 10.0;
    double lambda = 1.5;
    double tau = 0.15;
    double t_cap_fraction = 0.0; // <= 0 selects the default clamp T - dt/2
    int samples = 100;
    uint64_t seed = 1;
    int modes = 8;
    std::string which = "ode"; // ode|neumann|coupled|nonvanishing|conjugation
    std::vector<int> ladder = {64, 128, 256};
};

struct ControlSection {
    double eps_pen = 1e-8;
    int cg_max = 500;
    double cg_tol = 1e-8;
    std::vector<double> ladder = {1e-4, 1e-5, 1e-6, 1e-7, 1e-8};
    // optional fixed comparison interval; lo = hi = 0 selects the
    // centered interval whose measure matches the sweeping support
    double fixed_lo = 0.0;
    double fixed_hi = 0.0;
};

struct NonlinearSection {
    double delta = 1e-2; // perturbation amplitude
    double pert_center = 0.5;
    double pert_width = 0.1;
    double pert_w = 0.0;       // relative amplitude of the recovery perturbation
    double tol_terminal = 0.0; // <= 0 selects 1e-3 x initial perturbation norm
    int max_outer = 25;
    double divergence_factor = 10.0;
    std::vector<double> deltas = {1e-3, 1e-2, 1e-1, 5e-1}; // basin sweep
};

struct OutputSection {
    std::string dir = "out";
    bool plots = true;
};

struct ExperimentConfig {
    DomainConfig domain;
    GridConfig grid;
    ModelConfig model;
    CarlemanSection carleman;
    ControlSection control;
    NonlinearSection nonlinear;
    OutputSection output;
};

// Parses the INI text. Throws precondition_error listing every unknown
// section, unknown key, duplicate key, and unparsable value.
ExperimentConfig parse_config(const std::string& text);

// Reads the file and parses it; validate_config is applied by the CLI,
// not here, so tests can inspect invalid configs.
ExperimentConfig load_config(const std::string& path);

// Cross-field validation: positive sizes, ell > margin, 2 ell < L,
// nested half-widths, tau <= min(t1, T - t2) for the affine sweep,
// model kind and check name recognized, positive tolerances.
void validate_config(const ExperimentConfig& cfg);

// Renders the fully resolved config in the same INI dialect,
// deterministically (fixed section and key order, %.17g numbers).
std::string render_config(const ExperimentConfig& cfg);

} // namespace config
} // namespace mdlab
