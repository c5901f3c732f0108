#include "mdlab/config.hpp"

#include <algorithm>
#include <cctype>
#include <climits>
#include <fstream>
#include <set>
#include <sstream>

#include "mdlab/geometry.hpp"
#include "mdlab/grid.hpp"

namespace mdlab {
namespace config {

namespace {

std::string trim(const std::string& s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace((unsigned char)s[b])) ++b;
    while (e > b && std::isspace((unsigned char)s[e - 1])) --e;
    return s.substr(b, e - b);
}

bool parse_double(const std::string& v, double& out) {
    try {
        size_t pos = 0;
        out = std::stod(v, &pos);
        return pos == v.size();
    } catch (...) {
        return false;
    }
}

bool parse_int(const std::string& v, int& out) {
    try {
        size_t pos = 0;
        long val = std::stol(v, &pos);
        if (pos != v.size() || val < INT_MIN || val > INT_MAX) return false;
        out = (int)val;
        return true;
    } catch (...) {
        return false;
    }
}

bool parse_u64(const std::string& v, uint64_t& out) {
    if (v.empty() || v[0] == '-') return false;
    try {
        size_t pos = 0;
        out = std::stoull(v, &pos);
        return pos == v.size();
    } catch (...) {
        return false;
    }
}

bool parse_bool(const std::string& v, bool& out) {
    if (v == "true" || v == "1") {
        out = true;
        return true;
    }
    if (v == "false" || v == "0") {
        out = false;
        return true;
    }
    return false;
}

template <typename T, typename Parse>
bool parse_list(const std::string& v, std::vector<T>& out, const Parse& one) {
    std::vector<T> vals;
    std::string item;
    std::stringstream ss(v);
    while (std::getline(ss, item, ',')) {
        T x;
        if (!one(trim(item), x)) return false;
        vals.push_back(x);
    }
    if (vals.empty()) return false;
    out = std::move(vals);
    return true;
}

struct Parser {
    ExperimentConfig cfg;
    std::vector<std::string> errors;

    void fail(int line, const std::string& what) {
        errors.push_back("line " + std::to_string(line) + ": " + what);
    }

    // Returns false when (section, key) is unknown.
    bool assign(const std::string& sec, const std::string& key,
                const std::string& val, int line) {
        bool ok = true, known = true;
        if (sec == "domain") {
            DomainConfig& d = cfg.domain;
            if (key == "L") ok = parse_double(val, d.L);
            else if (key == "T") ok = parse_double(val, d.T);
            else if (key == "ell") ok = parse_double(val, d.ell);
            else if (key == "ell1") ok = parse_double(val, d.ell1);
            else if (key == "ell_omega") ok = parse_double(val, d.ell_omega);
            else if (key == "margin") ok = parse_double(val, d.margin);
            else known = false;
        } else if (sec == "grid") {
            GridConfig& g = cfg.grid;
            if (key == "n") ok = parse_int(val, g.n);
            else if (key == "m") ok = parse_int(val, g.m);
            else known = false;
        } else if (sec == "model") {
            ModelConfig& m = cfg.model;
            if (key == "kind") m.kind = val;
            else if (key == "a") ok = parse_double(val, m.a);
            else if (key == "b") ok = parse_double(val, m.b);
            else if (key == "c") ok = parse_double(val, m.c);
            else if (key == "gamma") ok = parse_double(val, m.gamma);
            else if (key == "beta") ok = parse_double(val, m.beta);
            else if (key == "sigma") ok = parse_double(val, m.sigma);
            else if (key == "v0_amp") ok = parse_double(val, m.v0_amp);
            else if (key == "v0_center") ok = parse_double(val, m.v0_center);
            else if (key == "v0_width") ok = parse_double(val, m.v0_width);
            else if (key == "w0_amp") ok = parse_double(val, m.w0_amp);
            else known = false;
        } else if (sec == "carleman") {
            CarlemanSection& c = cfg.carleman;
            if (key == "s") ok = parse_double(val, c.s);
            else if (key == "budget") ok = parse_double(val, c.budget);
            else if (key == "lambda") ok = parse_double(val, c.lambda);
            else if (key == "tau") ok = parse_double(val, c.tau);
            else if (key == "t_cap_fraction") ok = parse_double(val, c.t_cap_fraction);
            else if (key == "samples") ok = parse_int(val, c.samples);
            else if (key == "seed") ok = parse_u64(val, c.seed);
            else if (key == "modes") ok = parse_int(val, c.modes);
            else if (key == "which") c.which = val;
            else if (key == "ladder") ok = parse_list<int>(val, c.ladder, parse_int);
            else known = false;
        } else if (sec == "control") {
            ControlSection& c = cfg.control;
            if (key == "eps_pen") ok = parse_double(val, c.eps_pen);
            else if (key == "cg_max") ok = parse_int(val, c.cg_max);
            else if (key == "cg_tol") ok = parse_double(val, c.cg_tol);
            else if (key == "ladder")
                ok = parse_list<double>(val, c.ladder, parse_double);
            else if (key == "fixed_lo") ok = parse_double(val, c.fixed_lo);
            else if (key == "fixed_hi") ok = parse_double(val, c.fixed_hi);
            else known = false;
        } else if (sec == "nonlinear") {
            NonlinearSection& nl = cfg.nonlinear;
            if (key == "delta") ok = parse_double(val, nl.delta);
            else if (key == "pert_center") ok = parse_double(val, nl.pert_center);
            else if (key == "pert_width") ok = parse_double(val, nl.pert_width);
            else if (key == "pert_w") ok = parse_double(val, nl.pert_w);
            else if (key == "tol_terminal") ok = parse_double(val, nl.tol_terminal);
            else if (key == "max_outer") ok = parse_int(val, nl.max_outer);
            else if (key == "divergence_factor")
                ok = parse_double(val, nl.divergence_factor);
            else if (key == "deltas")
                ok = parse_list<double>(val, nl.deltas, parse_double);
            else known = false;
        } else if (sec == "output") {
            OutputSection& o = cfg.output;
            if (key == "dir") o.dir = val;
            else if (key == "plots") ok = parse_bool(val, o.plots);
            else known = false;
        } else {
            known = false;
        }
        if (!known) return false;
        if (!ok) fail(line, "cannot parse value '" + val + "' for key '" + key + "'");
        return true;
    }
};

} // namespace

ExperimentConfig parse_config(const std::string& text) {
    Parser p;
    std::set<std::string> seen; // "section.key" duplicates
    std::string section;
    std::istringstream in(text);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        size_t cut = raw.find_first_of("#;");
        std::string s = trim(cut == std::string::npos ? raw : raw.substr(0, cut));
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']' || s.size() < 3) {
                p.fail(line, "malformed section header '" + s + "'");
                continue;
            }
            section = trim(s.substr(1, s.size() - 2));
            static const std::set<std::string> kSections = {
                "domain", "grid", "model", "carleman",
                "control", "nonlinear", "output"};
            if (!kSections.count(section))
                p.fail(line, "unknown section '" + section + "'");
            continue;
        }
        size_t eq = s.find('=');
        if (eq == std::string::npos) {
            p.fail(line, "expected 'key = value', got '" + s + "'");
            continue;
        }
        std::string key = trim(s.substr(0, eq));
        std::string val = trim(s.substr(eq + 1));
        if (section.empty()) {
            p.fail(line, "key '" + key + "' appears before any section");
            continue;
        }
        if (!seen.insert(section + "." + key).second) {
            p.fail(line, "duplicate key '" + key + "' in [" + section + "]");
            continue;
        }
        if (!p.assign(section, key, val, line))
            p.fail(line, "unknown key '" + key + "' in [" + section + "]");
    }
    if (!p.errors.empty()) {
        std::string msg = "config errors:";
        for (const std::string& e : p.errors) msg += "\n  " + e;
        throw precondition_error(msg);
    }
    return p.cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), "cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

void validate_config(const ExperimentConfig& cfg) {
    const DomainConfig& d = cfg.domain;
    require(d.L > 0.0 && d.T > 0.0, "config: L and T must be positive");
    require(d.ell > d.margin, "config: ell must exceed margin");
    require(2.0 * d.ell < d.L, "config: 2 ell must be below L");
    require(d.margin > 0.0, "config: margin must be positive");
    require(d.ell < d.ell1 && d.ell1 < d.ell_omega && 2.0 * d.ell_omega < d.L,
            "config: half-widths must satisfy ell < ell1 < ell_omega < L/2");
    require(cfg.grid.n >= 8 && cfg.grid.m >= 8, "config: n and m must be >= 8");

    geometry::MovingDomain dom =
        geometry::make_moving_domain(d.L, d.T, d.ell, d.margin);
    require(cfg.carleman.tau <= std::min(dom.t1, d.T - dom.t2),
            "config: tau must be at most min(t1, T - t2) of the sweep");
    require(cfg.carleman.tau > 0.0, "config: tau must be positive");
    require(cfg.carleman.lambda >= 1.0, "config: lambda must be >= 1");
    require(cfg.carleman.s > 0.0 || cfg.carleman.budget > 0.0,
            "config: either s or the auto-scaling budget must be positive");
    require(cfg.carleman.samples >= 10, "config: samples must be >= 10");
    require(cfg.carleman.modes >= 1, "config: modes must be >= 1");
    require(cfg.carleman.ladder.size() >= 2,
            "config: carleman ladder needs at least 2 rungs");
    for (size_t i = 0; i < cfg.carleman.ladder.size(); ++i) {
        require(cfg.carleman.ladder[i] >= 8, "config: ladder rungs must be >= 8");
        if (i > 0)
            require(cfg.carleman.ladder[i] > cfg.carleman.ladder[i - 1],
                    "config: carleman ladder must be strictly increasing");
    }
    static const std::set<std::string> kWhich = {"ode", "neumann", "coupled",
                                                 "nonvanishing", "conjugation"};
    require(kWhich.count(cfg.carleman.which) > 0,
            "config: which must be one of ode|neumann|coupled|nonvanishing|conjugation");

    require(cfg.model.kind == "rm" || cfg.model.kind == "fhn",
            "config: model kind must be rm or fhn");
    require(cfg.model.sigma > 0.0, "config: sigma must be positive");
    require(cfg.model.v0_width > 0.0, "config: v0_width must be positive");

    require(cfg.control.eps_pen > 0.0, "config: eps_pen must be positive");
    require(cfg.control.cg_max >= 1, "config: cg_max must be >= 1");
    require(cfg.control.cg_tol > 0.0, "config: cg_tol must be positive");
    require(!cfg.control.ladder.empty(), "config: control ladder must be nonempty");
    for (double e : cfg.control.ladder)
        require(e > 0.0, "config: control ladder entries must be positive");
    require(cfg.control.fixed_lo <= cfg.control.fixed_hi,
            "config: fixed_lo must not exceed fixed_hi");
    if (cfg.control.fixed_lo != 0.0 || cfg.control.fixed_hi != 0.0)
        require(cfg.control.fixed_lo >= 0.0 && cfg.control.fixed_hi <= d.L &&
                    cfg.control.fixed_lo < cfg.control.fixed_hi,
                "config: fixed interval must sit inside [0, L]");

    require(cfg.nonlinear.delta >= 0.0, "config: delta must be nonnegative");
    require(cfg.nonlinear.pert_width > 0.0, "config: pert_width must be positive");
    require(cfg.nonlinear.max_outer >= 1, "config: max_outer must be >= 1");
    require(cfg.nonlinear.divergence_factor > 1.0,
            "config: divergence_factor must exceed 1");
    require(!cfg.nonlinear.deltas.empty(), "config: deltas must be nonempty");
    for (double dd : cfg.nonlinear.deltas)
        require(dd > 0.0, "config: deltas entries must be positive");

    require(!cfg.output.dir.empty(), "config: output dir must be nonempty");
}

namespace {

std::string join_doubles(const std::vector<double>& v) {
    std::string out;
    for (size_t i = 0; i < v.size(); ++i) {
        if (i) out += ",";
        out += format_double(v[i]);
    }
    return out;
}

std::string join_ints(const std::vector<int>& v) {
    std::string out;
    for (size_t i = 0; i < v.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(v[i]);
    }
    return out;
}

} // namespace

std::string render_config(const ExperimentConfig& cfg) {
    std::ostringstream o;
    const DomainConfig& d = cfg.domain;
    o << "[domain]\n";
    o << "L = " << format_double(d.L) << "\n";
    o << "T = " << format_double(d.T) << "\n";
    o << "ell = " << format_double(d.ell) << "\n";
    o << "ell1 = " << format_double(d.ell1) << "\n";
    o << "ell_omega = " << format_double(d.ell_omega) << "\n";
    o << "margin = " << format_double(d.margin) << "\n";
    o << "\n[grid]\n";
    o << "n = " << cfg.grid.n << "\n";
    o << "m = " << cfg.grid.m << "\n";
    const ModelConfig& mo = cfg.model;
    o << "\n[model]\n";
    o << "kind = " << mo.kind << "\n";
    o << "a = " << format_double(mo.a) << "\n";
    o << "b = " << format_double(mo.b) << "\n";
    o << "c = " << format_double(mo.c) << "\n";
    o << "gamma = " << format_double(mo.gamma) << "\n";
    o << "beta = " << format_double(mo.beta) << "\n";
    o << "sigma = " << format_double(mo.sigma) << "\n";
    o << "v0_amp = " << format_double(mo.v0_amp) << "\n";
    o << "v0_center = " << format_double(mo.v0_center) << "\n";
    o << "v0_width = " << format_double(mo.v0_width) << "\n";
    o << "w0_amp = " << format_double(mo.w0_amp) << "\n";
    const CarlemanSection& ca = cfg.carleman;
    o << "\n[carleman]\n";
    o << "s = " << format_double(ca.s) << "\n";
    o << "budget = " << format_double(ca.budget) << "\n";
    o << "lambda = " << format_double(ca.lambda) << "\n";
    o << "tau = " << format_double(ca.tau) << "\n";
    o << "t_cap_fraction = " << format_double(ca.t_cap_fraction) << "\n";
    o << "samples = " << ca.samples << "\n";
    o << "seed = " << ca.seed << "\n";
    o << "modes = " << ca.modes << "\n";
    o << "which = " << ca.which << "\n";
    o << "ladder = " << join_ints(ca.ladder) << "\n";
    const ControlSection& co = cfg.control;
    o << "\n[control]\n";
    o << "eps_pen = " << format_double(co.eps_pen) << "\n";
    o << "cg_max = " << co.cg_max << "\n";
    o << "cg_tol = " << format_double(co.cg_tol) << "\n";
    o << "ladder = " << join_doubles(co.ladder) << "\n";
    o << "fixed_lo = " << format_double(co.fixed_lo) << "\n";
    o << "fixed_hi = " << format_double(co.fixed_hi) << "\n";
    const NonlinearSection& nl = cfg.nonlinear;
    o << "\n[nonlinear]\n";
    o << "delta = " << format_double(nl.delta) << "\n";
    o << "pert_center = " << format_double(nl.pert_center) << "\n";
    o << "pert_width = " << format_double(nl.pert_width) << "\n";
    o << "pert_w = " << format_double(nl.pert_w) << "\n";
    o << "tol_terminal = " << format_double(nl.tol_terminal) << "\n";
    o << "max_outer = " << nl.max_outer << "\n";
    o << "divergence_factor = " << format_double(nl.divergence_factor) << "\n";
    o << "deltas = " << join_doubles(nl.deltas) << "\n";
    o << "\n[output]\n";
    o << "dir = " << cfg.output.dir << "\n";
    o << "plots = " << (cfg.output.plots ? "true" : "false") << "\n";
    return o.str();
}

} // namespace config
} // namespace mdlab
