#pragma once

#include "nlw/ansatz.hpp"
#include "nlw/extract.hpp"
#include "nlw/ode_lab.hpp"
#include "nlw/pde_solver.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace nlw {

/// Everything a run needs. Parsed from TOML; unknown keys are errors.
struct RunConfig {
    double p = 3;
    std::uint64_t seed = 0;
    std::string output;
    std::string source_text;  // the TOML the config was parsed from, kept for manifests

    // [grid]
    double L = 6.283185307179586;
    int n = 128;

    // [data]
    std::string initial = "perturbed";  // perturbed | ansatz | model
    std::string f = "0";
    double slope = 0;
    std::string psi = "0";
    double N = 0;  // ansatz order, 0: 2 beta + 4
    double t_seed = 1e-3;
    double eps = 1e-2;
    std::vector<double> eps_list{5e-3, 1e-2};
    std::string g0 = "cos(x)";
    std::string g1 = "0";
    int random_modes = 0;  // > 0: g0 is a seeded random trigonometric polynomial of this degree

    // [solver]
    EvolveControls solver = [] {
        EvolveControls c;
        c.phi_stop = 1e4;
        return c;
    }();
    double t_end = 0;  // pde-evolve target; 0: 0.23 for ansatz data, run to phi_stop otherwise
    int outputs = 0;   // evenly spaced output slices besides the end points

    // [construction]
    double t_forward = 0.23;
    double t_resample = 0.17;

    // [fit]
    PipelineControls pipeline{};

    // [ode]
    double ode_psi = 0.1;
    double ode_t0 = 0;
    double ode_t_seed = 1e-3;
    double ode_t_end = 0.5;
    OdeControls ode{};
    ExtractOptions ode_fit{};

    // [energy]
    double q = 0;  // 0: 4 kappa
    double tau_lo = 0.05, tau_hi = 0.2;
    int levels = 9;
    double energy_N = 0;  // order of the ansatz subtracted in the backward current, 0: same as [data] N
    double t_min = 0;     // backward current: slices with t < t_min are dropped
};

/// `source` names the input in error messages ("file.toml: line 3: solver.cfl: must be positive").
RunConfig parse_config(std::string_view text, const std::string& source = "config");
RunConfig load_config(const std::string& path);
/// Every field, in the same format; parse_config(config_to_toml(c)) reproduces c.
std::string config_to_toml(const RunConfig& c);

Grid1D config_grid(const RunConfig& cfg);
ChartPtr config_chart(const RunConfig& cfg);
Field config_psi(const RunConfig& cfg);
AnsatzConfig config_ansatz(const RunConfig& cfg);
/// Initial data: ansatz seed at t_seed, perturbed model data at t = 1 with eps, or the model at t = 1.
WaveState config_initial_state(const RunConfig& cfg, double eps);
Field config_g0(const RunConfig& cfg);

} // namespace nlw
