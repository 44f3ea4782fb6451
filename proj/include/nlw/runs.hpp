#pragma once

#include "nlw/config.hpp"
#include "nlw/energy.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace nlw {

using json = nlohmann::ordered_json;

/// Shortest round-trip decimal form of a double.
std::string num(double v);

json to_json(const Exponents& e);
json to_json(const RunConfig& c);
json to_json(const SurfaceFit& s);
json to_json(const ScatteringData& s);
json to_json(const EnergyReport& r);
json to_json(const FuchsianSeries& s);

/// Run directory: one CSV per slice (y, phi, phi_t) and manifest.json (chart, times, config, extra).
void write_states(const std::string& dir, const std::vector<WaveState>& states, const RunConfig& cfg,
                  const json& extra = json::object());
/// Reads a run directory back; all slices share one chart.
std::vector<WaveState> read_states(const std::string& dir, json* manifest = nullptr);
/// The config stored with a run directory.
RunConfig run_config(const std::string& dir);

void write_text(const std::string& path, const std::string& text);

/// ODE trajectory as CSV with quad-precision values (t, phi, phi_t), p in the header.
void write_trajectory(const std::string& path, const Exponents& e, const Trajectory& tr);
Trajectory read_trajectory(const std::string& path, double* p = nullptr);

/// Evolution per the config: ansatz data forward to t_end, perturbed or model data toward blow-up.
std::vector<WaveState> run_pde_evolve(const RunConfig& cfg);

struct ConstructionReport {
    PipelineResult result;
    Field f_in, psi_in;
    double f_error = 0;    // sup |f_out - f_in|
    double psi_error = 0;  // sup |psi_out - psi_in| / sup |psi_in| (absolute when psi_in = 0)
    long forward_steps = 0;
    json summary;
};

/// Ansatz seed -> forward evolution -> resampling onto the standard chart -> extraction.
/// Writes manifest.json, run.toml, scattering.json and profiles.csv when cfg.output is set.
ConstructionReport run_scattering_construction(const RunConfig& cfg);

struct SweepEntry {
    double eps = 0;
    ScatteringData data;
    WaveState initial;
};

struct SweepReport {
    std::vector<SweepEntry> runs;
    std::vector<StabilityReport> pairs;  // consecutive entries of eps_list
    json summary;
};

/// Perturbed model data for every eps, extraction, norms against eps and pairwise stability
/// ratios. Runs are independent and spread over `jobs` worker threads.
SweepReport run_stability_experiment(const RunConfig& cfg, int jobs = 1);

/// Energy report on a run directory: backward uses Phi = phi - ansatz (the run must be in an
/// ansatz chart); forward uses tau levels [tau_lo, tau_hi] from the config.
json run_energy_report(const std::string& dir, const std::string& mode, double q);

/// Gnuplot-ready TSV files from whatever artifacts the directory holds; returns the file names.
std::vector<std::string> emit_plots(const std::string& dir);

} // namespace nlw
