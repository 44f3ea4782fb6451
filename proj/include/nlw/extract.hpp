#pragma once

#include "nlw/ansatz.hpp"
#include "nlw/gauge.hpp"
#include "nlw/pde_solver.hpp"

#include <optional>
#include <vector>

namespace nlw {

struct SurfaceFitOptions {
    double window_lo = 3;    // per-column window in tau: [lo, hi] * tau_min(x)
    double window_hi = 30;
    int degree = 3;
    int min_points = 6;
    double phi_fit = 1e4;    // required max phi over the run
    bool relaxed = false;    // rough fits: widen thin windows, tolerate long extrapolation
};

/// Blow-up surface t = slope * x + g(x) recovered from tau roots.
struct SurfaceFit {
    Grid1D grid;
    double slope = 0;
    Field g;
    Field f;             // slope * x + g on the grid
    Field root;          // per column: chart time of the tau root (0 when the chart is already adapted)
    Field tau_slope;     // d tau / d bold-t of the fit at the root
    Field tau_min;       // smallest sampled tau per column
    Field extrapolation; // distance from the root to the window over the window length
    double slope_consistency = 0;  // max |tau_slope - (1 - f'^2)^{-1/2}|
    bool degraded = false;  // some column fell back to a lower polynomial degree
    ChartPtr chart() const;
};

/// Per column, fits bold-t -> tau by a degree-`degree` polynomial on the window and takes its
/// zero. Throws BlowupNotReached if max phi < phi_fit, FitError when the extrapolation
/// distance exceeds the window length (strict mode).
SurfaceFit extract_surface(const Exponents& e, const std::vector<WaveState>& states, const SurfaceFitOptions& o = {});

/// Data on the slice {bold-t_B = s0} of `target` from states of another chart, per column by
/// quintic Hermite in time (phi, phi_t and phi_tt from the equation).
WaveState resample_to_chart(const Exponents& e, const std::vector<WaveState>& states, ChartPtr target, double s0);

struct ScatteringFitOptions {
    double window_lo = 0;  // bold-t window relative to the surface; 0: 3 and 30 times the smallest resolved bold-t
    double window_hi = 0;
    double N = 0;          // ansatz order for the rebuild; 0: N_max
    int iterations = 8;
    bool fit_shift = true;  // jointly fit a surface shift with basis -d_t phi_ans
    double misfit_tol = 0.1;  // post-fit residual over the fitted psi term
    double slope_limit = 0.5;
    int kmax = 0;  // Fourier cutoff for shift and psi updates; 0: floor(0.5 L / (2 pi window_hi))
};

struct ColumnFit {
    double window_lo = 0, window_hi = 0;
    int points = 0;
    double residual_before = 0;  // weighted rms of phi - ansatz before the last fit
    double residual_after = 0;
    double misfit = 0;           // max post-fit residual over sup|psi| t_hi^beta (floored)
    double decay_exponent = 0;   // measured exponent of the post-fit residual
};

struct FitReport {
    std::vector<ColumnFit> columns;
    std::vector<double> shift_history;  // sup |shift| per iteration
    std::vector<double> psi_history;    // sup |psi update| per iteration
    double log_discrepancy = 0;         // fitted minus rebuilt log coefficient (resonant case)
    double weight_power = 0;            // weights t^{-weight_power}
    double N = 0;
    int slices = 0;
    int kmax = 0;
    bool stopped_early = false;  // updates started to grow; the previous iterate was kept
};

struct ScatteringData {
    double slope = 0;
    Field g, f, psi;
    std::optional<Field> psi_log;
    FitReport report;
};

/// Self-consistent psi extraction on states covering the window: rebuild the ansatz from the
/// current (f, psi), subtract, and per column fit the remainder by weighted least squares
/// (weight t^{-beta}) against t^beta (and t^beta log t if resonant), optionally with a shift.
ScatteringData extract_scattering_pde(const Exponents& e, const std::vector<WaveState>& states,
                                      const SurfaceFit& surface, const ScatteringFitOptions& o = {});

struct StabilityReport {
    double f_l2 = 0, f_sup = 0, psi_l2 = 0, psi_sup = 0;
    double data_norm = 0;
    double ratio = 0;  // max(f_sup, psi_sup) / data_norm
};

/// Differences of two extractions on the same grid; data_norm is the input-data difference.
StabilityReport stability_difference(const ScatteringData& a, const ScatteringData& b, double h, double data_norm);

/// Input-data difference: sup of |phi_1 - phi_2| and |phi_t,1 - phi_t,2|.
double data_difference(const WaveState& a, const WaveState& b);

struct PipelineControls {
    double phi_stop = 1e4;
    double s0 = 0.1;           // adapted-chart stages start at bold-t = s0
    double psi_lo = 0.01;      // scattering window in bold-t
    double psi_hi = 0.08;
    int psi_samples = 60;
    double dt_frac_fine = 1e-3;  // above the window bottom
    double dt_frac_coarse = 0.05;
    double cfl = 0.4;
    int max_stages = 4;
    double stage_tol = 1e-9;   // stop once the surface moves less than this
    SurfaceFitOptions surface;
    ScatteringFitOptions scattering;

    /// the same pipeline for data whose lengths are multiplied by `lambda` (phi by lambda^{-alpha})
    PipelineControls rescaled(const Exponents& e, double lambda) const;
};

struct PipelineStage {
    SurfaceFit surface;
    double s0 = 0;
    long steps = 0;
    double shift = 0;  // sup |root|
};

struct PipelineResult {
    std::vector<PipelineStage> stages;
    ScatteringData scattering;
};

/// Backward run from `start` (any chart), then repeated runs in the chart adapted to the
/// current surface estimate; psi is fitted on the last stage.
PipelineResult extract_pipeline(const Exponents& e, const WaveState& start, const PipelineControls& c = {});

} // namespace nlw
