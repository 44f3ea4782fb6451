#pragma once

#include "nlw/ansatz.hpp"
#include "nlw/chart.hpp"
#include "nlw/errors.hpp"
#include "nlw/exponents.hpp"

#include <vector>

namespace nlw {

/// Cauchy data on a slice {bold-t = time} of a chart.
struct WaveState {
    ChartPtr chart;
    double time = 0;
    Field phi;
    Field phi_t;
};

/// d^2 phi / d bold-t^2 from the equation in the state's chart.
Field box_rhs(const Exponents& e, const Chart& chart, const Field& phi, const Field& phi_t);
Field box_rhs(const Exponents& e, const WaveState& s);

/// d^3 phi / d bold-t^3: the time derivative of box_rhs along a solution.
Field box_rhs_dt(const Exponents& e, const Chart& chart, const Field& phi, const Field& phi_t, const Field& phi_tt);

struct EvolveControls {
    double cfl = 0.4;      // dt <= cfl * h * (1 - max|f'|)
    double dt_frac = 0.05; // dt <= dt_frac * tau_est, tau_est = (max phi / c)^{-1/alpha}
    double phi_max = 1e8;  // blow-up cap
    double phi_stop = 0;   // > 0: stop cleanly once max phi reaches this
    std::vector<double> output_times;
    bool record_steps = false;  // also emit every accepted step
    long max_steps = 10'000'000;
};

enum class EvolveStatus { Completed, PhiStop, BlowupReached };

struct EvolveResult {
    EvolveStatus status = EvolveStatus::Completed;
    std::vector<WaveState> states;  // outputs in order of travel, always ending with the last valid slice
    long steps = 0;
};

/// Classical RK4 in time. Direction follows the sign of target - state.time.
EvolveResult evolve(const Exponents& e, const WaveState& s, double target, const EvolveControls& c = {});

/// Upper bound on the distance to the singularity from the size of phi.
double tau_estimate(const Exponents& e, const Field& phi);

/// Evaluates an ansatz (and its bold-t derivative) at bold-t = t_seed. Throws if the relative
/// residual t^2 |P[phi]| / |phi| exceeds tol there.
WaveState seed_from_ansatz(const Exponents& e, const Ansatz& a, ChartPtr chart, double t_seed, double tol = 1e-4);

/// Standard chart, t = 1: phi = c + eps g0, phi_t = -alpha c + eps g1 (g0, g1 unit sup-norm or zero).
WaveState perturbed_model_data(const Exponents& e, double eps, const Field& g0, const Field& g1, const Grid1D& grid);

} // namespace nlw
