#pragma once

#include "nlw/errors.hpp"
#include "nlw/exponents.hpp"

#include <boost/multiprecision/float128.hpp>
#include <vector>

namespace nlw {

using qreal = boost::multiprecision::float128;

/// Homogeneous ODE state: phi'' = phi^p.
struct OdeState {
    qreal t = 0;
    qreal phi = 0;
    qreal phi_t = 0;
};

using Trajectory = std::vector<OdeState>;

struct OdeControls {
    double rtol = 1e-10;  // global target; steps run at rtol/100
    double atol = 0;
    double tau_min = 1e-5;        // stop once tau drops below this
    int samples_per_decade = 20;  // thinning of stored steps, in tau
    std::vector<double> output_times;  // hit exactly when inside the integration range
    long max_steps = 50'000'000;
};

struct OdeScattering {
    double t0 = 0;
    double psi = 0;
    double psi_hat = 0;
    double relstd = 0;  // spread of Omega^2 tau^{-2 kappa} over the fit window
    int n_used = 0;
};

struct ExtractOptions {
    double tau_fit_max = 1e-2;
    double tau_fit_min = 0;  // 0: smallest sampled tau
    double spread_tol = 1e-2;
    double psi_hat_floor = 1e-6;  // spread is measured relative to max(|mean|, floor)
};

struct TauSample {
    double tau = 0;
    double dt_dtau = 0;
    double omega2 = 0;  // Omega-ring squared, evaluated in quad precision
};

/// Coefficients b_m of phi = c t^{-alpha} sum_m b_m (psi t^{2 kappa})^m, b_0 = 1, b_1 = 1/c.
std::vector<qreal> fuchsian_ode_coeffs(const Exponents& e, int terms);

/// Seed from the homogeneous Fuchsian series centred at t0. terms <= 0: until converged.
OdeState ode_seed(const Exponents& e, double psi, double t0, double t, int terms = 0);

/// Adaptive RKF78 in quad precision from `s` to t_target. Returns the initial state, thinned
/// intermediate states, the requested output times and the final state, in time order of travel.
Trajectory ode_integrate(const Exponents& e, const OdeState& s, double t_target, const OdeControls& c = {});

qreal ode_energy(const Exponents& e, const OdeState& s);
qreal tau_of(const Exponents& e, const OdeState& s);
qreal dtau_dt(const Exponents& e, const OdeState& s);

std::vector<TauSample> tau_gauge(const Exponents& e, const Trajectory& tr);

/// Checks that Omega-ring^2 keeps one sign for tau <= tau_max; returns false if violated.
bool omega_sign_constant(const std::vector<TauSample>& g, double tau_max = 1e-2);

OdeScattering extract_scattering(const Exponents& e, const Trajectory& tr, const ExtractOptions& o = {});

Trajectory rescale_trajectory(const Exponents& e, const Trajectory& tr, double delta);

/// Exact relations between psi, psi_hat and the conserved energy.
double psi_hat_from_psi(const Exponents& e, double psi);
double psi_from_psi_hat(const Exponents& e, double psi_hat);

/// Adaptive Simpson on [a, b].
template <class F> double adaptive_simpson(F&& f, double a, double b, double tol, int depth = 50);

} // namespace nlw

#include "nlw/detail/simpson.hpp"
