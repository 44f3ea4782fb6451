#pragma once

#include "nlw/exponents.hpp"
#include "nlw/pde_solver.hpp"

#include <vector>

namespace nlw {

/// tau = (phi/c)^{-1/alpha} per slice. Throws on non-positive phi.
std::vector<Field> tau_field(const Exponents& e, const std::vector<WaveState>& states);

/// Geometry on a level set {tau = tau_slice}, sampled per grid column.
/// W = d_t tau, V = d_x tau (standard-chart derivatives, whatever chart the states use).
struct JacobianFields {
    double tau_slice = 0;
    double h = 0;   // column spacing
    Field t_level;  // chart time of the level set per column
    Field W, V, Omega2, U, Omega_ring2;
    Field W_t, W_tt, V_t, V_tt;  // time derivatives at fixed x; chain-rule route only
};

/// Chain-rule route: W = -tau phi_t/(alpha phi); level set and values by quintic Hermite in time,
/// with time derivatives from the equation.
JacobianFields jacobian_fields(const Exponents& e, const std::vector<WaveState>& states, double tau_slice);

/// Independent route from raw tau samples: level set by cubic Lagrange, d_t tau by 5-point
/// Fornberg weights across slices, d_y tau by 4th-order differences.
JacobianFields jacobian_fields_stencil(const Exponents& e, const std::vector<WaveState>& states, double tau_slice);

/// max |Omega2 - (W^2 - V^2)|, |U - V/W|, |Omega_ring2 - Omega2 + 1|
double jacobian_identity_error(const JacobianFields& j);

struct TransportResiduals {
    std::vector<double> tau;  // interior levels
    std::vector<double> r_U;  // L2 of tau d_tau U - W^{-2} tau d_z W
    std::vector<double> r_Omega;  // L2 of tau d_tau Or2 - 2 kappa Or2 - 2 tau d_z V
    double integrability = 0;  // d_z U^i - d_z U^j: vacuous in 1D
    double max_U() const;
    double max_Omega() const;
};

/// Needs >= 3 level sets ordered in tau; d_tau by 3-point weights, d_z by 4th-order differences.
TransportResiduals transport_residuals(const Exponents& e, const std::vector<JacobianFields>& levels);

struct TauResidual {
    std::vector<double> time;  // interior slices
    std::vector<double> l2;    // L2 of box tau - kappa tau^{-1}(1 - Omega^2)
    // L2 of R_tau + tau^{alpha+1}(box phi + phi^p)/(alpha c), the same stencils applied to phi;
    // zero in the continuum by the identity box phi + phi^p = -alpha c tau^{-alpha-1} R_tau
    std::vector<double> cross;
    double max_l2() const;
    double max_cross() const;
};

/// 3-point differences across consecutive slices, 4th-order in space.
TauResidual nlw_tau_residual(const Exponents& e, const std::vector<WaveState>& states);

} // namespace nlw
