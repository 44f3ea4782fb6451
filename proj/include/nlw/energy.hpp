#pragma once

#include "nlw/ansatz.hpp"
#include "nlw/gauge.hpp"

#include <string>
#include <utility>
#include <vector>

namespace nlw {

/// A field Phi on a chart slice with its first two bold-t derivatives at fixed y.
struct FieldSlice {
    double time = 0;
    Field Phi, Phi_t, Phi_tt;
};

struct EnergyReport {
    double q = 0;
    std::vector<std::pair<double, double>> slice_energies;  // (time or tau, E), in input order
    double bulk_integral = 0;     // integral of div J over the region between the first and last slice
    double boundary_fluxes = 0;   // E(last) - E(first)
    double divergence_residual = 0;  // |boundary_fluxes + bulk_integral| / max E (backward), see forward
    std::pair<double, double> coercivity_ratio_range{0, 0};
    int coercivity_points = 0;    // points entering the range
    std::vector<double> bulk_energy;   // forward: int_{tau_0}^{tau_last} E_tau dtau / tau per slice
    std::vector<double> constant_C;    // forward: (E_tau0 + q bulk) / E_tau_last per slice
    std::vector<std::string> warnings;
};

/// Phi = phi - ansatz on states of the ansatz chart (Phi_tt from the equation and the series).
std::vector<FieldSlice> remainder_slices(const Exponents& e, const std::vector<WaveState>& states, const Ansatz& a);

/// Current J = bold-t^{-2q} T[Phi](d_t, .) - (kappa^2/2) bold-t^{-2q-2} Phi^2 d_t on bold-t slices.
/// Slice energy E = -int J^bold-t dy >= 0; E(b) - E(a) = -int div J. The coercivity ratio is
/// J.N / (bold-t^{-2q-2} (bold-t^2 Phi_t^2 + bold-t^2 Phi_y^2 + Phi^2)) over points with f'^2 < 1/2.
/// q < 4 kappa only adds a warning. Needs >= 2 slices at bold-t > 0.
EnergyReport backward_current_report(const Exponents& e, const Chart& chart, const std::vector<FieldSlice>& slices,
                                     double q);

/// Forward current on tau level sets, summed over Phi = W - 1 and Phi = V:
/// J = tau^{2q+2} (T[Phi](d_t, .) - (kappa^2/2) Phi^2 d_t), E_tau = -int W^{-1} J^tau dx.
/// Levels must come from the chain-rule route (time derivatives present), ordered in tau.
/// q <= 0 or fewer than 3 levels: ConfigError.
EnergyReport forward_current_report(const Exponents& e, const std::vector<JacobianFields>& levels, double q);

} // namespace nlw
