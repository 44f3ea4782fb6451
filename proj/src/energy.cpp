#include "nlw/energy.hpp"

#include "nlw/pde_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace nlw {

namespace {

struct RatioRange {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    int count = 0;
    void add(const Field& num, const Field& den, const Field& mask_ok) {
        const double floor = 1e-300 + 1e-14 * den.maxCoeff();
        for (Eigen::Index i = 0; i < num.size(); ++i) {
            if (mask_ok[i] == 0 || !(den[i] > floor)) continue;
            const double r = num[i] / den[i];
            lo = std::min(lo, r);
            hi = std::max(hi, r);
            ++count;
        }
    }
    std::pair<double, double> range() const { return count ? std::pair{lo, hi} : std::pair{0.0, 0.0}; }
};

// int_a^b t^m dt
double moment(double m, double a, double b) {
    if (std::fabs(m + 1) < 1e-12) return std::log(b / a);
    return (std::pow(b, m + 1) - std::pow(a, m + 1)) / (m + 1);
}

// int t^m G(t) dt over the slice range with G linear between slices: the weights vary over
// many orders of magnitude, so they are integrated exactly
struct PowerTerms {
    std::vector<double> powers;
    std::vector<double> t;
    std::vector<std::vector<double>> G;  // G[j][k]: coefficient of t^powers[j] at slice k
    explicit PowerTerms(std::vector<double> p) : powers(std::move(p)), G(powers.size()) {}
    void add(double tk, const std::vector<double>& g) {
        t.push_back(tk);
        for (size_t j = 0; j < powers.size(); ++j) G[j].push_back(g[j]);
    }
    double integral(size_t from = 0) const {
        double s = 0;
        for (size_t j = 0; j < powers.size(); ++j)
            for (size_t k = from + 1; k < t.size(); ++k) {
                const double a = t[k - 1], b = t[k], m = powers[j], H = b - a;
                const double I0 = moment(m, a, b), I1 = moment(m + 1, a, b);
                s += G[j][k - 1] * (b * I0 - I1) / H + G[j][k] * (I1 - a * I0) / H;
            }
        return s;
    }
};

double trapezoid(const std::vector<double>& x, const std::vector<double>& y) {
    double s = 0;
    for (size_t i = 1; i < x.size(); ++i) s += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
    return s;
}

} // namespace

std::vector<FieldSlice> remainder_slices(const Exponents& e, const std::vector<WaveState>& states, const Ansatz& a) {
    const auto S1 = series_dt(a.series);
    const auto S2 = series_dt(S1);
    std::vector<FieldSlice> out;
    for (const auto& s : states) {
        if (!s.chart) throw ConfigError("remainder_slices: state without chart");
        if (!(s.time > 0)) throw ConfigError("remainder_slices: slices must have bold-t > 0");
        FieldSlice f;
        f.time = s.time;
        f.Phi = s.phi - series_eval(a.series, s.time);
        f.Phi_t = s.phi_t - series_eval(S1, s.time);
        f.Phi_tt = box_rhs(e, s) - series_eval(S2, s.time);
        out.push_back(std::move(f));
    }
    return out;
}

EnergyReport backward_current_report(const Exponents& e, const Chart& chart, const std::vector<FieldSlice>& slices,
                                     double q) {
    if (slices.size() < 2) throw ConfigError("backward_current_report: need at least 2 slices");
    const double h = chart.grid.h();
    const int n = chart.grid.n;
    EnergyReport r;
    r.q = q;
    if (q < 4 * e.kappa) {
        std::ostringstream m;
        m << "q = " << q << " is below 4 kappa = " << 4 * e.kappa;
        r.warnings.push_back(m.str());
    }
    const Field w = chart.weight();
    const Field sw = w.sqrt();
    Field mask = (chart.fp.square() < 0.5).cast<double>();
    const double k2 = 0.5 * e.kappa * e.kappa;
    std::vector<size_t> ord(slices.size());
    std::iota(ord.begin(), ord.end(), 0);
    std::sort(ord.begin(), ord.end(), [&](size_t a, size_t b) { return slices[a].time < slices[b].time; });
    std::vector<double> E(slices.size());
    PowerTerms bulk({-2 * q - 1, -2 * q, -2 * q - 3, -2 * q - 2});
    RatioRange rr;
    for (size_t k : ord) {
        const auto& s = slices[k];
        if (s.Phi.size() != n || s.Phi_t.size() != n || s.Phi_tt.size() != n)
            throw ConfigError("backward_current_report: slice size does not match the chart");
        const double t = s.time;
        if (!(t > 0)) throw ConfigError("backward_current_report: slices must have bold-t > 0");
        const double wZ = std::pow(t, -2 * q);
        const double wQ = k2 * std::pow(t, -2 * q - 2);
        const Field Py = d1(s.Phi, h);
        const Field grad = w * s.Phi_t.square() + Py.square();
        const Field dens = 0.5 * wZ * grad + wQ * s.Phi.square();
        const Field box = -w * s.Phi_tt - chart.fpp * s.Phi_t - 2 * chart.fp * d1(s.Phi_t, h) + d2(s.Phi, h);
        // div J = -w_Z' grad/2 + w_Z Phi_t box Phi - w_Q' Phi^2 - 2 w_Q Phi Phi_t, split by power of t
        E[k] = integrate(dens, h);
        bulk.add(t, {q * integrate(grad, h), integrate(s.Phi_t * box, h),
                     k2 * (2 * q + 2) * integrate(s.Phi.square(), h), -2 * k2 * integrate(s.Phi * s.Phi_t, h)});
        const Field vtop = std::pow(t, -2 * q - 2) * (t * t * (s.Phi_t.square() + Py.square()) + s.Phi.square());
        rr.add(dens / sw, vtop, mask);
    }
    for (size_t k = 0; k < slices.size(); ++k) r.slice_energies.emplace_back(slices[k].time, E[k]);
    r.bulk_integral = bulk.integral();
    r.boundary_fluxes = E[ord.back()] - E[ord.front()];
    const double Emax = *std::max_element(E.begin(), E.end());
    r.divergence_residual = Emax > 0 ? std::fabs(r.boundary_fluxes + r.bulk_integral) / Emax : 0.0;
    r.coercivity_ratio_range = rr.range();
    r.coercivity_points = rr.count;
    for (double v : E)
        if (v < 0) r.warnings.push_back("negative slice energy");
    return r;
}

EnergyReport forward_current_report(const Exponents& e, const std::vector<JacobianFields>& levels, double q) {
    if (levels.size() < 3) throw ConfigError("forward_current_report: need at least 3 tau levels");
    if (!(q > 0)) throw ConfigError("forward_current_report: q must be positive");
    for (size_t i = 0; i < levels.size(); ++i) {
        const auto& L = levels[i];
        if (L.W_t.size() != L.W.size() || L.V_tt.size() != L.W.size())
            throw ConfigError("forward_current_report: levels need time derivatives (chain-rule route)");
        if (i > 0 && !(L.tau_slice > levels[i - 1].tau_slice))
            throw ConfigError("forward_current_report: levels must be strictly increasing in tau");
        if (L.W.size() != levels[0].W.size() || L.h != levels[0].h)
            throw ConfigError("forward_current_report: levels sampled on different columns");
    }
    const double h = levels.front().h;
    const double k2 = 0.5 * e.kappa * e.kappa;
    EnergyReport r;
    r.q = q;
    std::vector<double> taus, E;
    PowerTerms bulk({2 * q + 1, 2 * q + 2});
    RatioRange rr;
    for (const auto& L : levels) {
        const double tau = L.tau_slice;
        const double wZ = std::pow(tau, 2 * q + 2);
        const double wQ = k2 * wZ;
        const Field& U = L.U;
        // x-derivatives at fixed t from derivatives along the level set: F_x = D F + U F_t
        const Field DVt = d1(L.V_t, h);
        const Field W_xx = DVt + U * L.V_tt;
        const Field V_x = d1(L.V, h) + U * L.V_t;
        const Field V_xx = d1(V_x, h) + U * W_xx;
        struct Comp {
            Field Phi, Pt, Px, box;
        };
        const Comp comps[2] = {{L.W - 1, L.W_t, L.V_t, -L.W_tt + W_xx}, {L.V, L.V_t, V_x, -L.V_tt + V_xx}};
        // div J / W = tau^{2q+1} G1 + tau^{2q+2} G2
        Field dens = Field::Zero(L.W.size()), G1 = Field::Zero(L.W.size()), G2 = Field::Zero(L.W.size());
        const Field mask = (U.square() < 0.5).cast<double>();
        const Field jn = L.W / L.Omega2.sqrt();  // J.N per unit x-density
        for (const auto& c : comps) {
            const Field grad = c.Pt.square() + c.Px.square();
            const Field d = 0.5 * wZ * grad - U * wZ * c.Px * c.Pt + wQ * c.Phi.square();
            dens += d;
            G1 += (2 * q + 2) * (-0.5 * L.W * grad + L.V * c.Px * c.Pt - k2 * L.W * c.Phi.square());
            G2 += c.Pt * c.box - 2 * k2 * c.Phi * c.Pt;
            rr.add(d * jn, wZ * (grad + c.Phi.square()), mask);
        }
        taus.push_back(tau);
        E.push_back(integrate(dens, h));
        bulk.add(tau, {integrate(G1 / L.W, h), integrate(G2 / L.W, h)});
        r.slice_energies.emplace_back(tau, E.back());
    }
    r.bulk_integral = bulk.integral();
    r.boundary_fluxes = E.back() - E.front();
    const double Emax = *std::max_element(E.begin(), E.end());
    r.divergence_residual = Emax > 0 ? std::fabs(r.boundary_fluxes + r.bulk_integral) / Emax : 0.0;
    r.coercivity_ratio_range = rr.range();
    r.coercivity_points = rr.count;
    // weighted spacetime energy from each level up to the last, and the constant in
    // E_tau0 + q bulk <= C E_tau1
    std::vector<double> Et(E.size());
    for (size_t i = 0; i < E.size(); ++i) Et[i] = E[i] / taus[i];
    for (size_t i = 0; i < E.size(); ++i) {
        const double b = trapezoid(std::vector<double>(taus.begin() + i, taus.end()),
                                   std::vector<double>(Et.begin() + i, Et.end()));
        r.bulk_energy.push_back(b);
        r.constant_C.push_back(E.back() > 0 ? (E[i] + q * b) / E.back() : 0.0);
    }
    for (double v : E)
        if (v < 0) r.warnings.push_back("negative slice energy");
    return r;
}

} // namespace nlw
