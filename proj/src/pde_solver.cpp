#include "nlw/pde_solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace nlw {

namespace {

Field nonlinearity(const Exponents& e, const Field& phi) {
    // |phi|^{p-1} phi
    if (e.p == std::round(e.p) && e.p <= 16) {
        Field r = phi;
        for (int i = 1; i < static_cast<int>(std::round(e.p)); ++i) r *= phi.abs();
        return r;
    }
    return phi.abs().pow(e.p - 1) * phi;
}

} // namespace

Field box_rhs(const Exponents& e, const Chart& chart, const Field& phi, const Field& phi_t) {
    const double h = chart.grid.h();
    const Field nl = nonlinearity(e, phi);
    if (chart.is_standard()) return d2(phi, h) + nl;
    const Field w = chart.weight();
    if ((w <= 0).any()) throw ConfigError("box_rhs: chart is not spacelike (f'^2 >= 1)");
    return (-(chart.fpp * phi_t + 2 * chart.fp * d1(phi_t, h)) + d2(phi, h) + nl) / w;
}

Field box_rhs(const Exponents& e, const WaveState& s) { return box_rhs(e, *s.chart, s.phi, s.phi_t); }

Field box_rhs_dt(const Exponents& e, const Chart& chart, const Field& phi, const Field& phi_t, const Field& phi_tt) {
    const double h = chart.grid.h();
    const Field lin = d2(phi_t, h) + e.p * phi.abs().pow(e.p - 1) * phi_t;
    if (chart.is_standard()) return lin;
    return (lin - chart.fpp * phi_tt - 2 * chart.fp * d1(phi_tt, h)) / chart.weight();
}

double tau_estimate(const Exponents& e, const Field& phi) {
    const double m = phi.abs().maxCoeff();
    if (!(m > 0)) return INFINITY;
    return std::pow(m / e.c, -1 / e.alpha);
}

EvolveResult evolve(const Exponents& e, const WaveState& s0, double target, const EvolveControls& ctl) {
    if (!s0.chart) throw ConfigError("evolve: state has no chart");
    const Chart& ch = *s0.chart;
    if (s0.phi.size() != ch.grid.n || s0.phi_t.size() != ch.grid.n) throw ConfigError("evolve: field size mismatch");
    if (!(ctl.cfl > 0) || !(ctl.dt_frac > 0)) throw ConfigError("evolve: cfl and dt_frac must be positive");
    if (ch.max_slope() >= 1) throw ConfigError("evolve: chart is not spacelike");
    const double dir = target >= s0.time ? 1.0 : -1.0;
    const double dt_cfl = ctl.cfl * ch.grid.h() * (1 - ch.max_slope());

    std::vector<double> outs;
    for (double t : ctl.output_times)
        if ((t - s0.time) * dir > 0 && (target - t) * dir > 0) outs.push_back(t);
    std::sort(outs.begin(), outs.end(), [dir](double a, double b) { return dir > 0 ? a < b : a > b; });
    size_t next = 0;

    EvolveResult res;
    Field u = s0.phi, v = s0.phi_t;
    double t = s0.time;
    auto emit = [&](double time) { res.states.push_back(WaveState{s0.chart, time, u, v}); };
    auto rhs = [&](const Field& a, const Field& b, Field& da, Field& db) {
        da = b;
        db = box_rhs(e, ch, a, b);
    };
    Field k1u, k1v, k2u, k2v, k3u, k3v, k4u, k4v;
    while ((target - t) * dir > 1e-14 * std::max(1.0, std::fabs(t))) {
        if (++res.steps > ctl.max_steps) throw NumericalError("evolve: step budget exhausted");
        double dt = std::min(dt_cfl, ctl.dt_frac * tau_estimate(e, u));
        const double stop = next < outs.size() ? outs[next] : target;
        bool hit = false;
        if (dt >= (stop - t) * dir) {
            dt = (stop - t) * dir;
            hit = true;
        }
        const double sdt = dir * dt;
        rhs(u, v, k1u, k1v);
        rhs(u + 0.5 * sdt * k1u, v + 0.5 * sdt * k1v, k2u, k2v);
        rhs(u + 0.5 * sdt * k2u, v + 0.5 * sdt * k2v, k3u, k3v);
        rhs(u + sdt * k3u, v + sdt * k3v, k4u, k4v);
        Field un = u + sdt / 6 * (k1u + 2 * k2u + 2 * k3u + k4u);
        Field vn = v + sdt / 6 * (k1v + 2 * k2v + 2 * k3v + k4v);
        if (!un.allFinite() || !vn.allFinite()) {
            if (res.states.empty() || res.states.back().time != t) emit(t);
            throw NumericalError("evolve: non-finite values encountered");
        }
        if (un.abs().maxCoeff() > ctl.phi_max) {
            if (res.states.empty() || res.states.back().time != t) emit(t);
            res.status = EvolveStatus::BlowupReached;
            return res;
        }
        u = std::move(un);
        v = std::move(vn);
        t = hit ? stop : t + sdt;
        const bool is_out = hit && next < outs.size();
        if (is_out) ++next;
        if (is_out || ctl.record_steps) emit(t);
        if (ctl.phi_stop > 0 && u.maxCoeff() >= ctl.phi_stop) {
            if (res.states.empty() || res.states.back().time != t) emit(t);
            res.status = EvolveStatus::PhiStop;
            return res;
        }
    }
    if (res.states.empty() || res.states.back().time != t) emit(t);
    return res;
}

WaveState seed_from_ansatz(const Exponents& e, const Ansatz& a, ChartPtr chart, double t_seed, double tol) {
    if (!chart) throw ConfigError("seed_from_ansatz: no chart");
    if (!(t_seed > 0)) throw ConfigError("seed_from_ansatz: t_seed must be positive");
    WaveState s{chart, t_seed, series_eval(a.series, t_seed), series_eval(series_dt(a.series), t_seed)};
    const FuchsianSeries R = residual_series(a.series, *chart, a.residual_order + 4);
    const double rel = t_seed * t_seed * supnorm(series_eval(R, t_seed)) / supnorm(s.phi);
    if (rel > tol) {
        std::ostringstream m;
        m << "seed_from_ansatz: relative residual " << rel << " > " << tol << " at t_seed = " << t_seed;
        throw NumericalError(m.str());
    }
    (void)e;
    return s;
}

WaveState perturbed_model_data(const Exponents& e, double eps, const Field& g0, const Field& g1, const Grid1D& grid) {
    auto unit_or_zero = [&](const Field& g, const char* name) {
        if (g.size() != grid.n) throw ConfigError(std::string("perturbed_model_data: ") + name + " has wrong size");
        const double m = supnorm(g);
        if (m != 0 && std::fabs(m - 1) > 1e-12)
            throw ConfigError(std::string("perturbed_model_data: ") + name + " must have unit sup-norm");
    };
    unit_or_zero(g0, "g0");
    unit_or_zero(g1, "g1");
    auto ch = std::make_shared<const Chart>(Chart::standard(grid));
    return WaveState{ch, 1.0, e.c + eps * g0, -e.alpha * e.c + eps * g1};
}

} // namespace nlw
