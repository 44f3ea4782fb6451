#include "nlw/ansatz.hpp"

#include <cmath>
#include <sstream>

namespace nlw {

FuchsianSeries leading_profile(const AnsatzConfig& cfg) {
    const Chart& ch = cfg.chart;
    if ((ch.fp.square() >= 1).any()) throw ConfigError("leading_profile: |f'| >= 1 (non-spacelike surface)");
    Field w = ch.weight();
    Field a(w.size());
    for (int i = 0; i < w.size(); ++i) a[i] = cfg.e.c * rpow(w[i], 1 / (cfg.e.p - 1));
    return monomial(cfg.e, -cfg.e.alpha, a);
}

FuchsianSeries apply_box(const FuchsianSeries& s, const Chart& chart) {
    // □ = -(1-f'^2) d_t^2 - (f'' + 2 f' d_y) d_t + d_y^2
    const double h = chart.grid.h();
    FuchsianSeries st = series_dt(s);
    FuchsianSeries stt = series_dt(st);
    FuchsianSeries r = series_scale(stt, Field(-chart.weight()));
    r = series_sub(r, series_scale(st, chart.fpp));
    FuchsianSeries sty = series_map_coeff(st, [&](const Field& c) { return d1(c, h); });
    r = series_sub(r, series_scale(sty, Field(2.0 * chart.fp)));
    r = series_add(r, series_map_coeff(s, [&](const Field& c) { return d2(c, h); }));
    return r;
}

FuchsianSeries residual_series(const FuchsianSeries& phi, const Chart& chart, double order) {
    FuchsianSeries box = series_truncate(apply_box(phi, chart), order);
    FuchsianSeries pw = series_pow(phi, phi.base.p, order);
    FuchsianSeries r = series_truncate(series_add(box, pw), order);
    // Levels that cancel exactly in exact arithmetic leave roundoff behind; at small t those
    // terms (negative exponents) would dominate. Drop entries at roundoff relative to the
    // magnitudes of the two pieces.
    auto mag = [](const FuchsianSeries& s, double e, int m) -> Field {
        for (const auto& t : s.terms)
            if (std::fabs(t.exponent - e) < kMergeTol && t.log_power == m) return t.coeff.abs();
        return Field::Zero(s.width);
    };
    constexpr double rel = 1e-12;
    for (auto& t : r.terms) {
        Field scale = mag(box, t.exponent, t.log_power) + mag(pw, t.exponent, t.log_power);
        t.coeff = (t.coeff.abs() <= rel * scale).select(0.0, t.coeff);
    }
    r.normalize();
    return r;
}

Ansatz build_ansatz(const AnsatzConfig& cfg) {
    const Exponents& e = cfg.e;
    const double Nmax = cfg.N_max > 0 ? cfg.N_max : 2 * e.beta + 4;
    if (!(cfg.N > e.beta)) throw ConfigError("build_ansatz: need N > beta");
    if (cfg.N > Nmax + 1e-12) throw ConfigError("build_ansatz: N exceeds N_max");
    if (cfg.psi.size() != cfg.chart.grid.n) throw ConfigError("build_ansatz: psi size does not match grid");
    if (cfg.chart.max_slope() >= cfg.slope_limit)
        throw ConfigError("build_ansatz: |f'| must stay below " + std::to_string(cfg.slope_limit));

    Ansatz out;
    out.residual_order = cfg.N - e.alpha - 2;
    const double Etarget = out.residual_order;
    const Field w = cfg.chart.weight();

    FuchsianSeries phi = leading_profile(cfg);
    phi = series_add(phi, monomial(e, e.beta, cfg.psi));

    double cursor = -std::numeric_limits<double>::infinity();
    for (int guard = 0; guard < 500; ++guard) {
        FuchsianSeries R = residual_series(phi, cfg.chart, Etarget);
        // next uncancelled level strictly above the cursor and below the target
        double elev = std::numeric_limits<double>::infinity();
        for (const auto& t : R.terms) {
            if (t.exponent > cursor + kMergeTol && t.exponent < Etarget - kMergeTol) {
                elev = t.exponent;
                break;
            }
        }
        if (!std::isfinite(elev)) break;
        int M = 0;
        for (const auto& t : R.terms)
            if (std::fabs(t.exponent - elev) < kMergeTol) M = std::max(M, t.log_power);
        std::vector<Field> r(M + 1, Field::Zero(cfg.chart.grid.n));
        for (const auto& t : R.terms)
            if (std::fabs(t.exponent - elev) < kMergeTol) r[t.log_power] = t.coeff / w;
        cursor = elev;

        const double q = elev + 2;
        const bool at_beta = std::fabs(q - e.beta) < kMergeTol;
        if (at_beta && !e.resonant) {
            // only roundoff can land here
            double mx = 0;
            for (auto& f : r) mx = std::max(mx, f.abs().maxCoeff());
            out.skipped.push_back({q, 0, mx});
            continue;
        }
        const double D = q * (q - 1) - e.gamma;
        if (!at_beta && std::fabs(D) < kNearResonantTol) {
            double mx = 0;
            for (auto& f : r) mx = std::max(mx, f.abs().maxCoeff());
            std::ostringstream os;
            os << "NearResonant exponent " << q << " skipped (|D| = " << std::fabs(D) << ")";
            out.diag.warn(os.str());
            out.skipped.push_back({q, M, mx});
            continue;
        }
        // P0 g = -R  <=>  (d^2 - gamma t^-2) g = R / w
        auto g = invert_P0_level(elev, r, e, &out.diag);
        for (const auto& t : g) phi.terms.push_back(t);
        phi.normalize();
    }
    phi.validate();
    out.series = phi;
    return out;
}

std::vector<double> logspace(double a, double b, int n) {
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = std::exp(std::log(a) + (std::log(b) - std::log(a)) * i / (n - 1));
    return v;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(x.size());
    for (size_t i = 0; i < x.size(); ++i) {
        double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

SlopeReport ansatz_residual_slope(const AnsatzConfig& cfg, const Ansatz& a, const std::vector<double>& ts) {
    SlopeReport rep;
    rep.floor = cfg.N - 2.5;
    if (ts.size() < 2 || ts.back() / ts.front() < 1e3 * (1 - 1e-9))
        throw ConfigError("ansatz_residual_slope: samples must span the decade markers 1e-4..1e-1 (ratio >= 1e3)");
    FuchsianSeries R = residual_series(a.series, cfg.chart, a.residual_order + 4);
    double cmax = 0, scale = 0;
    for (const auto& t : R.terms) cmax = std::max(cmax, t.coeff.abs().maxCoeff());
    for (const auto& t : a.series.terms) scale = std::max(scale, t.coeff.abs().maxCoeff());
    if (cmax < 1e-13 * std::max(scale, 1.0)) {
        rep.exact = true;
        return rep;
    }
    const double h = cfg.chart.grid.h();
    for (double t : ts) {
        rep.t.push_back(t);
        rep.norm.push_back(l2norm(series_eval(R, t), h));
    }
    rep.slope = loglog_slope(rep.t, rep.norm);
    rep.excess = rep.slope - rep.floor;
    return rep;
}

SlopeReport asymptotic_residual_slope(const AnsatzConfig& cfg, const Ansatz& a, double tol) {
    SlopeReport prev = ansatz_residual_slope(cfg, a, logspace(1e-4, 1e-1, 13));
    if (prev.exact) return prev;
    for (int hi = -2; hi >= -30; --hi) {
        SlopeReport cur = ansatz_residual_slope(cfg, a, logspace(std::pow(10.0, hi - 3), std::pow(10.0, hi), 13));
        if (std::fabs(cur.slope - prev.slope) < tol) return cur;
        prev = cur;
    }
    throw NumericalError("asymptotic_residual_slope: slope did not settle above t = 1e-33");
}

} // namespace nlw
