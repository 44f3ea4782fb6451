#include "doctest.h"

#include "nlw/expr.hpp"
#include "nlw/extract.hpp"

#include <cmath>

using namespace nlw;

namespace {

// exact boosted model A (T + bold-t + g)^{-alpha} in the chart f = v y + g
WaveState boosted(const Exponents& e, ChartPtr ch, double T, double t) {
    const double v = ch->slope;
    const double A = e.c * std::pow(1 - v * v, 1 / (e.p - 1));
    return WaveState{ch, t, A * (T + t + ch->g).pow(-e.alpha), -e.alpha * A * (T + t + ch->g).pow(-e.alpha - 1)};
}

std::vector<WaveState> backward(const Exponents& e, const WaveState& s, double phi_stop) {
    EvolveControls c;
    c.record_steps = true;
    c.phi_stop = phi_stop;
    auto r = evolve(e, s, s.time - 100, c);
    std::vector<WaveState> out{s};
    out.insert(out.end(), r.states.begin(), r.states.end());
    return out;
}

// slices of an ansatz evaluated exactly, log-spaced in bold-t
std::vector<WaveState> ansatz_slices(const AnsatzConfig& cfg, double lo, double hi, int k) {
    auto a = build_ansatz(cfg);
    auto ch = std::make_shared<const Chart>(cfg.chart);
    auto dS = series_dt(a.series);
    std::vector<WaveState> st;
    for (double t : logspace(lo, hi, k)) st.push_back(WaveState{ch, t, series_eval(a.series, t), series_eval(dS, t)});
    return st;
}

SurfaceFit known_surface(const Chart& ch) {
    SurfaceFit s;
    s.grid = ch.grid;
    s.slope = ch.slope;
    s.g = ch.g;
    s.f = ch.f_values();
    return s;
}

} // namespace

TEST_CASE("surface of the model and the boosted model") {
    auto e = derive_exponents(3);
    Grid1D g(2 * M_PI, 32);
    auto st = std::make_shared<const Chart>(Chart::standard(g));
    auto run = backward(e, boosted(e, st, 0.0, 1.0), 1e4);
    auto s = extract_surface(e, run);
    CHECK(supnorm(s.f) < 1e-6);
    CHECK(s.slope_consistency < 1e-4);

    // f = 0.5 + 0.3 x: chart slope 0.3, phase T + bold-t with T = -0.5
    auto tilt = std::make_shared<const Chart>(Chart::tilted(g, Field::Zero(32), 0.3));
    auto rb = backward(e, boosted(e, tilt, -0.5, 1.0), 1e4);
    auto sb = extract_surface(e, rb);
    CHECK(sb.slope == 0.3);
    CHECK((sb.g - 0.5).abs().maxCoeff() < 1e-6);
    CHECK((sb.f - (0.5 + 0.3 * g.x())).abs().maxCoeff() < 1e-6);
    CHECK(sb.slope_consistency < 1e-4);
    CHECK(sb.extrapolation.maxCoeff() < 1);
}

TEST_CASE("surface fit errors") {
    auto e = derive_exponents(3);
    Grid1D g(2 * M_PI, 16);
    auto st = std::make_shared<const Chart>(Chart::standard(g));
    auto run = backward(e, boosted(e, st, 0.0, 1.0), 1e2);
    CHECK_THROWS_AS(extract_surface(e, run), BlowupNotReached);
    SurfaceFitOptions o;
    o.phi_fit = 10;
    o.window_lo = 20;  // window far from the root
    o.window_hi = 25;
    CHECK_THROWS_AS(extract_surface(e, run, o), FitError);
    o.min_points = 1;
    CHECK_THROWS_AS(extract_surface(e, run, o), ConfigError);
}

TEST_CASE("resampling between charts") {
    auto e = derive_exponents(4);
    Grid1D g(2 * M_PI, 64);
    auto a = std::make_shared<const Chart>(Chart::tilted(g, 0.05 * g.x().sin(), 0.2));
    auto b = std::make_shared<const Chart>(Chart::tilted(g, 0.03 * g.x().cos(), 0.2));
    std::vector<WaveState> src;
    for (int k = 0; k <= 40; ++k) src.push_back(boosted(e, a, 0.2, 0.3 + 0.01 * k));
    auto r = resample_to_chart(e, src, b, 0.45);
    auto exact = boosted(e, b, 0.2, 0.45);
    CHECK(supnorm(r.phi - exact.phi) / supnorm(exact.phi) < 1e-11);
    CHECK(supnorm(r.phi_t - exact.phi_t) / supnorm(exact.phi_t) < 1e-9);
    CHECK(r.chart == b);
    CHECK_THROWS_AS(resample_to_chart(e, src, b, 0.9), NumericalError);
}

TEST_CASE("scattering fit on exact ansatz data") {
    for (double p : {4.0, 3.0}) {
        auto e = derive_exponents(p);
        Grid1D g(2 * M_PI, 64);
        AnsatzConfig cfg;
        cfg.e = e;
        cfg.chart = Chart::tilted(g, eval_profile("0.05*sin(x)", g));
        cfg.psi = eval_profile("0.1*cos(x)", g);
        cfg.N = 8;
        auto st = ansatz_slices(cfg, 0.01, 0.08, 40);
        ScatteringFitOptions o;
        o.window_lo = 0.01;
        o.window_hi = 0.08;
        o.N = 8;
        auto sd = extract_scattering_pde(e, st, known_surface(cfg.chart), o);
        CHECK(supnorm(sd.psi - cfg.psi) < 1e-6);
        CHECK(supnorm(sd.f - cfg.chart.g) < 1e-10);
        CHECK(sd.psi_log.has_value() == e.resonant);
        if (e.resonant) CHECK(sd.report.log_discrepancy < 1e-6);

        // same data labelled with a chart shifted by a constant: psi unchanged
        const double C = 0.013;
        auto shifted = std::make_shared<const Chart>(Chart::tilted(g, cfg.chart.g + C));
        std::vector<WaveState> st2;
        for (auto s : st) {
            s.chart = shifted;
            s.time -= C;
            st2.push_back(s);
        }
        auto sd2 = extract_scattering_pde(e, st2, known_surface(cfg.chart), o);
        CHECK(supnorm(sd2.psi - sd.psi) < 1e-7);
    }
}

TEST_CASE("model run gives zero scattering data") {
    auto e = derive_exponents(4);
    Grid1D g(2 * M_PI, 32);
    auto st = std::make_shared<const Chart>(Chart::standard(g));
    PipelineControls pc;
    pc.s0 = 0.5;
    pc.psi_lo = 0.02;
    pc.psi_hi = 0.2;
    auto r = extract_pipeline(e, boosted(e, st, 0.0, 1.0), pc);
    CHECK(supnorm(r.scattering.f) < 1e-6);
    CHECK(supnorm(r.scattering.psi) < 1e-6);
}

TEST_CASE("pipeline round trip from an ansatz seed") {
    auto e = derive_exponents(4);
    Grid1D g(2 * M_PI, 64);
    AnsatzConfig cfg;
    cfg.e = e;
    cfg.chart = Chart::tilted(g, eval_profile("0.05*sin(x)", g));
    cfg.psi = eval_profile("0.1*cos(x)", g);
    cfg.N = 8;
    auto a = build_ansatz(cfg);
    auto ch = std::make_shared<const Chart>(cfg.chart);
    EvolveControls ec;
    ec.dt_frac = 1e-3;
    ec.record_steps = true;
    auto seed = seed_from_ansatz(e, a, ch, 1e-3);
    auto fw = evolve(e, seed, 0.23, ec);
    std::vector<WaveState> hist{seed};
    hist.insert(hist.end(), fw.states.begin(), fw.states.end());
    auto start = resample_to_chart(e, hist, std::make_shared<const Chart>(Chart::standard(g)), 0.17);
    PipelineControls pc;
    pc.s0 = 0.12;
    auto r = extract_pipeline(e, start, pc);
    REQUIRE(r.stages.size() >= 2);
    CHECK(r.stages[0].shift > 0.04);  // the standard chart is far from adapted
    CHECK(r.stages.back().shift < 1e-6);
    const double ferr = supnorm(r.scattering.f - cfg.chart.g);
    const double perr = supnorm(r.scattering.psi - cfg.psi) / supnorm(cfg.psi);
    MESSAGE("round trip: f error " << ferr << ", psi relative error " << perr);
    CHECK(ferr < 1e-4);
    CHECK(perr < 0.02);
}

TEST_CASE("stability difference and rescaled controls") {
    ScatteringData a, b;
    a.f = Field::Constant(8, 0.1);
    a.psi = Field::Constant(8, 0.2);
    b = a;
    auto r0 = stability_difference(a, b, 0.1, 1e-3);
    CHECK(r0.f_sup == 0.0);
    CHECK(r0.ratio == 0.0);
    b.f += 1e-3;
    auto r1 = stability_difference(a, b, 0.1, 1e-3);
    CHECK(r1.ratio == doctest::Approx(1.0));
    b.f = Field::Zero(4);
    CHECK_THROWS_AS(stability_difference(a, b, 0.1, 1e-3), ConfigError);

    auto e = derive_exponents(3);
    PipelineControls c;
    auto s = c.rescaled(e, 2.0);
    CHECK(s.s0 == doctest::Approx(2 * c.s0));
    CHECK(s.psi_hi == doctest::Approx(2 * c.psi_hi));
    CHECK(s.phi_stop == doctest::Approx(c.phi_stop / 2));
    CHECK_THROWS_AS(c.rescaled(e, 0.0), ConfigError);
}
