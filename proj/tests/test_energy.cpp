#include "doctest.h"

#include "nlw/energy.hpp"
#include "nlw/expr.hpp"

#include <cmath>

using namespace nlw;

namespace {

std::vector<double> linspace(double a, double b, int k) {
    std::vector<double> r(k);
    for (int i = 0; i < k; ++i) r[i] = a + (b - a) * i / (k - 1);
    return r;
}

// Phi = t^2 cos y + t^3 + 0.3 t sin 2y
std::vector<FieldSlice> test_field(const Grid1D& g, const std::vector<double>& ts) {
    const Field x = g.x();
    std::vector<FieldSlice> out;
    for (double t : ts) {
        FieldSlice s;
        s.time = t;
        s.Phi = t * t * x.cos() + t * t * t + 0.3 * t * (2 * x).sin();
        s.Phi_t = 2 * t * x.cos() + 3 * t * t + 0.3 * (2 * x).sin();
        s.Phi_tt = 2 * x.cos() + 6 * t;
        out.push_back(s);
    }
    return out;
}

std::vector<JacobianFields> boosted_levels(const Exponents& e, double v, const std::vector<double>& taus) {
    Grid1D grid(2 * M_PI, 32);
    Field g = 0.05 * grid.x().sin();
    auto ch = std::make_shared<const Chart>(Chart::tilted(grid, g, v));
    const double A = e.c * std::pow(1 - v * v, 1 / (e.p - 1));
    std::vector<WaveState> s;
    for (double t : linspace(-0.9, 0.5, 15))
        s.push_back(WaveState{ch, t, A * (1 + t + g).pow(-e.alpha), -e.alpha * A * (1 + t + g).pow(-e.alpha - 1)});
    std::vector<JacobianFields> out;
    for (double tau : taus) out.push_back(jacobian_fields(e, s, tau));
    return out;
}

} // namespace

TEST_CASE("backward current closed forms") {
    auto e = derive_exponents(3);
    Grid1D g(2 * M_PI, 32);
    auto ch = Chart::standard(g);
    std::vector<FieldSlice> zero, lin;
    for (double t : {0.1, 0.2, 0.3}) {
        zero.push_back(FieldSlice{t, Field::Zero(32), Field::Zero(32), Field::Zero(32)});
        lin.push_back(FieldSlice{t, Field::Constant(32, t), Field::Ones(32), Field::Zero(32)});
    }
    const double q = 4 * e.kappa;
    auto r0 = backward_current_report(e, ch, zero, q);
    for (auto& [t, E] : r0.slice_energies) CHECK(E == 0.0);
    CHECK(r0.bulk_integral == 0.0);
    CHECK(r0.divergence_residual == 0.0);
    CHECK(r0.warnings.empty());

    // Phi = bold-t: E = L (1 + kappa^2) t^{-2q} / 2, J.N ratio (1 + kappa^2) / 4
    auto r1 = backward_current_report(e, ch, lin, q);
    for (auto& [t, E] : r1.slice_energies) {
        const double exact = 2 * M_PI * 0.5 * (1 + e.kappa * e.kappa) * std::pow(t, -2 * q);
        CHECK(std::fabs(E / exact - 1) < 1e-8);
    }
    CHECK(r1.coercivity_ratio_range.first == doctest::Approx((1 + e.kappa * e.kappa) / 4));
    CHECK(r1.coercivity_ratio_range.second == doctest::Approx((1 + e.kappa * e.kappa) / 4));

    auto r2 = backward_current_report(e, ch, lin, 1.0);
    CHECK(r2.warnings.size() == 1);
    CHECK_THROWS_AS(backward_current_report(e, ch, {lin[0]}, q), ConfigError);
    auto bad = lin;
    bad[0].time = 0;
    CHECK_THROWS_AS(backward_current_report(e, ch, bad, q), ConfigError);
}

TEST_CASE("backward current divergence theorem and coercivity") {
    for (double p : {3.0, 4.0}) {
        auto e = derive_exponents(p);
        Grid1D g(2 * M_PI, 64);
        auto ch = Chart::tilted(g, 0.1 * g.x().sin(), 0.3);
        std::vector<double> res;
        for (int k : {6, 11, 21}) {
            auto r = backward_current_report(e, ch, test_field(g, linspace(0.2, 0.5, k)), 4 * e.kappa);
            res.push_back(r.divergence_residual);
            // the pointwise ratio lies between the extreme values of the three weights
            const Field sw = ch.weight().sqrt();
            const double lo = std::min({0.5 * sw.minCoeff(), 0.5 / sw.maxCoeff(), 0.5 * e.kappa * e.kappa / sw.maxCoeff()});
            const double hi = std::max({0.5 * sw.maxCoeff(), 0.5 / sw.minCoeff(), 0.5 * e.kappa * e.kappa / sw.minCoeff()});
            CHECK(r.coercivity_ratio_range.first >= lo * (1 - 1e-12));
            CHECK(r.coercivity_ratio_range.second <= hi * (1 + 1e-12));
            CHECK(r.coercivity_ratio_range.first >= 0.25);
            CHECK(r.coercivity_ratio_range.second <= 4.0);
            CHECK(r.coercivity_points == 64 * k);
        }
        MESSAGE("backward divergence residual p=" << p << ": " << res[0] << " " << res[1] << " " << res[2]);
        CHECK(std::log2(res[1] / res[2]) > 1.8);
    }
}

TEST_CASE("backward current on an ansatz remainder") {
    auto e = derive_exponents(4);
    Grid1D g(2 * M_PI, 64);
    AnsatzConfig cfg;
    cfg.e = e;
    cfg.chart = Chart::tilted(g, eval_profile("0.05*sin(x)", g));
    cfg.psi = eval_profile("0.1*cos(x)", g);
    auto ch = std::make_shared<const Chart>(cfg.chart);
    auto seed = seed_from_ansatz(e, build_ansatz(cfg), ch, 1e-3);
    EvolveControls ec;
    ec.dt_frac = 1e-3;
    ec.output_times = linspace(0.02, 0.1, 33);
    auto run = evolve(e, seed, 0.1, ec).states;
    REQUIRE(run.size() == 33);
    cfg.N = 3;  // low order: the remainder is well above the solver error
    auto low = build_ansatz(cfg);
    std::vector<double> res;
    for (int stride : {4, 2, 1}) {
        std::vector<WaveState> sub;
        for (size_t i = 0; i < run.size(); i += stride) sub.push_back(run[i]);
        auto r = backward_current_report(e, cfg.chart, remainder_slices(e, sub, low), 4 * e.kappa);
        res.push_back(r.divergence_residual);
        CHECK(r.coercivity_ratio_range.first >= 0.25);
        CHECK(r.coercivity_ratio_range.second <= 4);
        for (auto& [t, E] : r.slice_energies) CHECK(E > 0);
    }
    MESSAGE("remainder divergence residual " << res[0] << " " << res[1] << " " << res[2]);
    CHECK(std::log2(res[1] / res[2]) > 1.8);
}

TEST_CASE("forward current on model and boosted levels") {
    auto e = derive_exponents(3);
    const double q = 4 * e.kappa;
    auto m = boosted_levels(e, 0.0, {0.3, 0.4, 0.5});
    auto r0 = forward_current_report(e, m, q);
    for (auto& [t, E] : r0.slice_energies) CHECK(std::fabs(E) < 1e-12);

    for (double v : {0.6, -0.3}) {
        auto lv = boosted_levels(e, v, {0.3, 0.35, 0.4, 0.45, 0.5});
        auto r = forward_current_report(e, lv, q);
        const double t0 = r.slice_energies.front().first, t1 = r.slice_energies.back().first;
        const double ratio = r.slice_energies.front().second / r.slice_energies.back().second;
        CHECK(ratio == doctest::Approx(std::pow(t0 / t1, 2 * q + 2)).epsilon(1e-6));
        CHECK(r.constant_C.back() == doctest::Approx(1.0));
        CHECK(r.constant_C.front() < 1.0);
    }
    CHECK_THROWS_AS(forward_current_report(e, {m[0], m[1]}, q), ConfigError);
    CHECK_THROWS_AS(forward_current_report(e, m, 0.0), ConfigError);
    auto st = m;
    st[1].W_t.resize(0);
    CHECK_THROWS_AS(forward_current_report(e, st, q), ConfigError);
}

TEST_CASE("forward current divergence theorem on a perturbed run") {
    auto e = derive_exponents(3);
    Grid1D grid(2 * M_PI, 128);
    Field g0 = eval_profile("cos(x) + 0.3*sin(2*x)", grid);
    g0 /= supnorm(g0);
    EvolveControls c;
    c.dt_frac = 0.0025;
    c.record_steps = true;
    c.phi_stop = e.c * std::pow(0.02, -e.alpha);
    auto run = evolve(e, perturbed_model_data(e, 0.05, g0, Field::Zero(128), grid), 0.0, c).states;
    std::vector<double> res;
    for (int k : {5, 9, 17}) {
        std::vector<JacobianFields> lv;
        for (double tau : linspace(0.08, 0.2, k)) lv.push_back(jacobian_fields(e, run, tau));
        auto r = forward_current_report(e, lv, 4 * e.kappa);
        res.push_back(r.divergence_residual);
        for (auto& [t, E] : r.slice_energies) CHECK(E > 0);
    }
    MESSAGE("forward divergence residual " << res[0] << " " << res[1] << " " << res[2]);
    CHECK(std::log2(res[1] / res[2]) > 1.8);
}
