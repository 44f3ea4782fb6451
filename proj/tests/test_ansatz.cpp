#include "doctest.h"
#include "nlw/ansatz.hpp"
#include "nlw/expr.hpp"

#include <cmath>

using namespace nlw;

namespace {
AnsatzConfig make_cfg(double p, const std::string& f, const std::string& psi, double N, int n = 64) {
    Grid1D g(2 * M_PI, n);
    AnsatzConfig cfg;
    cfg.e = derive_exponents(p);
    cfg.chart = Chart::tilted(g, eval_profile(f, g));
    cfg.psi = eval_profile(psi, g);
    cfg.N = N;
    return cfg;
}
const SeriesTerm* find(const FuchsianSeries& s, double e, int m = 0) {
    for (auto& t : s.terms)
        if (std::fabs(t.exponent - e) < 1e-9 && t.log_power == m) return &t;
    return nullptr;
}
}  // namespace

TEST_CASE("leading profile") {
    auto cfg = make_cfg(3, "0", "0", 4);
    auto L = leading_profile(cfg);
    CHECK((L.terms[0].coeff - cfg.e.c).abs().maxCoeff() < 1e-15);
    auto cfg2 = make_cfg(3, "0.05*sin(x)", "0", 4, 256);
    auto L2 = leading_profile(cfg2);
    Field x = cfg2.chart.grid.x();
    Field want = cfg2.e.c * (1 - 0.0025 * x.cos().square()).sqrt();
    // f' from 4th-order differences: h^4 error only
    CHECK((L2.terms[0].coeff - want).abs().maxCoeff() < 1e-9);
    // constant slope chart reproduces the boosted amplitude
    Grid1D g(2 * M_PI, 32);
    AnsatzConfig cb = cfg;
    cb.chart = Chart::tilted(g, Field::Zero(32), 0.6);
    cb.psi = Field::Zero(32);
    CHECK(leading_profile(cb).terms[0].coeff[0] == doctest::Approx(cfg.e.c * std::pow(0.64, 0.5)).epsilon(1e-14));
}

TEST_CASE("model is exact") {
    for (double p : {3.0, 4.0}) {
        auto cfg = make_cfg(p, "0", "0", 6);
        auto a = build_ansatz(cfg);
        for (auto& t : a.series.terms) {
            if (std::fabs(t.exponent + cfg.e.alpha) < 1e-9)
                CHECK((t.coeff - cfg.e.c).abs().maxCoeff() < 1e-14);
            else
                CHECK(t.coeff.abs().maxCoeff() < 1e-14);
        }
        auto rep = ansatz_residual_slope(cfg, a, logspace(1e-4, 1e-1, 13));
        CHECK(rep.exact);
    }
}

TEST_CASE("p = 3, f = 0, psi const: first correction (sqrt2/12) psi^2 t^7") {
    double psi = 0.3;
    auto cfg = make_cfg(3, "0", "0.3", 9.5, 16);
    auto a = build_ansatz(cfg);
    auto* t7 = find(a.series, 7);
    REQUIRE(t7);
    CHECK(t7->coeff[0] == doctest::Approx(std::sqrt(2.0) / 12 * psi * psi).epsilon(1e-12));
    // no log term: the resonant level receives no forcing when f = 0
    auto* lg = find(a.series, 3, 1);
    CHECK((lg == nullptr || lg->coeff.abs().maxCoeff() < 1e-14));
    // nothing between beta and 7
    for (auto& t : a.series.terms)
        if (t.exponent > 3 + 1e-9 && t.exponent < 7 - 1e-9) CHECK(t.coeff.abs().maxCoeff() < 1e-14);
}

TEST_CASE("p = 4 is never logarithmic; p = 3 with tilt is") {
    auto a4 = build_ansatz(make_cfg(4, "0.05*sin(x)", "1", 8));
    for (auto& t : a4.series.terms) CHECK(t.log_power == 0);
    auto a3 = build_ansatz(make_cfg(3, "0.05*sin(x)", "0.1*cos(x)", 6));
    auto* lg = find(a3.series, 3, 1);
    REQUIRE(lg);
    CHECK(lg->coeff.abs().maxCoeff() > 0);
}

TEST_CASE("f = 0: PDE ansatz equals ODE ansatz term by term and t^{1-alpha} vanishes") {
    auto cfg = make_cfg(4, "0", "0.2", 8, 16);
    auto pde = build_ansatz(cfg).series;
    AnsatzConfig c1 = cfg;
    Grid1D g1(2 * M_PI, 16);
    auto ode = build_ansatz(make_cfg(4, "0", "0.2", 8, 16)).series;
    REQUIRE(pde.terms.size() == ode.terms.size());
    for (size_t i = 0; i < pde.terms.size(); ++i) {
        CHECK(pde.terms[i].exponent == doctest::Approx(ode.terms[i].exponent));
        CHECK((pde.terms[i].coeff - pde.terms[i].coeff[0]).abs().maxCoeff() < 1e-14);
    }
    auto* t1 = find(pde, 1 - cfg.e.alpha);
    CHECK((t1 == nullptr || t1->coeff.abs().maxCoeff() < 1e-14));
}

TEST_CASE("residual slope tracks N") {
    auto ts = logspace(1e-4, 1e-1, 13);
    auto c6 = make_cfg(4, "0", "0.1", 6, 16);
    auto r6 = ansatz_residual_slope(c6, build_ansatz(c6), ts);
    CHECK(r6.slope >= 3.5 - 0.2);
    auto c8 = make_cfg(4, "0", "0.1", 8, 16);
    auto r8 = ansatz_residual_slope(c8, build_ansatz(c8), ts);
    CHECK(r8.slope - r6.slope >= 1.8);
    auto c0 = make_cfg(4, "0", "0", 6, 16);
    CHECK(ansatz_residual_slope(c0, build_ansatz(c0), ts).exact);
    for (double N : {4.0, 6.0}) {
        auto c = make_cfg(4, "0.05*sin(x)", "0.1*cos(x)", N, 128);
        auto r = asymptotic_residual_slope(c, build_ansatz(c));
        MESSAGE("N=" << N << " slope=" << r.slope << " floor=" << r.floor);
        CHECK(std::fabs(r.excess) <= 0.2);
    }
}
