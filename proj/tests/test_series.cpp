#include "doctest.h"
#include "nlw/series.hpp"

#include <boost/multiprecision/float128.hpp>

#include <cmath>
#include <random>

using namespace nlw;

namespace {
Field S(double v) { return Field::Constant(1, v); }
double val(const FuchsianSeries& s, double t) { return series_eval(s, t)[0]; }
}  // namespace

TEST_CASE("products of monomials") {
    auto e = derive_exponents(3);
    auto a = monomial(e, -1, S(1));
    auto b = monomial(e, 3, S(1));
    auto ab = series_multiply(a, b);
    REQUIRE(ab.terms.size() == 1);
    CHECK(ab.terms[0].exponent == doctest::Approx(2));
    CHECK(ab.terms[0].log_power == 0);

    auto l = monomial(e, e.beta, S(1), 1);
    auto ll = series_multiply(l, l);
    REQUIRE(ll.terms.size() == 1);
    CHECK(ll.terms[0].exponent == doctest::Approx(2 * e.beta));
    CHECK(ll.terms[0].log_power == 2);
}

TEST_CASE("multiply then evaluate equals evaluate then multiply") {
    auto e = derive_exponents(3);
    FuchsianSeries a(e, 1), b(e, 1);
    a.add_term(-1, 0, S(1.3));
    a.add_term(0.5, 0, S(-0.7));
    a.add_term(3, 1, S(0.25));
    b.add_term(1, 0, S(2.0));
    b.add_term(3, 0, S(0.1));
    b.add_term(3, 2, S(-0.3));
    double t = 0.3;
    CHECK(val(series_multiply(a, b), t) == doctest::Approx(val(a, t) * val(b, t)).epsilon(1e-12));
    CHECK(val(series_add(a, b), t) == doctest::Approx(val(a, t) + val(b, t)).epsilon(1e-12));
}

TEST_CASE("truncation drops untrusted exponents") {
    auto e = derive_exponents(3);
    FuchsianSeries a(e, 1, 2.0);
    a.add_term(-1, 0, S(1));
    a.add_term(1, 0, S(1));
    a.add_term(2.5, 0, S(1));
    CHECK(a.terms.size() == 2);
    FuchsianSeries b(e, 1);
    b.add_term(0, 0, S(1));
    b.add_term(1, 0, S(1));
    auto ab = series_multiply(a, b);
    // a trusted to 2, b starts at 0 -> product trusted to 2
    CHECK(ab.order == doctest::Approx(2));
    for (auto& t : ab.terms) CHECK(t.exponent <= 2 + 1e-12);
}

TEST_CASE("P0 on monomials (p = 3)") {
    auto e = derive_exponents(3);
    auto r = apply_P0(monomial(e, 4, S(1)), -1.0);
    REQUIRE(r.terms.size() == 1);
    CHECK(r.terms[0].exponent == doctest::Approx(2));
    CHECK(r.terms[0].coeff[0] == doctest::Approx(6));
    CHECK(apply_P0(monomial(e, 3, S(1)), -1.0).empty());
    auto rl = apply_P0(monomial(e, 3, S(1), 1), -1.0);
    REQUIRE(rl.terms.size() == 1);
    CHECK(rl.terms[0].exponent == doctest::Approx(1));
    CHECK(rl.terms[0].log_power == 0);
    CHECK(rl.terms[0].coeff[0] == doctest::Approx(5));
}

TEST_CASE("P0 inversion") {
    auto e = derive_exponents(3);
    auto g = invert_P0_on_term({2, 0, S(1)}, e);
    CHECK(g.exponent == doctest::Approx(4));
    CHECK(g.coeff[0] == doctest::Approx(1.0 / 6));
    auto gl = invert_P0_on_term({1, 0, S(1)}, e, true);
    CHECK(gl.exponent == doctest::Approx(3));
    CHECK(gl.log_power == 1);
    CHECK(gl.coeff[0] == doctest::Approx(0.2));
    CHECK_THROWS_AS(invert_P0_on_term({1, 0, S(1)}, e, false), ResonantExponent);

    Diagnostics d;
    // q(q-1) = gamma + 1e-8 : near-resonant warning
    double q = 0.5 + std::sqrt(0.25 + e.gamma + 1e-8);
    invert_P0_on_term({q - 2, 0, S(1)}, derive_exponents(3.0000001), false, &d);
    CHECK(!d.warnings.empty());
}

TEST_CASE("P0 round trip on random nonresonant terms") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> Ue(-2.0, 20.0), Uc(-3, 3), Up(1.2, 8.0);
    int checked = 0;
    for (int i = 0; i < 1000; ++i) {
        auto e = derive_exponents(Up(rng));
        double x = -e.alpha + (Ue(rng) + 2) * (20 + e.alpha) / 22.0;
        double q = x + 2;
        if (std::fabs(q * (q - 1) - e.gamma) < 1e-3) continue;
        double c = Uc(rng);
        auto g = invert_P0_on_term({x, 0, S(c)}, e);
        auto back = apply_P0(monomial(e, g.exponent, g.coeff), -1.0);
        REQUIRE(back.terms.size() == 1);
        CHECK(back.terms[0].exponent == doctest::Approx(x).epsilon(1e-12));
        CHECK(std::fabs(back.terms[0].coeff[0] - c) <= 1e-12 * std::fabs(c));
        ++checked;
    }
    CHECK(checked > 900);
}

TEST_CASE("level inversion with log powers") {
    for (double p : {3.0, 4.0}) {
        auto e = derive_exponents(p);
        for (double ein : {0.3, e.beta - 2, 5.1}) {
            if (!e.resonant && std::fabs(ein + 2 - e.beta) < 1e-9) continue;
            std::vector<Field> r = {S(0.7), S(-1.1), S(0.4)};
            auto g = invert_P0_level(ein, r, e);
            FuchsianSeries gs(e, 1);
            for (auto& t : g) gs.terms.push_back(t);
            gs.normalize();
            auto back = apply_P0(gs, -1.0);
            for (int k = 0; k < 3; ++k) {
                double got = 0;
                for (auto& t : back.terms)
                    if (t.log_power == k) got = t.coeff[0];
                CHECK(got == doctest::Approx(r[k][0]).epsilon(1e-12));
            }
            for (auto& t : back.terms) CHECK(t.exponent == doctest::Approx(ein));
        }
    }
}

TEST_CASE("resonant factor 2 beta - 1 for p = 2, 3, 5") {
    for (double p : {2.0, 3.0, 5.0}) {
        auto e = derive_exponents(p);
        REQUIRE(e.resonant);
        auto r = apply_P0(monomial(e, e.beta, S(1), 1), -1.0);
        REQUIRE(r.terms.size() == 1);
        CHECK(r.terms[0].coeff[0] == 2 * e.beta - 1);
        auto g = invert_P0_on_term({e.beta - 2, 0, S(1)}, e, true);
        CHECK(g.coeff[0] == 1 / (2 * e.beta - 1));
    }
}

TEST_CASE("series_dt") {
    auto e = derive_exponents(3);
    auto d = series_dt(monomial(e, 3, S(1), 1));
    CHECK(val(d, 1.0) == doctest::Approx(1.0));
    // d_t^2 s == P0(s; w=-1) + gamma t^-2 s pointwise
    FuchsianSeries s(e, 1);
    s.add_term(-1, 0, S(1.4));
    s.add_term(2.2, 0, S(0.3));
    s.add_term(3, 1, S(-0.8));
    s.add_term(3, 2, S(0.05));
    for (double t : {0.05, 0.3, 0.9}) {
        double lhs = val(series_dt(series_dt(s)), t);
        double rhs = val(apply_P0(s, -1.0), t) + e.gamma / (t * t) * val(s, t);
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
    }
}

TEST_CASE("nonlinear expansion") {
    auto e = derive_exponents(3);
    double psi = 0.37;
    auto bg = monomial(e, -1, S(std::sqrt(2.0)));
    auto pe = monomial(e, 3, S(psi));
    auto N = nonlinear_expand(bg, pe, e, 20);
    REQUIRE(N.terms.size() == 2);
    CHECK(N.terms[0].exponent == doctest::Approx(5));
    CHECK(N.terms[0].coeff[0] == doctest::Approx(3 * std::sqrt(2.0) * psi * psi).epsilon(1e-14));
    CHECK(N.terms[1].exponent == doctest::Approx(9));
    CHECK(N.terms[1].coeff[0] == doctest::Approx(psi * psi * psi).epsilon(1e-14));

    CHECK(nonlinear_expand(bg, FuchsianSeries(e, 1), e, 20).empty());

    // non-integer p, multi-term perturbation, pointwise oracle
    for (double p : {4.0, 4.5, 2.3}) {
        auto ep = derive_exponents(p);
        FuchsianSeries B(ep, 1), P(ep, 1);
        B.add_term(-ep.alpha, 0, S(ep.c));
        B.add_term(1 - ep.alpha, 0, S(0.2));
        P.add_term(ep.beta, 0, S(0.5));
        P.add_term(ep.beta + 0.5, 0, S(-0.3));
        double t = 0.1;
        auto Nn = nonlinear_expand(B, P, ep, 60);
        double Psi = val(B, t), Phi = val(P, t);
        // oracle in quad precision: the closed form cancels catastrophically in double
        using q128 = boost::multiprecision::float128;
        q128 Q = Psi, F = Phi, P128 = p;
        double direct = static_cast<double>(pow(Q + F, P128) - pow(Q, P128) - P128 * pow(Q, P128 - 1) * F);
        CHECK(std::fabs(Phi / Psi) < 0.3);
        CHECK(std::fabs(val(Nn, t) - direct) <= 1e-8 * std::fabs(direct));
        // quadratic vanishing: halving Phi quarters N at leading order
        auto N2 = nonlinear_expand(B, series_scale(P, 0.5), ep, 60);
        CHECK(val(N2, t) / val(Nn, t) == doctest::Approx(0.25).epsilon(0.05));
    }
}

TEST_CASE("series power of a positive leading term") {
    auto e = derive_exponents(4);
    FuchsianSeries s(e, 1);
    s.add_term(-e.alpha, 0, S(e.c));
    s.add_term(1 - e.alpha, 0, S(0.1));
    s.add_term(e.beta, 0, S(-0.2));
    auto pw = series_pow(s, e.p, 40);
    for (double t : {0.01, 0.1}) CHECK(val(pw, t) == doctest::Approx(std::pow(val(s, t), e.p)).epsilon(1e-10));
}
