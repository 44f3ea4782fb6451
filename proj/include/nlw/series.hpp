#pragma once

#include "nlw/errors.hpp"
#include "nlw/exponents.hpp"
#include "nlw/grid.hpp"

#include <limits>
#include <vector>

namespace nlw {

constexpr double kMergeTol = 1e-9;
constexpr double kNearResonantTol = 1e-6;

/// coeff * t^exponent * (log t)^log_power; coeff has the series width (1 for scalar series).
struct SeriesTerm {
    double exponent = 0;
    int log_power = 0;
    Field coeff;
};

/// Finite sum of SeriesTerms, sorted by (exponent, log_power). Terms with exponent above
/// `order` are not trusted and are dropped by every operation.
struct FuchsianSeries {
    Exponents base;
    int width = 1;
    double order = std::numeric_limits<double>::infinity();
    std::vector<SeriesTerm> terms;

    FuchsianSeries() = default;
    FuchsianSeries(const Exponents& e, int w, double ord = std::numeric_limits<double>::infinity())
        : base(e), width(w), order(ord) {}

    bool empty() const { return terms.empty(); }
    double lowest_exponent() const;
    /// insert with merging (|de| < kMergeTol and equal log power)
    void add_term(double exponent, int log_power, const Field& coeff);
    void normalize();  // sort + merge + drop exactly-zero + truncate
    void validate() const;
};

FuchsianSeries monomial(const Exponents& e, double exponent, const Field& coeff, int log_power = 0);

FuchsianSeries series_add(const FuchsianSeries& a, const FuchsianSeries& b);
FuchsianSeries series_sub(const FuchsianSeries& a, const FuchsianSeries& b);
FuchsianSeries series_scale(const FuchsianSeries& a, double s);
FuchsianSeries series_scale(const FuchsianSeries& a, const Field& s);
/// product; `order` caps the result further (default: inherited trusted order)
FuchsianSeries series_multiply(const FuchsianSeries& a, const FuchsianSeries& b,
                               double order = std::numeric_limits<double>::infinity());
FuchsianSeries series_truncate(const FuchsianSeries& a, double order);

FuchsianSeries series_dt(const FuchsianSeries& s);
/// apply a map to every coefficient field (used for spatial derivatives)
template <class F>
FuchsianSeries series_map_coeff(const FuchsianSeries& s, F&& f) {
    FuchsianSeries r(s.base, s.width, s.order);
    for (const auto& t : s.terms) r.terms.push_back({t.exponent, t.log_power, f(t.coeff)});
    r.normalize();
    return r;
}

Field series_eval(const FuchsianSeries& s, double t);
/// pointwise evaluation with a different t per coefficient entry
Field series_eval(const FuchsianSeries& s, const Field& t);

/// -w (d_t^2 - gamma t^{-2}) applied termwise. w = -1 gives the ODE indicial operator.
FuchsianSeries apply_P0(const FuchsianSeries& s, double w);
FuchsianSeries apply_P0(const FuchsianSeries& s, const Field& w);

/// Solve (d_t^2 - gamma t^{-2}) g = term. Only log_power 0 input; returns t^{e+2}/(q(q-1)-gamma),
/// or the log branch t^beta log t/(2 beta - 1) when q = beta and log_branch is set.
SeriesTerm invert_P0_on_term(const SeriesTerm& term, const Exponents& e, bool log_branch = false,
                             Diagnostics* diag = nullptr);

/// General level inversion: given r_k (k = 0..M) of t^e (log t)^k, return g with
/// (d_t^2 - gamma t^{-2}) g = sum r_k t^e (log t)^k. In the resonant case the free
/// t^beta coefficient is set to zero.
std::vector<SeriesTerm> invert_P0_level(double e_in, const std::vector<Field>& r, const Exponents& e,
                                        Diagnostics* diag = nullptr);

/// s^r for a series whose lowest term is a positive, log-free monomial.
FuchsianSeries series_pow(const FuchsianSeries& s, double r, double order);

/// (Psi+Phi)^p - Psi^p - p Psi^{p-1} Phi via binomial expansion in Phi/Psi.
FuchsianSeries nonlinear_expand(const FuchsianSeries& background, const FuchsianSeries& perturbation,
                                const Exponents& e, double order, Diagnostics* diag = nullptr,
                                double eval_radius = 0);

bool is_resonant_exponent(double q, const Exponents& e);

} // namespace nlw
