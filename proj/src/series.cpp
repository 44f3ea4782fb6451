#include "nlw/series.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace nlw {

namespace {

Field widen(const Field& c, int w) {
    if (c.size() == w) return c;
    if (c.size() == 1) return Field::Constant(w, c[0]);
    throw ConfigError("series: coefficient width mismatch");
}

void check_compatible(const FuchsianSeries& a, const FuchsianSeries& b) {
    if (a.base.p != b.base.p) throw ConfigError("series: incompatible bases (different p)");
    if (a.width != b.width && a.width != 1 && b.width != 1)
        throw ConfigError("series: incompatible coefficient widths");
}

// powers of log t, cached per evaluation
double logpow(double L, int m) {
    double r = 1;
    for (int i = 0; i < m; ++i) r *= L;
    return r;
}

} // namespace

bool is_resonant_exponent(double q, const Exponents& e) {
    return e.resonant && std::fabs(q - e.beta) < kMergeTol;
}

double FuchsianSeries::lowest_exponent() const {
    if (terms.empty()) return std::numeric_limits<double>::infinity();
    return terms.front().exponent;
}

void FuchsianSeries::add_term(double exponent, int log_power, const Field& coeff) {
    terms.push_back({exponent, log_power, widen(coeff, width)});
    normalize();
}

void FuchsianSeries::normalize() {
    std::stable_sort(terms.begin(), terms.end(), [](const SeriesTerm& a, const SeriesTerm& b) {
        return a.exponent < b.exponent;
    });
    std::vector<SeriesTerm> out;
    size_t i = 0;
    while (i < terms.size()) {
        // cluster of (nearly) equal exponents
        size_t j = i + 1;
        while (j < terms.size() && terms[j].exponent - terms[j - 1].exponent < kMergeTol) ++j;
        double e0 = terms[i].exponent;
        int mmax = 0;
        for (size_t k = i; k < j; ++k) mmax = std::max(mmax, terms[k].log_power);
        for (int m = 0; m <= mmax; ++m) {
            Field acc;
            bool any = false;
            for (size_t k = i; k < j; ++k) {
                if (terms[k].log_power != m) continue;
                Field c = widen(terms[k].coeff, width);
                if (!any) {
                    acc = c;
                    any = true;
                } else {
                    acc += c;
                }
            }
            if (!any) continue;
            if (e0 > order + kMergeTol) continue;
            if ((acc == 0.0).all()) continue;
            out.push_back({e0, m, acc});
        }
        i = j;
    }
    terms = std::move(out);
}

void FuchsianSeries::validate() const {
    for (const auto& t : terms) {
        if (!t.coeff.allFinite()) throw NumericalError("series: non-finite coefficient");
        if (t.log_power > 0 && !base.resonant)
            throw NumericalError("series: log terms in a nonresonant series");
    }
}

FuchsianSeries monomial(const Exponents& e, double exponent, const Field& coeff, int log_power) {
    FuchsianSeries s(e, static_cast<int>(coeff.size()));
    s.terms.push_back({exponent, log_power, coeff});
    s.normalize();
    return s;
}

FuchsianSeries series_add(const FuchsianSeries& a, const FuchsianSeries& b) {
    check_compatible(a, b);
    FuchsianSeries r(a.base, std::max(a.width, b.width), std::min(a.order, b.order));
    for (const auto& t : a.terms) r.terms.push_back({t.exponent, t.log_power, widen(t.coeff, r.width)});
    for (const auto& t : b.terms) r.terms.push_back({t.exponent, t.log_power, widen(t.coeff, r.width)});
    r.normalize();
    return r;
}

FuchsianSeries series_scale(const FuchsianSeries& a, double s) {
    FuchsianSeries r = a;
    for (auto& t : r.terms) t.coeff *= s;
    r.normalize();
    return r;
}

FuchsianSeries series_sub(const FuchsianSeries& a, const FuchsianSeries& b) {
    return series_add(a, series_scale(b, -1.0));
}

FuchsianSeries series_scale(const FuchsianSeries& a, const Field& s) {
    int w = std::max<int>(a.width, static_cast<int>(s.size()));
    FuchsianSeries r(a.base, w, a.order);
    Field sw = widen(s, w);
    for (const auto& t : a.terms) r.terms.push_back({t.exponent, t.log_power, widen(t.coeff, w) * sw});
    r.normalize();
    return r;
}

FuchsianSeries series_truncate(const FuchsianSeries& a, double order) {
    FuchsianSeries r = a;
    r.order = std::min(r.order, order);
    r.normalize();
    return r;
}

FuchsianSeries series_multiply(const FuchsianSeries& a, const FuchsianSeries& b, double order) {
    check_compatible(a, b);
    int w = std::max(a.width, b.width);
    double ord = order;
    if (!a.empty() && !b.empty())
        ord = std::min({ord, a.order + b.lowest_exponent(), b.order + a.lowest_exponent()});
    FuchsianSeries r(a.base, w, ord);
    if (a.empty() || b.empty()) return r;
    for (const auto& x : a.terms) {
        for (const auto& y : b.terms) {
            double e = x.exponent + y.exponent;
            if (e > ord + kMergeTol) break;  // b sorted
            r.terms.push_back({e, x.log_power + y.log_power, widen(x.coeff, w) * widen(y.coeff, w)});
        }
    }
    r.normalize();
    return r;
}

FuchsianSeries series_dt(const FuchsianSeries& s) {
    FuchsianSeries r(s.base, s.width, s.order - 1);
    for (const auto& t : s.terms) {
        if (t.exponent != 0.0) r.terms.push_back({t.exponent - 1, t.log_power, t.exponent * t.coeff});
        if (t.log_power > 0)
            r.terms.push_back({t.exponent - 1, t.log_power - 1, double(t.log_power) * t.coeff});
    }
    r.normalize();
    return r;
}

Field series_eval(const FuchsianSeries& s, double t) {
    if (!(t > 0)) throw ConfigError("series_eval: need t > 0");
    Field r = Field::Zero(s.width);
    const double L = std::log(t);
    for (const auto& term : s.terms)
        r += widen(term.coeff, s.width) * (rpow(t, term.exponent) * logpow(L, term.log_power));
    return r;
}

Field series_eval(const FuchsianSeries& s, const Field& t) {
    if (t.size() != s.width) throw ConfigError("series_eval: width mismatch");
    if ((t <= 0).any()) throw ConfigError("series_eval: need t > 0");
    Field r = Field::Zero(s.width);
    Field L = t.log();
    for (const auto& term : s.terms) {
        Field c = widen(term.coeff, s.width);
        for (int i = 0; i < s.width; ++i)
            r[i] += c[i] * rpow(t[i], term.exponent) * logpow(L[i], term.log_power);
    }
    return r;
}

namespace {

FuchsianSeries apply_P0_impl(const FuchsianSeries& s, const Field& w) {
    int width = std::max<int>(s.width, static_cast<int>(w.size()));
    FuchsianSeries r(s.base, width, s.order - 2);
    const double g = s.base.gamma;
    Field ww = widen(w, width);
    for (const auto& t : s.terms) {
        const double q = t.exponent;
        const int m = t.log_power;
        double D = q * (q - 1) - g;
        if (std::fabs(q - s.base.beta) < kMergeTol) D = 0;  // indicial root
        Field c = -ww * widen(t.coeff, width);
        if (D != 0) r.terms.push_back({q - 2, m, D * c});
        if (m >= 1) r.terms.push_back({q - 2, m - 1, (2 * q - 1) * m * c});
        if (m >= 2) r.terms.push_back({q - 2, m - 2, double(m) * (m - 1) * c});
    }
    r.normalize();
    return r;
}

} // namespace

FuchsianSeries apply_P0(const FuchsianSeries& s, double w) { return apply_P0_impl(s, Field::Constant(1, w)); }
FuchsianSeries apply_P0(const FuchsianSeries& s, const Field& w) { return apply_P0_impl(s, w); }

SeriesTerm invert_P0_on_term(const SeriesTerm& term, const Exponents& e, bool log_branch, Diagnostics* diag) {
    if (term.log_power != 0)
        throw ConfigError("invert_P0_on_term: log input needs invert_P0_level");
    const double q = term.exponent + 2;
    if (std::fabs(q - e.beta) < kMergeTol) {
        if (!log_branch) {
            std::ostringstream os;
            os << "ResonantExponent: q = " << q << " equals beta";
            throw ResonantExponent(os.str());
        }
        return {e.beta, 1, term.coeff / (2 * e.beta - 1)};
    }
    const double D = q * (q - 1) - e.gamma;
    if (D == 0) throw ResonantExponent("invert_P0_on_term: exact indicial root");
    if (std::fabs(D) < kNearResonantTol && diag) {
        std::ostringstream os;
        os << "NearResonant: |q(q-1)-gamma| = " << std::fabs(D) << " at q = " << q;
        diag->warn(os.str());
    }
    return {q, 0, term.coeff / D};
}

std::vector<SeriesTerm> invert_P0_level(double e_in, const std::vector<Field>& r, const Exponents& e,
                                        Diagnostics* diag) {
    const int M = static_cast<int>(r.size()) - 1;
    const double q = e_in + 2;
    std::vector<SeriesTerm> out;
    if (M < 0) return out;
    const int w = static_cast<int>(r[0].size());
    if (std::fabs(q - e.beta) < kMergeTol) {
        // (2b-1)(j+1) a_{j+1} + (j+2)(j+1) a_{j+2} = r_j
        std::vector<Field> a(M + 3, Field::Zero(w));
        for (int j = M; j >= 0; --j)
            a[j + 1] = (r[j] - double(j + 2) * (j + 1) * a[j + 2]) / ((2 * e.beta - 1) * (j + 1));
        for (int k = 1; k <= M + 1; ++k) out.push_back({e.beta, k, a[k]});
        return out;
    }
    const double D = q * (q - 1) - e.gamma;
    if (D == 0) throw ResonantExponent("invert_P0_level: exact indicial root");
    if (std::fabs(D) < kNearResonantTol && diag) {
        std::ostringstream os;
        os << "NearResonant: |q(q-1)-gamma| = " << std::fabs(D) << " at q = " << q;
        diag->warn(os.str());
    }
    // D a_j + (2q-1)(j+1) a_{j+1} + (j+2)(j+1) a_{j+2} = r_j
    std::vector<Field> a(M + 3, Field::Zero(w));
    for (int j = M; j >= 0; --j)
        a[j] = (r[j] - (2 * q - 1) * (j + 1) * a[j + 1] - double(j + 2) * (j + 1) * a[j + 2]) / D;
    for (int k = 0; k <= M; ++k) out.push_back({q, k, a[k]});
    return out;
}

FuchsianSeries series_pow(const FuchsianSeries& s, double r, double order) {
    if (s.empty()) throw NumericalError("series_pow: empty series");
    const SeriesTerm& L = s.terms.front();
    if (L.log_power != 0) throw NumericalError("series_pow: leading term carries a log");
    Field lc = widen(L.coeff, s.width);
    const bool integer_r = r == std::round(r) && r >= 0;
    if (!integer_r && (lc <= 0).any()) throw NumericalError("series_pow: leading coefficient not positive");
    const double e0 = L.exponent;
    const double shift = r * e0;
    const double ord = std::min(order, s.order + (r - 1) * e0);

    // S = (s - L)/L
    FuchsianSeries S(s.base, s.width, s.order - e0);
    for (size_t i = 1; i < s.terms.size(); ++i)
        S.terms.push_back({s.terms[i].exponent - e0, s.terms[i].log_power, widen(s.terms[i].coeff, s.width) / lc});
    S.normalize();

    FuchsianSeries acc(s.base, s.width, ord - shift);
    acc.terms.push_back({0.0, 0, Field::Ones(s.width)});
    if (!S.empty()) {
        const double dmin = S.lowest_exponent();
        if (!(dmin > 0)) throw NumericalError("series_pow: non-increasing exponents");
        FuchsianSeries Sk = acc;  // S^0
        double binom = 1;
        for (int k = 1;; ++k) {
            binom *= (r - (k - 1)) / k;
            if (k * dmin > ord - shift + kMergeTol) break;
            Sk = series_multiply(Sk, S, ord - shift);
            if (binom == 0) break;
            acc = series_add(acc, series_scale(Sk, binom));
            if (Sk.empty()) break;
        }
    }
    Field lr(s.width);
    for (int i = 0; i < s.width; ++i) lr[i] = integer_r ? rpow(lc[i], r) : std::pow(lc[i], r);
    FuchsianSeries out(s.base, s.width, ord);
    for (const auto& t : acc.terms) out.terms.push_back({t.exponent + shift, t.log_power, t.coeff * lr});
    out.normalize();
    return out;
}

FuchsianSeries nonlinear_expand(const FuchsianSeries& bg, const FuchsianSeries& pert, const Exponents& e,
                                double order, Diagnostics* diag, double eval_radius) {
    FuchsianSeries out(e, std::max(bg.width, pert.width), order);
    if (pert.empty()) return out;
    const double lb = bg.lowest_exponent(), lp = pert.lowest_exponent();
    if (!(lp > lb)) throw ConfigError("nonlinear_expand: perturbation must be subleading");
    if (diag && eval_radius > 0) {
        Field ratio = series_eval(pert, eval_radius) / series_eval(bg, eval_radius);
        if (ratio.abs().maxCoeff() >= 1) diag->warn("nonlinear_expand: |Phi/Psi| >= 1 at evaluation radius");
    }
    const double p = e.p;
    const bool integer_p = p == std::round(p);
    FuchsianSeries Phik = pert;
    double binom = p;  // C(p,1)
    for (int k = 2;; ++k) {
        binom *= (p - (k - 1)) / k;
        if (k * lp + (p - k) * lb > order + kMergeTol) break;
        if (integer_p && k > p) break;
        Phik = series_multiply(Phik, pert, order - (p - k) * lb);
        if (Phik.empty()) break;
        FuchsianSeries bpow = series_pow(bg, p - k, order - k * lp);
        out = series_add(out, series_scale(series_multiply(bpow, Phik, order), binom));
    }
    out.order = std::min(out.order, order);
    out.normalize();
    return out;
}

} // namespace nlw
