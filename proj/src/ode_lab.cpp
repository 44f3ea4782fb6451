#include "nlw/ode_lab.hpp"

#include <algorithm>
#include <array>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <sstream>

// float128's value_type names itself; stop odeint's value_type descent there.
namespace boost::numeric::odeint::detail {
template <> struct extract_value_type<nlw::qreal, void> {
    typedef nlw::qreal type;
};
} // namespace boost::numeric::odeint::detail

namespace nlw {

namespace {

namespace odeint = boost::numeric::odeint;
using QState = std::array<qreal, 2>;

struct QExp {
    qreal p, alpha, kappa, c;
    bool integer_p;
    int ip;
};

QExp quad_exponents(const Exponents& e) {
    QExp q;
    q.p = e.p;
    q.alpha = 2 / (q.p - 1);
    q.kappa = (q.p + 1) / (q.p - 1);
    q.c = boost::multiprecision::pow(q.alpha * (q.alpha + 1), 1 / (q.p - 1));
    q.integer_p = e.p == std::round(e.p) && e.p <= 16;
    q.ip = static_cast<int>(std::round(e.p));
    return q;
}

qreal qpow(const QExp& q, const qreal& x) {
    if (q.integer_p) {
        qreal r = x;
        for (int i = 1; i < q.ip; ++i) r *= x;
        return r;
    }
    return boost::multiprecision::pow(x, q.p);
}

} // namespace

std::vector<qreal> fuchsian_ode_coeffs(const Exponents& e, int terms) {
    const QExp q = quad_exponents(e);
    const qreal gamma = (q.alpha + 2) * (q.alpha + 1);
    const qreal cp1 = q.alpha * (q.alpha + 1);  // c^{p-1}
    std::vector<qreal> b(std::max(terms, 2)), a(b.size());  // a = (sum b x)^p
    b[0] = 1;
    a[0] = 1;
    b[1] = 1 / q.c;
    a[1] = q.p * b[1];
    for (size_t m = 2; m < b.size(); ++m) {
        qreal w = 0;
        for (size_t k = 1; k < m; ++k) w += ((q.p + 1) * qreal(k) - qreal(m)) * b[k] * a[m - k];
        w /= qreal(m);
        const qreal qm = -q.alpha + 2 * q.kappa * qreal(m);
        b[m] = cp1 * w / (qm * (qm - 1) - gamma);
        a[m] = w + q.p * b[m];
    }
    b.resize(terms > 0 ? terms : b.size());
    return b;
}

OdeState ode_seed(const Exponents& e, double psi, double t0, double t, int terms) {
    if (!(t > t0)) throw ConfigError("ode_seed: need t > t0");
    const QExp q = quad_exponents(e);
    const qreal s = qreal(t) - qreal(t0);
    const qreal x = qreal(psi) * boost::multiprecision::pow(s, 2 * q.kappa);
    const int nmax = terms > 0 ? terms : 200;
    auto b = fuchsian_ode_coeffs(e, nmax);
    qreal sum = 0, dsum = 0, xm = 1;
    const qreal eps = std::numeric_limits<qreal>::epsilon();
    for (int m = 0; m < nmax; ++m) {
        const qreal term = b[m] * xm;
        sum += term;
        dsum += (-q.alpha + 2 * q.kappa * m) * term;
        if (terms <= 0 && m > 2 && abs(term) < eps * 1e-3 * abs(sum)) break;
        xm *= x;
    }
    const qreal lead = q.c * boost::multiprecision::pow(s, -q.alpha);
    OdeState st;
    st.t = qreal(t);
    st.phi = lead * sum;
    st.phi_t = lead * dsum / s;
    return st;
}

qreal ode_energy(const Exponents& e, const OdeState& s) {
    const QExp q = quad_exponents(e);
    return s.phi_t * s.phi_t / 2 - qpow(q, s.phi) * s.phi / (q.p + 1);
}

qreal tau_of(const Exponents& e, const OdeState& s) {
    const QExp q = quad_exponents(e);
    return boost::multiprecision::pow(s.phi / q.c, -1 / q.alpha);
}

qreal dtau_dt(const Exponents& e, const OdeState& s) {
    const QExp q = quad_exponents(e);
    return -(1 / q.alpha) * boost::multiprecision::pow(s.phi / q.c, -1 / q.alpha - 1) * s.phi_t / q.c;
}

Trajectory ode_integrate(const Exponents& e, const OdeState& s0, double t_target, const OdeControls& ctl) {
    if (!(s0.phi > 0)) throw ConfigError("ode_integrate: phi must be positive");
    if (!(s0.t > 0) || !(t_target > 0)) throw ConfigError("ode_integrate: times must be positive");
    if (!(ctl.rtol > 0)) throw ConfigError("ode_integrate: rtol must be positive");
    const QExp q = quad_exponents(e);
    auto rhs = [&q](const QState& x, QState& dx, qreal) {
        dx[0] = x[1];
        dx[1] = qpow(q, x[0]);
    };
    auto stepper = odeint::make_controlled(qreal(ctl.atol) / 100, qreal(ctl.rtol) / 100,
                                           odeint::runge_kutta_fehlberg78<QState, qreal>());

    const qreal tend(t_target);
    const int dir = tend >= s0.t ? 1 : -1;
    std::vector<qreal> outs;
    for (double to : ctl.output_times) {
        qreal tq(to);
        if ((tq - s0.t) * dir > 0 && (tend - tq) * dir > 0) outs.push_back(tq);
    }
    std::sort(outs.begin(), outs.end(), [dir](const qreal& a, const qreal& b) { return dir > 0 ? a < b : a > b; });
    size_t next_out = 0;

    Trajectory tr{s0};
    QState x{s0.phi, s0.phi_t};
    qreal t = s0.t;
    // initial step from the local time scale phi/phi_t and the distance to the singularity
    qreal dt = dir * std::min(abs(t), abs(x[0] / x[1])) * 1e-3;
    const double thin = std::pow(10.0, 1.0 / std::max(ctl.samples_per_decade, 1));
    qreal last_tau = tau_of(e, s0);
    long steps = 0;
    while ((tend - t) * dir > 0) {
        if (++steps > ctl.max_steps) throw NumericalError("ode_integrate: step budget exhausted");
        qreal stop = next_out < outs.size() ? outs[next_out] : tend;
        bool clamp = false;
        if ((t + dt - stop) * dir > 0) {
            dt = stop - t;
            clamp = true;
        }
        if (stepper.try_step(rhs, x, t, dt) != odeint::success) {
            if (abs(dt) < abs(t) * 1e-30 + 1e-300) throw NumericalError("ode_integrate: step underflow");
            continue;
        }
        if (clamp) t = stop;
        if (!(x[0] > 0) || !isfinite(x[0]) || !isfinite(x[1]))
            throw NumericalError("ode_integrate: left the blow-up basin (phi <= 0 or non-finite)");
        OdeState st{t, x[0], x[1]};
        const qreal tau = tau_of(e, st);
        const bool is_out = clamp && next_out < outs.size() && t == outs[next_out];
        if (is_out) ++next_out;
        const bool done = (tend - t) * dir <= 0;
        const bool keep = is_out || done || tau * thin <= last_tau || tau >= last_tau * thin;
        if (keep) {
            tr.push_back(st);
            last_tau = tau;
        }
        if (tau < ctl.tau_min) {
            if (!keep) tr.push_back(st);
            break;
        }
    }
    return tr;
}

std::vector<TauSample> tau_gauge(const Exponents& e, const Trajectory& tr) {
    std::vector<TauSample> out;
    out.reserve(tr.size());
    for (const auto& s : tr) {
        if (!(s.phi > 0)) throw ConfigError("tau_gauge: phi must be positive");
        const qreal W = dtau_dt(e, s);
        out.push_back({static_cast<double>(tau_of(e, s)), static_cast<double>(1 / W), static_cast<double>(W * W - 1)});
    }
    return out;
}

bool omega_sign_constant(const std::vector<TauSample>& g, double tau_max) {
    int sign = 0;
    for (const auto& s : g) {
        if (s.tau > tau_max || s.omega2 == 0) continue;
        const int sg = s.omega2 > 0 ? 1 : -1;
        if (sign == 0) sign = sg;
        else if (sg != sign) return false;
    }
    return true;
}

double psi_hat_from_psi(const Exponents& e, double psi) {
    return -2 * psi * (2 * e.kappa + 1) / (e.c * e.alpha);
}

double psi_from_psi_hat(const Exponents& e, double psi_hat) {
    return -psi_hat * e.c * e.alpha / (2 * (2 * e.kappa + 1));
}

OdeScattering extract_scattering(const Exponents& e, const Trajectory& tr, const ExtractOptions& o) {
    if (tr.empty()) throw ConfigError("extract_scattering: empty trajectory");
    const QExp q = quad_exponents(e);
    std::vector<qreal> taus(tr.size());
    size_t imin = 0;
    for (size_t i = 0; i < tr.size(); ++i) {
        taus[i] = tau_of(e, tr[i]);
        if (taus[i] < taus[imin]) imin = i;
    }
    if (taus[imin] > o.tau_fit_max)
        throw BlowupNotReached("extract_scattering: trajectory never reaches tau <= tau_fit_max");
    const qreal lo = o.tau_fit_min > 0 ? qreal(o.tau_fit_min) : taus[imin];
    std::vector<qreal> ratio;
    for (size_t i = 0; i < tr.size(); ++i) {
        if (taus[i] < lo * (1 - 1e-12) || taus[i] > o.tau_fit_max) continue;
        const qreal W = dtau_dt(e, tr[i]);
        ratio.push_back((W * W - 1) * boost::multiprecision::pow(taus[i], -2 * q.kappa));
    }
    if (ratio.size() < 3) throw FitError("extract_scattering: fewer than 3 samples in the fit window");
    OdeScattering r;
    r.n_used = static_cast<int>(ratio.size());
    qreal mean = 0;
    for (auto& v : ratio) mean += v;
    mean /= ratio.size();
    qreal var = 0;
    for (auto& v : ratio) var += (v - mean) * (v - mean);
    const qreal sd = sqrt(var / ratio.size());
    std::vector<qreal> sorted = ratio;
    std::sort(sorted.begin(), sorted.end());
    const size_t m = sorted.size();
    const qreal med = m % 2 ? sorted[m / 2] : (sorted[m / 2 - 1] + sorted[m / 2]) / 2;
    r.psi_hat = static_cast<double>(med);
    r.relstd = static_cast<double>(sd / (abs(mean) > o.psi_hat_floor ? abs(mean) : qreal(o.psi_hat_floor)));
    if (r.relstd > o.spread_tol) {
        std::ostringstream msg;
        msg << "extract_scattering: relative spread of Omega^2 tau^{-2kappa} is " << r.relstd
            << " (> " << o.spread_tol << "); integrator tolerance too loose";
        throw GaugeLawViolation(msg.str());
    }
    r.psi = psi_from_psi_hat(e, r.psi_hat);
    const double tstar = static_cast<double>(taus[imin]);
    const double ph = r.psi_hat, k2 = 2 * e.kappa;
    const double I = adaptive_simpson([&](double s) { return 1 / std::sqrt(1 + ph * std::pow(s, k2)); }, 0.0, tstar,
                                      1e-10 * std::max(tstar, 1e-300));
    r.t0 = static_cast<double>(tr[imin].t - qreal(I));
    return r;
}

Trajectory rescale_trajectory(const Exponents& e, const Trajectory& tr, double delta) {
    if (!(delta > 0)) throw ConfigError("rescale_trajectory: delta must be positive");
    const QExp q = quad_exponents(e);
    const qreal d(delta);
    const qreal da = boost::multiprecision::pow(d, q.alpha);
    Trajectory out;
    out.reserve(tr.size());
    for (const auto& s : tr) out.push_back({s.t / d, da * s.phi, da * d * s.phi_t});
    return out;
}

} // namespace nlw
