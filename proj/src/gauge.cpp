#include "nlw/gauge.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <tuple>
#include <utility>

namespace nlw {

namespace {

// Root of g on [a, b] with g(a) g(b) <= 0: bisection polished by secant steps.
template <class G> double bracket_root(G&& g, double a, double b) {
    double ga = g(a), gb = g(b);
    if (ga == 0) return a;
    if (gb == 0) return b;
    for (int it = 0; it < 200; ++it) {
        double m = 0.5 * (a + b);
        const double sec = a - ga * (b - a) / (gb - ga);
        if (sec > std::min(a, b) && sec < std::max(a, b) && it % 2 == 0) m = sec;
        const double gm = g(m);
        if (gm == 0) return m;
        if ((gm < 0) == (ga < 0)) {
            a = m;
            ga = gm;
        } else {
            b = m;
            gb = gm;
        }
        if (std::fabs(b - a) <= 1e-15 * std::max(std::fabs(a), std::fabs(b)) + 1e-300) break;
    }
    return 0.5 * (a + b);
}

std::vector<size_t> time_order(const std::vector<WaveState>& states) {
    std::vector<size_t> idx(states.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return states[a].time < states[b].time; });
    return idx;
}

void check_states(const std::vector<WaveState>& states, size_t min_count, const char* who) {
    if (states.size() < min_count) {
        std::ostringstream m;
        m << who << ": need at least " << min_count << " slices";
        throw ConfigError(m.str());
    }
    for (const auto& s : states)
        if (!s.chart || s.chart != states.front().chart)
            throw ConfigError(std::string(who) + ": slices must share one chart");
}

void assemble(JacobianFields& j) {
    j.Omega2 = j.W.square() - j.V.square();
    j.U = j.V / j.W;
    j.Omega_ring2 = j.Omega2 - 1;
}

// bracketing interval per column; throws when the level set leaves the sampled range
size_t find_bracket(const std::vector<Field>& tau, const std::vector<size_t>& ord, int col, double level) {
    for (size_t k = 0; k + 1 < ord.size(); ++k) {
        const double a = tau[ord[k]][col] - level, b = tau[ord[k + 1]][col] - level;
        if (a == 0 || (a < 0) != (b < 0) || b == 0) return k;
    }
    std::ostringstream m;
    m << "jacobian_fields: level set tau = " << level << " exits the sampled time range at column " << col;
    throw NumericalError(m.str());
}

// cubic Hermite on [t0, t1] from values and slopes; returns value and derivative
std::pair<double, double> hermite3(double t0, double t1, double y0, double d0, double y1, double d1_, double t) {
    const double H = t1 - t0, s = (t - t0) / H;
    const double h00 = (1 + 2 * s) * (1 - s) * (1 - s), h10 = s * (1 - s) * (1 - s);
    const double h01 = s * s * (3 - 2 * s), h11 = s * s * (s - 1);
    const double val = h00 * y0 + h10 * H * d0 + h01 * y1 + h11 * H * d1_;
    const double der = (6 * s * s - 6 * s) * (y0 - y1) / H + (3 * s * s - 4 * s + 1) * d0 + (3 * s * s - 2 * s) * d1_;
    return {val, der};
}

Field stencil_d(const std::vector<double>& ts, const std::vector<const Field*>& fs, double t0, int m) {
    auto w = fd_weights(t0, ts, m);
    Field r = Field::Zero(fs.front()->size());
    for (size_t i = 0; i < ts.size(); ++i) r += w[i] * *fs[i];
    return r;
}

} // namespace

std::vector<Field> tau_field(const Exponents& e, const std::vector<WaveState>& states) {
    std::vector<Field> out;
    out.reserve(states.size());
    for (const auto& s : states) {
        if ((s.phi <= 0).any()) throw ConfigError("tau_field: phi must be positive");
        out.push_back((s.phi / e.c).pow(-1 / e.alpha));
    }
    return out;
}

JacobianFields jacobian_fields(const Exponents& e, const std::vector<WaveState>& states, double tau_slice) {
    check_states(states, 2, "jacobian_fields");
    const Chart& ch = *states.front().chart;
    const double h = ch.grid.h();
    const int n = ch.grid.n;
    const auto ord = time_order(states);
    const auto tau = tau_field(e, states);
    // per-slice chain rule through L = log phi: W = -tau L_t / alpha and its bold-t derivatives
    const size_t ns = states.size();
    std::vector<Field> W0(ns), W1(ns), W2(ns), V0(ns), V1(ns), V2(ns);
    for (size_t k = 0; k < ns; ++k) {
        const auto& s = states[k];
        const Field& T = tau[k];
        const Field p2 = box_rhs(e, s);
        const Field p3 = box_rhs_dt(e, ch, s.phi, s.phi_t, p2);
        const Field L1 = s.phi_t / s.phi;
        const Field L2 = p2 / s.phi - L1.square();
        const Field L3 = p3 / s.phi - 3 * L1 * p2 / s.phi + 2 * L1.cube();
        W0[k] = -T * L1 / e.alpha;
        W1[k] = -(W0[k] * L1 + T * L2) / e.alpha;
        W2[k] = -(W1[k] * L1 + 2 * W0[k] * L2 + T * L3) / e.alpha;
        V0[k] = -T * d1(s.phi, h) / (e.alpha * s.phi) - ch.fp * W0[k];
        V1[k] = d1(W0[k], h) - ch.fp * W1[k];
        V2[k] = d1(W1[k], h) - ch.fp * W2[k];
    }
    JacobianFields j;
    j.tau_slice = tau_slice;
    j.h = h;
    j.t_level.resize(n);
    j.W.resize(n);
    j.V.resize(n);
    j.W_t.resize(n);
    j.W_tt.resize(n);
    j.V_t.resize(n);
    j.V_tt.resize(n);
    for (int c = 0; c < n; ++c) {
        const size_t k = find_bracket(tau, ord, c, tau_slice);
        const size_t a = ord[k], b = ord[k + 1];
        const double t0 = states[a].time, t1 = states[b].time;
        auto g = [&](double t) {
            return hermite5(t0, t1, tau[a][c], W0[a][c], W1[a][c], tau[b][c], W0[b][c], W1[b][c], t) - tau_slice;
        };
        const double ts = bracket_root(g, t0, t1);
        j.t_level[c] = ts;
        j.W[c] = hermite5(t0, t1, W0[a][c], W1[a][c], W2[a][c], W0[b][c], W1[b][c], W2[b][c], ts);
        j.V[c] = hermite5(t0, t1, V0[a][c], V1[a][c], V2[a][c], V0[b][c], V1[b][c], V2[b][c], ts);
        std::tie(j.W_t[c], j.W_tt[c]) = hermite3(t0, t1, W1[a][c], W2[a][c], W1[b][c], W2[b][c], ts);
        std::tie(j.V_t[c], j.V_tt[c]) = hermite3(t0, t1, V1[a][c], V2[a][c], V1[b][c], V2[b][c], ts);
    }
    assemble(j);
    return j;
}

JacobianFields jacobian_fields_stencil(const Exponents& e, const std::vector<WaveState>& states, double tau_slice) {
    check_states(states, 5, "jacobian_fields_stencil");
    const Chart& ch = *states.front().chart;
    const double h = ch.grid.h();
    const int n = ch.grid.n;
    const auto ord = time_order(states);
    const auto tau = tau_field(e, states);
    std::vector<Field> tau_y(states.size());
    for (size_t k = 0; k < states.size(); ++k) tau_y[k] = d1(tau[k], h);
    const size_t ns = ord.size();
    JacobianFields j;
    j.tau_slice = tau_slice;
    j.h = h;
    j.t_level.resize(n);
    j.W.resize(n);
    j.V.resize(n);
    for (int c = 0; c < n; ++c) {
        const size_t k = find_bracket(tau, ord, c, tau_slice);
        // 4 slices around the bracket for the level set, 5 for the derivative
        const size_t lo4 = std::min(k > 0 ? k - 1 : 0, ns - 4);
        std::vector<double> t4(4), y4(4);
        for (int i = 0; i < 4; ++i) {
            t4[i] = states[ord[lo4 + i]].time;
            y4[i] = tau[ord[lo4 + i]][c];
        }
        const double ts = bracket_root([&](double t) { return lagrange(t4, y4, t) - tau_slice; },
                                       states[ord[k]].time, states[ord[k + 1]].time);
        j.t_level[c] = ts;
        const size_t lo5 = std::min(k > 1 ? k - 1 : 0, ns - 5);
        std::vector<double> t5(5), tau5(5), ty5(5);
        for (int i = 0; i < 5; ++i) {
            t5[i] = states[ord[lo5 + i]].time;
            tau5[i] = tau[ord[lo5 + i]][c];
            ty5[i] = tau_y[ord[lo5 + i]][c];
        }
        const auto w = fd_weights(ts, t5, 1);
        double Wv = 0;
        for (int i = 0; i < 5; ++i) Wv += w[i] * tau5[i];
        j.W[c] = Wv;
        j.V[c] = lagrange(t5, ty5, ts) - ch.fp[c] * Wv;
    }
    assemble(j);
    return j;
}

double jacobian_identity_error(const JacobianFields& j) {
    double m = (j.Omega2 - (j.W.square() - j.V.square())).abs().maxCoeff();
    m = std::max(m, (j.U - j.V / j.W).abs().maxCoeff());
    m = std::max(m, (j.Omega_ring2 - j.Omega2 + 1).abs().maxCoeff());
    return m;
}

double TransportResiduals::max_U() const { return r_U.empty() ? 0 : *std::max_element(r_U.begin(), r_U.end()); }
double TransportResiduals::max_Omega() const {
    return r_Omega.empty() ? 0 : *std::max_element(r_Omega.begin(), r_Omega.end());
}

TransportResiduals transport_residuals(const Exponents& e, const std::vector<JacobianFields>& levels) {
    if (levels.size() < 3) throw ConfigError("transport_residuals: need at least 3 tau levels");
    for (size_t i = 1; i < levels.size(); ++i) {
        if (!(levels[i].tau_slice > levels[i - 1].tau_slice))
            throw ConfigError("transport_residuals: levels must be strictly increasing in tau");
        if (levels[i].W.size() != levels[0].W.size() || levels[i].h != levels[0].h)
            throw ConfigError("transport_residuals: levels sampled on different columns");
    }
    // columns sit at fixed z = x, so d_tau at fixed z is a difference across levels
    const double h = levels.front().h;
    TransportResiduals r;
    for (size_t i = 1; i + 1 < levels.size(); ++i) {
        const auto& L = levels[i];
        const double tau = L.tau_slice;
        const std::vector<double> ts{levels[i - 1].tau_slice, tau, levels[i + 1].tau_slice};
        const Field dU = stencil_d(ts, {&levels[i - 1].U, &L.U, &levels[i + 1].U}, tau, 1);
        const Field dO =
            stencil_d(ts, {&levels[i - 1].Omega_ring2, &L.Omega_ring2, &levels[i + 1].Omega_ring2}, tau, 1);
        const Field rU = tau * dU - tau * d1(L.W, h) / L.W.square();
        const Field rO = tau * dO - 2 * e.kappa * L.Omega_ring2 - 2 * tau * d1(L.V, h);
        r.tau.push_back(tau);
        r.r_U.push_back(l2norm(rU, h));
        r.r_Omega.push_back(l2norm(rO, h));
    }
    return r;
}

double TauResidual::max_l2() const { return l2.empty() ? 0 : *std::max_element(l2.begin(), l2.end()); }
double TauResidual::max_cross() const { return cross.empty() ? 0 : *std::max_element(cross.begin(), cross.end()); }

TauResidual nlw_tau_residual(const Exponents& e, const std::vector<WaveState>& states) {
    check_states(states, 3, "nlw_tau_residual");
    const Chart& ch = *states.front().chart;
    const double h = ch.grid.h();
    const auto ord = time_order(states);
    const auto tau = tau_field(e, states);
    const Field w = ch.weight();
    auto box = [&](const Field& u_t, const Field& u_tt, const Field& u) -> Field {
        return -w * u_tt - ch.fpp * u_t - 2 * ch.fp * d1(u_t, h) + d2(u, h);
    };
    TauResidual r;
    for (size_t k = 1; k + 1 < ord.size(); ++k) {
        const size_t a = ord[k - 1], b = ord[k], c = ord[k + 1];
        const double t = states[b].time;
        const std::vector<double> ts{states[a].time, t, states[c].time};
        const Field T_t = stencil_d(ts, {&tau[a], &tau[b], &tau[c]}, t, 1);
        const Field T_tt = stencil_d(ts, {&tau[a], &tau[b], &tau[c]}, t, 2);
        const Field& T = tau[b];
        const Field V = d1(T, h) - ch.fp * T_t;
        const Field om2 = T_t.square() - V.square();
        const Field rt = box(T_t, T_tt, T) - e.kappa * (1 - om2) / T;
        const Field P_t = stencil_d(ts, {&states[a].phi, &states[b].phi, &states[c].phi}, t, 1);
        const Field P_tt = stencil_d(ts, {&states[a].phi, &states[b].phi, &states[c].phi}, t, 2);
        const Field& P = states[b].phi;
        const Field rphi = box(P_t, P_tt, P) + P.abs().pow(e.p - 1) * P;
        r.time.push_back(t);
        r.l2.push_back(l2norm(rt, h));
        r.cross.push_back(l2norm(rt + T.pow(e.alpha + 1) * rphi / (e.alpha * e.c), h));
    }
    return r;
}

} // namespace nlw
