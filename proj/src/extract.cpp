#include "nlw/extract.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace nlw {

namespace {

std::vector<size_t> by_time(const std::vector<WaveState>& states) {
    std::vector<size_t> idx(states.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return states[a].time < states[b].time; });
    return idx;
}

void same_chart(const std::vector<WaveState>& states, const char* who) {
    if (states.empty()) throw ConfigError(std::string(who) + ": no states");
    for (const auto& s : states)
        if (!s.chart || s.chart != states.front().chart)
            throw ConfigError(std::string(who) + ": slices must share one chart");
}

// Least squares with column equilibration.
Eigen::VectorXd solve_ls(Eigen::MatrixXd A, const Eigen::VectorXd& b) {
    Eigen::VectorXd scale(A.cols());
    for (int j = 0; j < A.cols(); ++j) {
        scale[j] = A.col(j).norm();
        if (scale[j] == 0) scale[j] = 1;
        A.col(j) /= scale[j];
    }
    Eigen::VectorXd x = A.colPivHouseholderQr().solve(b);
    return x.cwiseQuotient(scale);
}

double poly(const Eigen::VectorXd& a, double s, double* ds = nullptr) {
    double v = 0, d = 0;
    for (int j = static_cast<int>(a.size()) - 1; j >= 0; --j) {
        d = d * s + v;
        v = v * s + a[j];
    }
    if (ds) *ds = d;
    return v;
}

} // namespace

ChartPtr SurfaceFit::chart() const { return std::make_shared<const Chart>(Chart::tilted(grid, g, slope)); }

SurfaceFit extract_surface(const Exponents& e, const std::vector<WaveState>& states, const SurfaceFitOptions& o) {
    same_chart(states, "extract_surface");
    if (o.degree < 1 || o.min_points < o.degree + 1 || !(o.window_hi > o.window_lo) || !(o.window_lo > 0))
        throw ConfigError("extract_surface: bad fit options");
    double phi_max = 0;
    for (const auto& s : states) phi_max = std::max(phi_max, s.phi.maxCoeff());
    if (phi_max < o.phi_fit && !o.relaxed) {
        std::ostringstream m;
        m << "extract_surface: max phi = " << phi_max << " below phi_fit = " << o.phi_fit;
        throw BlowupNotReached(m.str());
    }
    const Chart& ch = *states.front().chart;
    const int n = ch.grid.n;
    const auto tau = tau_field(e, states);
    const auto ord = by_time(states);

    SurfaceFit r;
    r.grid = ch.grid;
    r.slope = ch.slope;
    r.root.resize(n);
    r.tau_slope.resize(n);
    r.tau_min.resize(n);
    r.extrapolation.resize(n);
    for (int c = 0; c < n; ++c) {
        std::vector<std::pair<double, double>> col;  // (tau, bold-t)
        for (size_t k : ord) col.emplace_back(tau[k][c], states[k].time);
        double tmin = INFINITY;
        for (auto& [ta, tt] : col) tmin = std::min(tmin, ta);
        // relaxed: the window reaches down to tau_min
        const double wlo = o.relaxed ? 1.0 : o.window_lo;
        std::vector<std::pair<double, double>> win;
        for (auto& pr : col)
            if (pr.first >= wlo * tmin && pr.first <= o.window_hi * tmin) win.push_back(pr);
        if (static_cast<int>(win.size()) < o.min_points) {
            if (!o.relaxed) {
                std::ostringstream m;
                m << "extract_surface: only " << win.size() << " slices in the window at column " << c;
                throw FitError(m.str());
            }
            auto sorted = col;
            std::sort(sorted.begin(), sorted.end());
            win.assign(sorted.begin(), sorted.begin() + std::min<size_t>(sorted.size(), o.min_points));
            if (static_cast<int>(win.size()) < o.degree + 1) throw FitError("extract_surface: too few slices");
        }
        double lo = INFINITY, hi = -INFINITY;
        for (auto& pr : win) {
            lo = std::min(lo, pr.second);
            hi = std::max(hi, pr.second);
        }
        const double mid = 0.5 * (lo + hi), half = std::max(0.5 * (hi - lo), 1e-300);
        const auto& near = *std::min_element(win.begin(), win.end());
        // Newton from the closest sample; a diverging high-degree fit falls back to lower degree
        double s = 0, ds = 0;
        bool ok = false;
        for (int deg = o.degree; deg >= 1 && !ok; --deg) {
            Eigen::MatrixXd A(win.size(), deg + 1);
            Eigen::VectorXd b(win.size());
            for (size_t i = 0; i < win.size(); ++i) {
                const double si = (win[i].second - mid) / half;
                double pw = 1;
                for (int j = 0; j <= deg; ++j, pw *= si) A(i, j) = pw;
                b[i] = win[i].first;
            }
            const Eigen::VectorXd a = A.colPivHouseholderQr().solve(b);
            s = (near.second - mid) / half;
            for (int it = 0; it < 100; ++it) {
                const double v = poly(a, s, &ds);
                const double step = v / ds;
                s -= step;
                if (!std::isfinite(s)) break;
                if (std::fabs(step) < 1e-15 * std::max(1.0, std::fabs(s))) {
                    ok = true;
                    break;
                }
            }
            if (ok) {
                poly(a, s, &ds);
                ok = ds != 0 && std::isfinite(ds);
            }
            if (ok && deg < o.degree) r.degraded = true;
        }
        if (!ok) throw FitError("extract_surface: root iteration failed at column " + std::to_string(c));
        const double root = mid + half * s;
        r.root[c] = root;
        r.tau_slope[c] = ds / half;
        r.tau_min[c] = tmin;
        const double edge = std::fabs(root - lo) < std::fabs(root - hi) ? lo : hi;
        r.extrapolation[c] = std::fabs(root - edge) / std::max(hi - lo, 1e-300);
        if (!o.relaxed && r.extrapolation[c] > 1) {
            std::ostringstream m;
            m << "extract_surface: extrapolation distance " << r.extrapolation[c] << " window lengths at column " << c;
            throw FitError(m.str());
        }
    }
    r.g = ch.g + r.root;
    r.f = r.slope * ch.grid.x() + r.g;
    const Field fp = r.slope + d1(r.g, ch.grid.h());
    if ((fp.abs() >= 1).any() && !o.relaxed) throw FitError("extract_surface: recovered surface is not spacelike");
    r.slope_consistency = (r.tau_slope - (1 - fp.square()).rsqrt()).abs().maxCoeff();
    return r;
}

WaveState resample_to_chart(const Exponents& e, const std::vector<WaveState>& states, ChartPtr target, double s0) {
    same_chart(states, "resample_to_chart");
    if (!target) throw ConfigError("resample_to_chart: no target chart");
    const Chart& src = *states.front().chart;
    if (!(target->grid == src.grid)) throw ConfigError("resample_to_chart: grids differ");
    const int n = src.grid.n;
    const auto ord = by_time(states);
    std::vector<Field> acc(states.size()), jerk(states.size());
    for (size_t k = 0; k < states.size(); ++k) {
        acc[k] = box_rhs(e, states[k]);
        jerk[k] = box_rhs_dt(e, src, states[k].phi, states[k].phi_t, acc[k]);
    }
    const Field want = s0 + target->f_values() - src.f_values();
    WaveState out{target, s0, Field(n), Field(n)};
    for (int c = 0; c < n; ++c) {
        double t = want[c];
        // forgive rounding at the ends of the sampled range
        const double t_first = states[ord.front()].time, t_last = states[ord.back()].time;
        const double slack = 1e-12 * std::max({1.0, std::fabs(t_first), std::fabs(t_last)});
        if (t > t_last && t - t_last < slack) t = t_last;
        if (t < t_first && t_first - t < slack) t = t_first;
        auto it = std::lower_bound(ord.begin(), ord.end(), t, [&](size_t k, double v) { return states[k].time < v; });
        if (it == ord.end() || (it == ord.begin() && states[*it].time != t)) {
            std::ostringstream m;
            m << "resample_to_chart: time " << t << " outside the sampled range at column " << c;
            throw NumericalError(m.str());
        }
        if (states[*it].time == t) {
            out.phi[c] = states[*it].phi[c];
            out.phi_t[c] = states[*it].phi_t[c];
            continue;
        }
        const size_t b = *it, a = *(it - 1);
        const auto& A = states[a];
        const auto& B = states[b];
        out.phi[c] = hermite5(A.time, B.time, A.phi[c], A.phi_t[c], acc[a][c], B.phi[c], B.phi_t[c], acc[b][c], t);
        // d/dt at fixed x in every chart
        out.phi_t[c] = hermite5(A.time, B.time, A.phi_t[c], acc[a][c], jerk[a][c], B.phi_t[c], acc[b][c], jerk[b][c], t);
    }
    return out;
}

ScatteringData extract_scattering_pde(const Exponents& e, const std::vector<WaveState>& states,
                                      const SurfaceFit& surface, const ScatteringFitOptions& o) {
    same_chart(states, "extract_scattering_pde");
    const Chart& ch = *states.front().chart;
    if (!(surface.grid == ch.grid)) throw ConfigError("extract_scattering_pde: surface grid differs from the run");
    const int n = ch.grid.n;
    const Field f_run = ch.f_values();
    const Field x = ch.grid.x();

    ScatteringData out;
    out.slope = surface.slope;
    out.g = surface.g;
    out.psi = Field::Zero(n);

    double lo = o.window_lo, hi = o.window_hi;
    if (lo == 0 && hi == 0) {
        double tmin = INFINITY;
        for (const auto& s : states) {
            const Field tt = s.time + f_run - (surface.slope * x + surface.g);
            for (int c = 0; c < n; ++c)
                if (tt[c] > 0) tmin = std::min(tmin, tt[c]);
        }
        lo = 3 * tmin;
        hi = 30 * tmin;
    }
    if (!(lo > 0) || !(hi > lo)) throw ConfigError("extract_scattering_pde: bad window");

    const int kmax = o.kmax > 0 ? o.kmax : std::max(1, static_cast<int>(std::floor(0.5 * ch.grid.L / (2 * M_PI) / hi)));
    out.report.kmax = kmax;

    AnsatzConfig cfg;
    cfg.e = e;
    cfg.N = o.N > 0 ? o.N : 2 * e.beta + 4;
    cfg.N_max = std::max(cfg.N, 2 * e.beta + 4);
    cfg.slope_limit = o.slope_limit;
    out.report.N = cfg.N;
    out.report.weight_power = e.beta;
    out.report.columns.assign(n, ColumnFit{});

    const int nb = (o.fit_shift ? 1 : 0) + 1 + (e.resonant ? 1 : 0);
    Field log_fit = Field::Zero(n), log_rebuilt = Field::Zero(n);
    Field rmax_col = Field::Zero(n), floor_col = Field::Zero(n), thi_col = Field::Zero(n);
    for (int iter = 0; iter < std::max(1, o.iterations); ++iter) {
        cfg.chart = Chart::tilted(ch.grid, out.g, out.slope);
        cfg.psi = out.psi;
        const Ansatz an = build_ansatz(cfg);
        const FuchsianSeries dS = series_dt(an.series);
        log_rebuilt.setZero();
        for (const auto& t : an.series.terms)
            if (t.log_power == 1 && std::fabs(t.exponent - e.beta) < kMergeTol) log_rebuilt = t.coeff;
        const Field f_hat = out.slope * x + out.g;

        // rows per column
        std::vector<std::vector<double>> T(n), R(n), D(n), P(n);
        int used = 0;
        for (const auto& s : states) {
            const Field tt = s.time + f_run - f_hat;
            if (tt.minCoeff() <= 0) continue;
            if ((tt < lo).all() || (tt > hi).all()) continue;
            ++used;
            const Field ans = series_eval(an.series, tt);
            const Field dans = series_eval(dS, tt);
            for (int c = 0; c < n; ++c) {
                if (tt[c] < lo || tt[c] > hi) continue;
                T[c].push_back(tt[c]);
                R[c].push_back(s.phi[c] - ans[c]);
                D[c].push_back(-dans[c]);
                P[c].push_back(s.phi[c]);
            }
        }
        out.report.slices = used;
        Field shift = Field::Zero(n), dpsi = Field::Zero(n);
        for (int c = 0; c < n; ++c) {
            const int m = static_cast<int>(T[c].size());
            if (m < nb + 2) {
                std::ostringstream msg;
                msg << "extract_scattering_pde: " << m << " samples in the window at column " << c;
                throw FitError(msg.str());
            }
            Eigen::MatrixXd A(m, nb);
            Eigen::VectorXd b(m);
            for (int i = 0; i < m; ++i) {
                const double t = T[c][i], w = std::pow(t, -e.beta), tb = std::pow(t, e.beta);
                int j = 0;
                if (o.fit_shift) A(i, j++) = w * D[c][i];
                A(i, j++) = w * tb;
                if (e.resonant) A(i, j++) = w * tb * std::log(t);
                b[i] = w * R[c][i];
            }
            const Eigen::VectorXd sol = solve_ls(A, b);
            const Eigen::VectorXd res = b - A * sol;
            int j = 0;
            if (o.fit_shift) shift[c] = sol[j++];
            dpsi[c] = sol[j++];
            if (e.resonant) log_fit[c] = sol[j++];

            auto& cf = out.report.columns[c];
            cf.window_lo = *std::min_element(T[c].begin(), T[c].end());
            cf.window_hi = *std::max_element(T[c].begin(), T[c].end());
            cf.points = m;
            cf.residual_before = b.norm() / std::sqrt(m);
            cf.residual_after = res.norm() / std::sqrt(m);
            // misfit (set below): unweighted post-fit residual against the psi term and a roundoff floor
            double rmax = 0, fmax = 0;
            std::vector<std::pair<double, double>> tr(m);
            for (int i = 0; i < m; ++i) {
                const double t = T[c][i], ur = std::fabs(res[i]) * std::pow(t, e.beta);
                rmax = std::max(rmax, ur);
                fmax = std::max(fmax, std::fabs(P[c][i]));
                tr[i] = {t, ur};
            }
            rmax_col[c] = rmax;
            floor_col[c] = 1e-10 * fmax;
            thi_col[c] = cf.window_hi;
            std::sort(tr.begin(), tr.end());
            auto band = [&](int a0, int a1, double& tg, double& rr) {
                double lt = 0, s2 = 0;
                for (int i = a0; i < a1; ++i) {
                    lt += std::log(tr[i].first);
                    s2 += tr[i].second * tr[i].second;
                }
                tg = std::exp(lt / (a1 - a0));
                rr = std::sqrt(s2 / (a1 - a0));
            };
            double t1, r1, t2, r2;
            band(0, m / 2, t1, r1);
            band(m / 2, m, t2, r2);
            cf.decay_exponent = (r1 > 0 && r2 > 0) ? std::log(r2 / r1) / std::log(t2 / t1) : INFINITY;
        }
        // the expansion holds for k t << 1: wavenumbers beyond kmax are not resolved by the window
        shift = lowpass(shift, kmax);
        dpsi = lowpass(dpsi, kmax);
        if (e.resonant) log_fit = lowpass(log_fit, kmax);
        const double step = dpsi.abs().maxCoeff();
        out.report.shift_history.push_back(shift.abs().maxCoeff());
        out.report.psi_history.push_back(step);
        // safety net: stop at the smallest update instead of following growing ones
        if (iter >= 2 && step > out.report.psi_history[iter - 1]) {
            out.report.stopped_early = true;
            break;
        }
        out.g += shift;
        out.psi += dpsi;
    }
    if (e.resonant) {
        out.psi_log = log_rebuilt + log_fit;
        out.report.log_discrepancy = log_fit.abs().maxCoeff();
    }
    out.f = out.slope * x + out.g;
    // the psi scale is taken over all columns, so zeros of psi(x) do not count as misfits
    const double psi_sup = supnorm(out.psi);
    for (int c = 0; c < n; ++c)
        out.report.columns[c].misfit = rmax_col[c] / std::max(psi_sup * std::pow(thi_col[c], e.beta), floor_col[c]);
    double worst = 0;
    int wc = 0;
    for (int c = 0; c < n; ++c)
        if (out.report.columns[c].misfit > worst) {
            worst = out.report.columns[c].misfit;
            wc = c;
        }
    if (worst > o.misfit_tol) {
        std::ostringstream m;
        m << "extract_scattering_pde: post-fit residual " << worst << " of the psi term at column " << wc
          << " (measured decay exponent " << out.report.columns[wc].decay_exponent << ", beta = " << e.beta << ")";
        throw FitError(m.str());
    }
    return out;
}

StabilityReport stability_difference(const ScatteringData& a, const ScatteringData& b, double h, double data_norm) {
    if (a.f.size() != b.f.size() || a.psi.size() != b.psi.size()) throw ConfigError("stability_difference: mismatched grids");
    StabilityReport r;
    const Field df = a.f - b.f, dp = a.psi - b.psi;
    r.f_l2 = l2norm(df, h);
    r.f_sup = supnorm(df);
    r.psi_l2 = l2norm(dp, h);
    r.psi_sup = supnorm(dp);
    r.data_norm = data_norm;
    r.ratio = data_norm > 0 ? std::max(r.f_sup, r.psi_sup) / data_norm : (std::max(r.f_sup, r.psi_sup) == 0 ? 0 : INFINITY);
    return r;
}

double data_difference(const WaveState& a, const WaveState& b) {
    if (a.phi.size() != b.phi.size()) throw ConfigError("data_difference: mismatched grids");
    return std::max(supnorm(a.phi - b.phi), supnorm(a.phi_t - b.phi_t));
}

PipelineControls PipelineControls::rescaled(const Exponents& e, double lambda) const {
    if (!(lambda > 0)) throw ConfigError("rescaled: lambda must be positive");
    PipelineControls c = *this;
    const double ph = std::pow(lambda, -e.alpha);
    c.phi_stop *= ph;
    c.surface.phi_fit *= ph;
    c.s0 *= lambda;
    c.psi_lo *= lambda;
    c.psi_hi *= lambda;
    c.stage_tol *= lambda;
    c.scattering.window_lo *= lambda;
    c.scattering.window_hi *= lambda;
    return c;
}

namespace {

struct StageRun {
    std::vector<WaveState> states;
    long steps = 0;
};

// fine steps down to the window bottom, coarse steps to phi_stop, every step kept
StageRun run_stage(const Exponents& e, const WaveState& start, const PipelineControls& c) {
    StageRun r;
    r.states.push_back(start);
    const double far = start.time - 1e6 * std::max(1.0, std::fabs(start.time));
    const double phi_switch = e.c * std::pow(0.5 * c.psi_lo, -e.alpha);
    EvolveControls ec;
    ec.cfl = c.cfl;
    ec.record_steps = true;
    WaveState cur = start;
    if (cur.phi.maxCoeff() < phi_switch) {
        ec.dt_frac = c.dt_frac_fine;
        ec.phi_stop = phi_switch;
        auto a = evolve(e, cur, far, ec);
        r.steps += a.steps;
        if (a.status == EvolveStatus::Completed) throw BlowupNotReached("extract_pipeline: no blow-up within the time budget");
        r.states.insert(r.states.end(), a.states.begin(), a.states.end());
        cur = r.states.back();
    }
    ec.dt_frac = c.dt_frac_coarse;
    ec.phi_stop = c.phi_stop;
    auto b = evolve(e, cur, far, ec);
    r.steps += b.steps;
    if (b.status != EvolveStatus::PhiStop) throw BlowupNotReached("extract_pipeline: phi_stop not reached");
    r.states.insert(r.states.end(), b.states.begin(), b.states.end());
    return r;
}

std::vector<WaveState> thin_for_window(const std::vector<WaveState>& states, const Field& offset, double lo, double hi,
                                       int samples) {
    // offset: chart f minus surface f, so that bold-t relative to the surface is time + offset
    const double omin = offset.minCoeff(), omax = offset.maxCoeff();
    std::vector<const WaveState*> cand;
    for (const auto& s : states)
        if (s.time + omax >= lo && s.time + omin <= hi && s.time + omin > 0) cand.push_back(&s);
    std::sort(cand.begin(), cand.end(), [](auto a, auto b) { return a->time < b->time; });
    if (static_cast<int>(cand.size()) <= samples) {
        std::vector<WaveState> r;
        for (auto* s : cand) r.push_back(*s);
        return r;
    }
    std::vector<WaveState> r;
    size_t last = SIZE_MAX;
    const double a = std::max(cand.front()->time, 1e-300), b = cand.back()->time;
    for (int i = 0; i < samples; ++i) {
        const double target = a * std::pow(b / a, static_cast<double>(i) / (samples - 1));
        size_t best = 0;
        double bd = INFINITY;
        for (size_t k = 0; k < cand.size(); ++k) {
            const double d = std::fabs(std::log(cand[k]->time / target));
            if (d < bd) {
                bd = d;
                best = k;
            }
        }
        if (best != last) r.push_back(*cand[best]);
        last = best;
    }
    return r;
}

} // namespace

PipelineResult extract_pipeline(const Exponents& e, const WaveState& start, const PipelineControls& c) {
    if (!(c.psi_hi > c.psi_lo) || !(c.psi_lo > 0) || !(c.s0 > c.psi_hi) || c.max_stages < 1)
        throw ConfigError("extract_pipeline: need 0 < psi_lo < psi_hi < s0 and max_stages >= 1");
    PipelineResult out;
    WaveState cur = start;
    StageRun run;
    for (int k = 0; k < c.max_stages; ++k) {
        run = run_stage(e, cur, c);
        SurfaceFitOptions so = c.surface;
        so.relaxed = so.relaxed || k == 0;
        PipelineStage st;
        st.surface = extract_surface(e, run.states, so);
        st.s0 = cur.time;
        st.steps = run.steps;
        st.shift = st.surface.root.abs().maxCoeff();
        out.stages.push_back(st);
        if (k > 0 && st.shift < c.stage_tol) break;
        if (k + 1 == c.max_stages) break;
        // next chart: adapted to the current estimate, starting at s0 (clamped to the data)
        ChartPtr next = st.surface.chart();
        const Field delta = next->f_values() - cur.chart->f_values();
        double t_hi = -INFINITY, t_lo = INFINITY;
        for (const auto& s : run.states) {
            t_hi = std::max(t_hi, s.time);
            t_lo = std::min(t_lo, s.time);
        }
        const double s0 = std::min(c.s0, t_hi - delta.maxCoeff());
        if (s0 < c.psi_hi) {
            std::ostringstream m;
            m << "extract_pipeline: adapted slice s0 = " << s0 << " leaves no room above the window top " << c.psi_hi;
            throw NumericalError(m.str());
        }
        if (s0 < t_lo - delta.minCoeff()) {
            std::ostringstream m;
            m << "extract_pipeline: adapted slice s0 = " << s0 << " is not covered by the previous run (needs s0 >= "
              << t_lo - delta.minCoeff() << ", roughly the oscillation of the surface)";
            throw NumericalError(m.str());
        }
        cur = resample_to_chart(e, run.states, next, s0);
    }
    const SurfaceFit& surf = out.stages.back().surface;
    ScatteringFitOptions so = c.scattering;
    if (so.window_lo == 0 && so.window_hi == 0) {
        so.window_lo = c.psi_lo;
        so.window_hi = c.psi_hi;
    }
    const Field offset = run.states.front().chart->f_values() - surf.f;
    auto sub = thin_for_window(run.states, offset, so.window_lo, so.window_hi, c.psi_samples);
    out.scattering = extract_scattering_pde(e, sub, surf, so);
    return out;
}

} // namespace nlw
