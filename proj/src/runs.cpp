#include "nlw/runs.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;

namespace nlw {

namespace {

std::vector<double> vec(const Field& f) { return std::vector<double>(f.data(), f.data() + f.size()); }

Field field(const json& j) {
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Field>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::string read_text(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json read_json(const std::string& path) {
    try {
        return json::parse(read_text(path));
    } catch (const json::exception& err) {
        throw ConfigError(path + ": " + err.what());
    }
}

void write_json(const std::string& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json pipeline_json(const PipelineResult& r, const Grid1D& grid) {
    json st = json::array();
    for (const auto& s : r.stages)
        st.push_back({{"s0", s.s0},
                      {"steps", s.steps},
                      {"shift", s.shift},
                      {"degraded", s.surface.degraded},
                      {"slope_consistency", s.surface.slope_consistency}});
    json j = to_json(r.scattering);
    j["x"] = vec(grid.x());
    j["stages"] = st;
    return j;
}

template <class F> void parallel_for(size_t count, int jobs, F&& body) {
    std::vector<std::exception_ptr> errs(count);
    std::atomic<size_t> next{0};
    auto worker = [&] {
        for (size_t i; (i = next++) < count;) {
            try {
                body(i);
            } catch (...) {
                errs[i] = std::current_exception();
            }
        }
    };
    const int nt = std::max(1, std::min<int>(jobs, static_cast<int>(count)));
    if (nt == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < nt; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (auto& e : errs)
        if (e) std::rethrow_exception(e);
}

} // namespace

std::string num(double v) {
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

void write_text(const std::string& path, const std::string& text) {
    const fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path);
    out << text;
}

json to_json(const Exponents& e) {
    return {{"p", e.p},         {"alpha", e.alpha}, {"beta", e.beta},         {"gamma", e.gamma},
            {"kappa", e.kappa}, {"c", e.c},         {"resonant", e.resonant}, {"floor_2kappa", e.floor_2kappa()}};
}

json to_json(const RunConfig& c) {
    const auto& pc = c.pipeline;
    return {{"p", c.p},
            {"seed", c.seed},
            {"output", c.output},
            {"grid", {{"L", c.L}, {"n", c.n}}},
            {"data",
             {{"initial", c.initial},
              {"f", c.f},
              {"slope", c.slope},
              {"psi", c.psi},
              {"N", c.N},
              {"t_seed", c.t_seed},
              {"eps", c.eps},
              {"eps_list", c.eps_list},
              {"g0", c.g0},
              {"g1", c.g1},
              {"random_modes", c.random_modes}}},
            {"solver",
             {{"cfl", c.solver.cfl},
              {"dt_frac", c.solver.dt_frac},
              {"phi_max", c.solver.phi_max},
              {"phi_stop", c.solver.phi_stop},
              {"t_end", c.t_end},
              {"outputs", c.outputs},
              {"record_steps", c.solver.record_steps}}},
            {"construction", {{"t_forward", c.t_forward}, {"t_resample", c.t_resample}}},
            {"fit",
             {{"phi_stop", pc.phi_stop},
              {"s0", pc.s0},
              {"psi_lo", pc.psi_lo},
              {"psi_hi", pc.psi_hi},
              {"psi_samples", pc.psi_samples},
              {"dt_frac_fine", pc.dt_frac_fine},
              {"dt_frac_coarse", pc.dt_frac_coarse},
              {"max_stages", pc.max_stages},
              {"stage_tol", pc.stage_tol},
              {"surface_window_lo", pc.surface.window_lo},
              {"surface_window_hi", pc.surface.window_hi},
              {"surface_degree", pc.surface.degree},
              {"misfit_tol", pc.scattering.misfit_tol},
              {"iterations", pc.scattering.iterations},
              {"N", pc.scattering.N}}},
            {"ode",
             {{"psi", c.ode_psi},
              {"t0", c.ode_t0},
              {"t_seed", c.ode_t_seed},
              {"t_end", c.ode_t_end},
              {"rtol", c.ode.rtol},
              {"tau_min", c.ode.tau_min},
              {"tau_fit_max", c.ode_fit.tau_fit_max},
              {"spread_tol", c.ode_fit.spread_tol}}},
            {"energy", {{"q", c.q}, {"tau_lo", c.tau_lo}, {"tau_hi", c.tau_hi}, {"levels", c.levels}, {"N", c.energy_N}, {"t_min", c.t_min}}}};
}

json to_json(const SurfaceFit& s) {
    return {{"slope", s.slope},
            {"x", vec(s.grid.x())},
            {"g", vec(s.g)},
            {"f", vec(s.f)},
            {"root", vec(s.root)},
            {"tau_slope", vec(s.tau_slope)},
            {"extrapolation_max", s.extrapolation.size() ? s.extrapolation.maxCoeff() : 0.0},
            {"slope_consistency", s.slope_consistency},
            {"degraded", s.degraded}};
}

json to_json(const ScatteringData& s) {
    const auto& r = s.report;
    double misfit = 0, decay_min = 1e300;
    for (const auto& c : r.columns) {
        misfit = std::max(misfit, c.misfit);
        decay_min = std::min(decay_min, c.decay_exponent);
    }
    json j{{"slope", s.slope},
           {"g", vec(s.g)},
           {"f", vec(s.f)},
           {"psi", vec(s.psi)},
           {"psi_log", s.psi_log ? json(vec(*s.psi_log)) : json(nullptr)},
           {"fit",
            {{"N", r.N},
             {"slices", r.slices},
             {"kmax", r.kmax},
             {"weight_power", r.weight_power},
             {"window", r.columns.empty() ? json::array() : json::array({r.columns[0].window_lo, r.columns[0].window_hi})},
             {"misfit_max", misfit},
             {"decay_exponent_min", r.columns.empty() ? 0.0 : decay_min},
             {"log_discrepancy", r.log_discrepancy},
             {"shift_history", r.shift_history},
             {"psi_history", r.psi_history},
             {"stopped_early", r.stopped_early}}}};
    return j;
}

json to_json(const EnergyReport& r) {
    json se = json::array();
    for (const auto& [t, E] : r.slice_energies) se.push_back({t, E});
    return {{"q", r.q},
            {"slice_energies", se},
            {"bulk_integral", r.bulk_integral},
            {"boundary_fluxes", r.boundary_fluxes},
            {"divergence_residual", r.divergence_residual},
            {"coercivity_ratio_range", {r.coercivity_ratio_range.first, r.coercivity_ratio_range.second}},
            {"coercivity_points", r.coercivity_points},
            {"bulk_energy", r.bulk_energy},
            {"constant_C", r.constant_C},
            {"warnings", r.warnings}};
}

json to_json(const FuchsianSeries& s) {
    json terms = json::array();
    for (const auto& t : s.terms)
        terms.push_back({{"exponent", t.exponent}, {"log_power", t.log_power}, {"coeff", vec(t.coeff)}});
    return {{"p", s.base.p}, {"width", s.width}, {"order", std::isfinite(s.order) ? json(s.order) : json(nullptr)},
            {"terms", terms}};
}

void write_states(const std::string& dir, const std::vector<WaveState>& states, const RunConfig& cfg,
                  const json& extra) {
    if (states.empty()) throw ConfigError("write_states: nothing to write");
    fs::create_directories(dir);
    const Chart& ch = *states.front().chart;
    json slices = json::array();
    const Field x = ch.grid.x();
    for (size_t k = 0; k < states.size(); ++k) {
        const auto& s = states[k];
        if (s.chart != states.front().chart) throw ConfigError("write_states: slices must share one chart");
        char name[32];
        std::snprintf(name, sizeof name, "slice_%05zu.csv", k);
        std::string out = "# time=" + num(s.time) + "\ny,phi,phi_t\n";
        for (Eigen::Index i = 0; i < s.phi.size(); ++i)
            out += num(x[i]) + "," + num(s.phi[i]) + "," + num(s.phi_t[i]) + "\n";
        write_text((fs::path(dir) / name).string(), out);
        slices.push_back({{"file", name}, {"time", s.time}});
    }
    json m{{"kind", "states"},
           {"chart", {{"L", ch.grid.L}, {"n", ch.grid.n}, {"slope", ch.slope}, {"g", vec(ch.g)}}},
           {"slices", slices},
           {"config", to_json(cfg)},
           {"extra", extra}};
    write_json((fs::path(dir) / "manifest.json").string(), m);
    write_text((fs::path(dir) / "run.toml").string(), config_to_toml(cfg));
}

std::vector<WaveState> read_states(const std::string& dir, json* manifest) {
    const json m = read_json((fs::path(dir) / "manifest.json").string());
    if (m.value("kind", "") != "states") throw ConfigError(dir + ": not a states directory");
    const auto& c = m.at("chart");
    const Grid1D g(c.at("L").get<double>(), c.at("n").get<int>());
    auto ch = std::make_shared<const Chart>(Chart::tilted(g, field(c.at("g")), c.at("slope").get<double>()));
    std::vector<WaveState> out;
    for (const auto& s : m.at("slices")) {
        std::istringstream in(read_text((fs::path(dir) / s.at("file").get<std::string>()).string()));
        std::string line;
        WaveState w{ch, s.at("time").get<double>(), Field(g.n), Field(g.n)};
        int i = 0;
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == '#' || line[0] == 'y') continue;
            if (i >= g.n) throw ConfigError(dir + ": slice has too many rows");
            double y, a, b;
            if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &y, &a, &b) != 3) throw ConfigError(dir + ": bad row " + line);
            w.phi[i] = a;
            w.phi_t[i] = b;
            ++i;
        }
        if (i != g.n) throw ConfigError(dir + ": slice has too few rows");
        out.push_back(std::move(w));
    }
    if (manifest) *manifest = m;
    return out;
}

RunConfig run_config(const std::string& dir) {
    const auto path = (fs::path(dir) / "run.toml").string();
    return parse_config(read_text(path), path);
}

void write_trajectory(const std::string& path, const Exponents& e, const Trajectory& tr) {
    std::string out = "# p=" + num(e.p) + "\nt,phi,phi_t\n";
    for (const auto& s : tr)
        out += s.t.str(36, std::ios_base::scientific) + "," + s.phi.str(36, std::ios_base::scientific) + "," +
               s.phi_t.str(36, std::ios_base::scientific) + "\n";
    write_text(path, out);
}

Trajectory read_trajectory(const std::string& path, double* p) {
    std::istringstream in(read_text(path));
    std::string line;
    Trajectory tr;
    bool have_p = false;
    while (std::getline(in, line)) {
        if (line.rfind("# p=", 0) == 0) {
            if (p) *p = std::stod(line.substr(4));
            have_p = true;
            continue;
        }
        if (line.empty() || line[0] == '#' || line[0] == 't') continue;
        const auto a = line.find(','), b = line.find(',', a + 1);
        if (a == std::string::npos || b == std::string::npos) throw ConfigError(path + ": bad row " + line);
        try {
            tr.push_back(OdeState{qreal(line.substr(0, a)), qreal(line.substr(a + 1, b - a - 1)), qreal(line.substr(b + 1))});
        } catch (const std::exception&) {
            throw ConfigError(path + ": bad number in row " + line);
        }
    }
    if (!have_p) throw ConfigError(path + ": missing '# p=' header");
    if (tr.size() < 2) throw ConfigError(path + ": trajectory too short");
    return tr;
}

std::vector<WaveState> run_pde_evolve(const RunConfig& cfg) {
    const Exponents e = derive_exponents(cfg.p);
    const WaveState s = config_initial_state(cfg, cfg.eps);
    EvolveControls c = cfg.solver;
    double target;
    if (cfg.initial == "ansatz") {
        target = cfg.t_end != 0 ? cfg.t_end : cfg.t_forward;
        c.phi_stop = 0;
    } else {
        target = cfg.t_end != 0 ? cfg.t_end : s.time - 1e6;
    }
    if (cfg.outputs > 0 && cfg.t_end != 0)
        for (int k = 1; k <= cfg.outputs; ++k) c.output_times.push_back(s.time + (target - s.time) * k / (cfg.outputs + 1));
    auto r = evolve(e, s, target, c);
    std::vector<WaveState> out{s};
    out.insert(out.end(), r.states.begin(), r.states.end());
    return out;
}

ConstructionReport run_scattering_construction(const RunConfig& cfg) {
    const Exponents e = derive_exponents(cfg.p);
    const AnsatzConfig ac = config_ansatz(cfg);
    const Ansatz a = build_ansatz(ac);
    auto ch = std::make_shared<const Chart>(ac.chart);
    const WaveState seed = seed_from_ansatz(e, a, ch, cfg.t_seed);
    EvolveControls ec = cfg.solver;
    ec.record_steps = true;
    ec.phi_stop = 0;
    ec.output_times.clear();
    auto fw = evolve(e, seed, cfg.t_forward, ec);
    std::vector<WaveState> hist{seed};
    hist.insert(hist.end(), fw.states.begin(), fw.states.end());
    auto standard = std::make_shared<const Chart>(Chart::standard(ch->grid));
    const WaveState start = resample_to_chart(e, hist, standard, cfg.t_resample);
    PipelineControls pc = cfg.pipeline;
    pc.cfl = cfg.solver.cfl;

    ConstructionReport r;
    r.result = extract_pipeline(e, start, pc);
    r.forward_steps = fw.steps;
    r.f_in = ac.chart.f_values();
    r.psi_in = ac.psi;
    r.f_error = supnorm(r.result.scattering.f - r.f_in);
    const double ps = supnorm(r.psi_in);
    r.psi_error = supnorm(r.result.scattering.psi - r.psi_in) / (ps > 0 ? ps : 1.0);
    const bool recovered = r.f_error <= 1e-4 && r.psi_error <= (ps > 0 ? 0.02 : 1e-6);
    json sc = pipeline_json(r.result, ch->grid);
    sc["f_in"] = vec(r.f_in);
    sc["psi_in"] = vec(r.psi_in);
    r.summary = {{"exponents", to_json(e)},
                 {"N", ac.N},
                 {"t_seed", cfg.t_seed},
                 {"t_forward", cfg.t_forward},
                 {"t_resample", cfg.t_resample},
                 {"forward_steps", r.forward_steps},
                 {"f_error", r.f_error},
                 {"psi_error", r.psi_error},
                 {"psi_error_kind", ps > 0 ? "relative" : "absolute"},
                 {"recovered", recovered},
                 {"stages", sc["stages"]}};
    if (!cfg.output.empty()) {
        const fs::path d(cfg.output);
        fs::create_directories(d);
        write_text((d / "run.toml").string(), config_to_toml(cfg));
        write_json((d / "manifest.json").string(),
                   json{{"kind", "construction"}, {"config", to_json(cfg)}, {"summary", r.summary}});
        write_json((d / "scattering.json").string(), sc);
        std::string csv = "x,f_in,f,psi_in,psi\n";
        const Field x = ch->grid.x();
        for (Eigen::Index i = 0; i < x.size(); ++i)
            csv += num(x[i]) + "," + num(r.f_in[i]) + "," + num(r.result.scattering.f[i]) + "," + num(r.psi_in[i]) +
                   "," + num(r.result.scattering.psi[i]) + "\n";
        write_text((d / "profiles.csv").string(), csv);
    }
    return r;
}

SweepReport run_stability_experiment(const RunConfig& cfg, int jobs) {
    if (cfg.eps_list.empty()) throw ConfigError("stability sweep: empty eps list");
    const Exponents e = derive_exponents(cfg.p);
    const Grid1D g = config_grid(cfg);
    PipelineControls pc = cfg.pipeline;
    pc.cfl = cfg.solver.cfl;
    pc.phi_stop = std::max(pc.phi_stop, cfg.solver.phi_stop);
    SweepReport rep;
    rep.runs.resize(cfg.eps_list.size());
    parallel_for(cfg.eps_list.size(), jobs, [&](size_t i) {
        auto& r = rep.runs[i];
        r.eps = cfg.eps_list[i];
        r.initial = config_initial_state(cfg, r.eps);
        r.data = extract_pipeline(e, r.initial, pc).scattering;
    });
    json runs = json::array();
    double C = 0;
    for (const auto& r : rep.runs) {
        const double fs_ = supnorm(r.data.f), ps = supnorm(r.data.psi);
        json j{{"eps", r.eps}, {"f_sup", fs_}, {"psi_sup", ps}, {"f_l2", l2norm(r.data.f, g.h())},
               {"psi_l2", l2norm(r.data.psi, g.h())}};
        if (r.eps != 0) {
            j["f_over_eps"] = fs_ / std::fabs(r.eps);
            j["psi_over_eps"] = ps / std::fabs(r.eps);
            C = std::max(C, fs_ / std::fabs(r.eps));
        }
        j["fit"] = to_json(r.data)["fit"];
        runs.push_back(j);
    }
    json pairs = json::array();
    for (size_t i = 0; i + 1 < rep.runs.size(); ++i) {
        const double dn = data_difference(rep.runs[i].initial, rep.runs[i + 1].initial);
        rep.pairs.push_back(stability_difference(rep.runs[i].data, rep.runs[i + 1].data, g.h(), dn));
        const auto& s = rep.pairs.back();
        pairs.push_back({{"eps", {rep.runs[i].eps, rep.runs[i + 1].eps}},
                         {"data_norm", s.data_norm},
                         {"f_sup", s.f_sup},
                         {"psi_sup", s.psi_sup},
                         {"f_l2", s.f_l2},
                         {"psi_l2", s.psi_l2},
                         {"ratio", s.ratio}});
    }
    rep.summary = {{"exponents", to_json(e)}, {"runs", runs}, {"pairs", pairs}, {"C_f", C}};
    if (!cfg.output.empty()) {
        const fs::path d(cfg.output);
        fs::create_directories(d);
        write_text((d / "run.toml").string(), config_to_toml(cfg));
        write_json((d / "manifest.json").string(), json{{"kind", "sweep"}, {"config", to_json(cfg)}});
        write_json((d / "sweep.json").string(), rep.summary);
        for (size_t i = 0; i < rep.runs.size(); ++i) {
            json sc = to_json(rep.runs[i].data);
            sc["x"] = vec(g.x());
            sc["eps"] = rep.runs[i].eps;
            write_json((d / ("scattering_" + std::to_string(i) + ".json")).string(), sc);
        }
    }
    return rep;
}

json run_energy_report(const std::string& dir, const std::string& mode, double q) {
    const RunConfig cfg = run_config(dir);
    const Exponents e = derive_exponents(cfg.p);
    const auto states = read_states(dir);
    if (q == 0) q = cfg.q > 0 ? cfg.q : 4 * e.kappa;
    EnergyReport r;
    if (mode == "backward") {
        if (cfg.initial != "ansatz") throw ConfigError("energy-report backward: the run must start from ansatz data");
        AnsatzConfig ac = config_ansatz(cfg);
        if (cfg.energy_N > 0) ac.N = cfg.energy_N;
        std::vector<WaveState> kept;
        for (const auto& s : states)
            if (s.time >= cfg.t_min) kept.push_back(s);
        r = backward_current_report(e, *states.front().chart, remainder_slices(e, kept, build_ansatz(ac)), q);
    } else if (mode == "forward") {
        std::vector<JacobianFields> lv;
        for (int k = 0; k < cfg.levels; ++k)
            lv.push_back(jacobian_fields(e, states, cfg.tau_lo + (cfg.tau_hi - cfg.tau_lo) * k / (cfg.levels - 1)));
        r = forward_current_report(e, lv, q);
    } else {
        throw ConfigError("energy-report: mode must be backward or forward");
    }
    json j = to_json(r);
    j["mode"] = mode;
    write_json((fs::path(dir) / ("energy_" + mode + ".json")).string(), j);
    std::string csv = mode == "forward" ? "tau,E\n" : "t,E\n";
    for (const auto& [t, E] : r.slice_energies) csv += num(t) + "," + num(E) + "\n";
    write_text((fs::path(dir) / ("energy_" + mode + ".csv")).string(), csv);
    return j;
}

std::vector<std::string> emit_plots(const std::string& dir) {
    if (!fs::is_directory(dir)) throw ConfigError("plots: no such directory " + dir);
    const fs::path d(dir);
    std::vector<std::string> made;
    auto emit = [&](const std::string& name, const std::string& header, const std::string& body) {
        write_text((d / name).string(), header + body);
        made.push_back(name);
    };
    if (fs::exists(d / "series.json")) {
        const json j = read_json((d / "series.json").string());
        const auto& rs = j.at("residual");
        std::string body;
        const auto t = rs.at("t").get<std::vector<double>>(), nrm = rs.at("norm").get<std::vector<double>>();
        for (size_t i = 0; i < t.size(); ++i) body += num(t[i]) + "\t" + num(nrm[i]) + "\n";
        emit("residual.tsv",
             "# ansatz residual sup|P[phi_N]| against bold-t; expected log-log slope " +
                 num(rs.at("floor").get<double>()) + "\n# t\tresidual\n",
             body);
    }
    if (fs::exists(d / "traj.csv")) {
        double p = 0;
        const auto tr = read_trajectory((d / "traj.csv").string(), &p);
        const Exponents e = derive_exponents(p);
        std::string body;
        for (const auto& s : tau_gauge(e, tr))
            if (s.tau > 0) body += num(s.tau) + "\t" + num(s.omega2 / std::pow(s.tau, 2 * e.kappa)) + "\n";
        emit("omega_flatness.tsv", "# Omega-ring^2 tau^{-2 kappa} against tau; flat for exact solutions\n# tau\tratio\n",
             body);
    }
    for (const auto& name : {std::string("scattering.json"), std::string("scattering_0.json")}) {
        if (!fs::exists(d / name)) continue;
        const json j = read_json((d / name).string());
        const auto x = j.at("x").get<std::vector<double>>(), f = j.at("f").get<std::vector<double>>(),
                   psi = j.at("psi").get<std::vector<double>>();
        const bool inputs = j.contains("f_in");
        std::vector<double> fi, pi;
        if (inputs) {
            fi = j.at("f_in").get<std::vector<double>>();
            pi = j.at("psi_in").get<std::vector<double>>();
        }
        std::string body;
        for (size_t i = 0; i < x.size(); ++i) {
            body += num(x[i]) + "\t" + num(f[i]) + "\t" + num(psi[i]);
            if (inputs) body += "\t" + num(fi[i]) + "\t" + num(pi[i]);
            body += "\n";
        }
        emit("profiles.tsv",
             std::string("# recovered surface and scattering profiles\n# x\tf\tpsi") + (inputs ? "\tf_in\tpsi_in" : "") +
                 "\n",
             body);
        break;
    }
    for (const std::string mode : {"backward", "forward"}) {
        const auto path = d / ("energy_" + mode + ".json");
        if (!fs::exists(path)) continue;
        const json j = read_json(path.string());
        std::string body;
        for (const auto& se : j.at("slice_energies")) body += num(se[0].get<double>()) + "\t" + num(se[1].get<double>()) + "\n";
        emit("energy_" + mode + ".tsv",
             "# " + mode + " current slice energies, q = " + num(j.at("q").get<double>()) + "\n# " +
                 (mode == "forward" ? "tau" : "t") + "\tE\n",
             body);
    }
    if (fs::exists(d / "sweep.json")) {
        const json j = read_json((d / "sweep.json").string());
        std::string body;
        for (const auto& r : j.at("runs"))
            if (r.at("eps").get<double>() != 0)
                body += num(std::fabs(r.at("eps").get<double>())) + "\t" + num(r.at("f_sup").get<double>()) + "\t" +
                        num(r.at("psi_sup").get<double>()) + "\n";
        emit("sweep.tsv", "# sup norms of the extracted data against eps; slope 1 on log-log\n# eps\tf_sup\tpsi_sup\n",
             body);
    }
    if (made.empty()) throw ConfigError("plots: no artifacts found in " + dir);
    return made;
}

} // namespace nlw
