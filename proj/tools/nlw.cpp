// Command line front end: one subcommand per pipeline stage.
#include "nlw/expr.hpp"
#include "nlw/runs.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <sstream>
#include <thread>

using namespace nlw;
namespace fs = std::filesystem;

namespace {

void print(const json& j) { std::cout << j.dump(2) << "\n"; }

std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ConfigError("not a number in list: '" + item + "'");
        }
    }
    if (out.empty()) throw ConfigError("empty list");
    return out;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Singular solutions of the focusing wave equation: ODE lab, ansatz, evolution, extraction."};
    app.require_subcommand(1);

    double p = 3;
    auto* cmd_exp = app.add_subcommand("exponents", "print the exponent table for p");
    cmd_exp->add_option("--p", p, "power p > 1")->required();

    double psi = 0.1, t_seed = 1e-3, t_end = 0.5, t0 = 0, rtol = 1e-10;
    std::string out, in, cfg_path, run_dir;
    auto* cmd_ode = app.add_subcommand("ode-run", "integrate the homogeneous ODE from a Fuchsian seed");
    cmd_ode->add_option("--p", p)->required();
    cmd_ode->add_option("--psi", psi, "scattering datum");
    cmd_ode->add_option("--t-seed", t_seed, "distance of the seed from the singular time");
    cmd_ode->add_option("--t-end", t_end, "final time");
    cmd_ode->add_option("--t0", t0, "singular time");
    cmd_ode->add_option("--rtol", rtol, "global relative tolerance");
    cmd_ode->add_option("--out", out, "trajectory CSV")->required();

    double tau_fit_max = 1e-2;
    auto* cmd_odex = app.add_subcommand("ode-extract", "recover (t0, psi) from a trajectory");
    cmd_odex->add_option("--in", in, "trajectory CSV")->required();
    cmd_odex->add_option("--tau-fit-max", tau_fit_max);
    cmd_odex->add_option("--out", out, "JSON output (default: stdout only)");

    std::string f_spec = "0", psi_spec = "0";
    double order = 6, L = 2 * M_PI, slope = 0;
    int n = 64;
    auto* cmd_ans = app.add_subcommand("ansatz-build", "build the singular ansatz as a series");
    cmd_ans->add_option("--p", p)->required();
    cmd_ans->add_option("--f-spec", f_spec, "surface profile expression or csv:<path>");
    cmd_ans->add_option("--psi-spec", psi_spec, "scattering profile expression or csv:<path>");
    cmd_ans->add_option("--order", order, "N");
    cmd_ans->add_option("--slope", slope, "linear part of f");
    cmd_ans->add_option("--n", n, "grid points");
    cmd_ans->add_option("--L", L, "period");
    cmd_ans->add_option("--out", out, "series JSON")->required();

    auto* cmd_pde = app.add_subcommand("pde-evolve", "evolve data from a config");
    cmd_pde->add_option("--config", cfg_path)->required();
    cmd_pde->add_option("--out", out, "states directory")->required();

    bool relaxed = false;
    auto* cmd_surf = app.add_subcommand("extract-surface", "blow-up surface from a run directory");
    cmd_surf->add_option("--run", run_dir, "states directory")->required();
    cmd_surf->add_flag("--relaxed", relaxed, "tolerate long extrapolation");
    cmd_surf->add_option("--out", out, "JSON output (default: <run>/surface.json)");

    auto* cmd_scat = app.add_subcommand(
        "extract-scattering",
        "(f, psi) from the last slice of a run, or the full construction round trip for a config with ansatz data");
    auto* o_run = cmd_scat->add_option("--run", run_dir, "states directory");
    auto* o_cfg = cmd_scat->add_option("--config", cfg_path, "config with [data] initial = \"ansatz\"");
    o_run->excludes(o_cfg);
    cmd_scat->add_option("--out", out, "output directory (default: the run directory or the config output)");

    std::string eps_list;
    int jobs = 0;
    auto* cmd_sweep = app.add_subcommand("stability-sweep", "extract (f, psi) for perturbations of the model");
    cmd_sweep->add_option("--config", cfg_path)->required();
    cmd_sweep->add_option("--eps-list", eps_list, "comma separated, overrides the config");
    cmd_sweep->add_option("--jobs", jobs, "worker threads (default: hardware concurrency)");
    cmd_sweep->add_option("--out", out, "output directory (overrides the config)");

    std::string mode = "backward";
    double q = 0;
    auto* cmd_en = app.add_subcommand("energy-report", "multiplier current diagnostics on a run directory");
    cmd_en->add_option("--run", run_dir)->required();
    cmd_en->add_option("--mode", mode)->check(CLI::IsMember({"backward", "forward"}));
    cmd_en->add_option("--q", q, "weight (0: config value or 4 kappa)");

    auto* cmd_plot = app.add_subcommand("plots", "write gnuplot-ready TSV files from a run directory");
    cmd_plot->add_option("--run", run_dir)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*cmd_exp) {
            print(to_json(derive_exponents(p)));
        } else if (*cmd_ode) {
            const Exponents e = derive_exponents(p);
            if (!(t_seed > 0) || !(t_end > t0 + t_seed)) throw ConfigError("ode-run: need 0 < t-seed < t-end - t0");
            OdeControls oc;
            oc.rtol = rtol;
            const auto tr = ode_integrate(e, ode_seed(e, psi, t0, t0 + t_seed), t_end, oc);
            write_trajectory(out, e, tr);
            print({{"p", p}, {"psi", psi}, {"t0", t0}, {"samples", tr.size()}, {"out", out}});
        } else if (*cmd_odex) {
            double pp = 0;
            const auto tr = read_trajectory(in, &pp);
            const Exponents e = derive_exponents(pp);
            ExtractOptions o;
            o.tau_fit_max = tau_fit_max;
            const auto s = extract_scattering(e, tr, o);
            json j{{"p", pp}, {"t0", s.t0}, {"psi", s.psi}, {"psi_hat", s.psi_hat}, {"relstd", s.relstd},
                   {"n_used", s.n_used}};
            if (!out.empty()) write_text(out, j.dump(2) + "\n");
            print(j);
        } else if (*cmd_ans) {
            const Grid1D g(L, n);
            AnsatzConfig ac;
            ac.e = derive_exponents(p);
            ac.chart = Chart::tilted(g, eval_profile(f_spec, g), slope);
            ac.psi = eval_profile(psi_spec, g);
            ac.N = order;
            ac.slope_limit = std::max(ac.slope_limit, ac.chart.max_slope() * 1.01);
            const Ansatz a = build_ansatz(ac);
            const auto sr = asymptotic_residual_slope(ac, a);
            json j{{"exponents", to_json(ac.e)},
                   {"N", ac.N},
                   {"f_spec", f_spec},
                   {"psi_spec", psi_spec},
                   {"slope", slope},
                   {"grid", {{"L", L}, {"n", n}}},
                   {"series", to_json(a.series)},
                   {"residual", {{"slope", sr.slope}, {"floor", sr.floor}, {"excess", sr.excess}, {"exact", sr.exact},
                                 {"t", sr.t}, {"norm", sr.norm}}},
                   {"warnings", a.diag.warnings}};
            write_text(out, j.dump(2) + "\n");
            print({{"terms", a.series.terms.size()}, {"residual_slope", sr.slope}, {"floor", sr.floor}, {"out", out}});
        } else if (*cmd_pde) {
            RunConfig cfg = load_config(cfg_path);
            const auto states = run_pde_evolve(cfg);
            write_states(out, states, cfg);
            print({{"slices", states.size()}, {"t_first", states.front().time}, {"t_last", states.back().time},
                   {"out", out}});
        } else if (*cmd_surf) {
            const RunConfig cfg = run_config(run_dir);
            SurfaceFitOptions o = cfg.pipeline.surface;
            o.relaxed = relaxed;
            const auto states = read_states(run_dir);
            const auto s = extract_surface(derive_exponents(cfg.p), states, o);
            const json j = to_json(s);
            write_text(out.empty() ? (fs::path(run_dir) / "surface.json").string() : out, j.dump(2) + "\n");
            print({{"f_sup", supnorm(s.f)}, {"slope_consistency", s.slope_consistency}, {"degraded", s.degraded}});
        } else if (*cmd_scat) {
            if (!cfg_path.empty()) {
                RunConfig cfg = load_config(cfg_path);
                if (cfg.initial != "ansatz") throw ConfigError("extract-scattering --config needs ansatz data");
                if (!out.empty()) cfg.output = out;
                print(run_scattering_construction(cfg).summary);
            } else if (!run_dir.empty()) {
                const RunConfig cfg = run_config(run_dir);
                const auto states = read_states(run_dir);
                PipelineControls pc = cfg.pipeline;
                pc.cfl = cfg.solver.cfl;
                const auto r = extract_pipeline(derive_exponents(cfg.p), states.back(), pc);
                json j = to_json(r.scattering);
                const Field x = config_grid(cfg).x();
                j["x"] = std::vector<double>(x.data(), x.data() + x.size());
                const fs::path d = out.empty() ? fs::path(run_dir) : fs::path(out);
                write_text((d / "scattering.json").string(), j.dump(2) + "\n");
                print({{"stages", r.stages.size()}, {"f_sup", supnorm(r.scattering.f)},
                       {"psi_sup", supnorm(r.scattering.psi)}, {"fit", j["fit"]}});
            } else {
                throw ConfigError("extract-scattering: give --run or --config");
            }
        } else if (*cmd_sweep) {
            RunConfig cfg = load_config(cfg_path);
            if (!eps_list.empty()) cfg.eps_list = parse_list(eps_list);
            if (!out.empty()) cfg.output = out;
            const int nj = jobs > 0 ? jobs : std::max(1u, std::thread::hardware_concurrency());
            print(run_stability_experiment(cfg, nj).summary);
        } else if (*cmd_en) {
            json j = run_energy_report(run_dir, mode, q);
            j.erase("slice_energies");
            print(j);
        } else if (*cmd_plot) {
            print({{"files", emit_plots(run_dir)}});
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
