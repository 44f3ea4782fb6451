#include "nlw/config.hpp"

#include "nlw/expr.hpp"

#include <toml.hpp>

#include <cmath>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>

namespace nlw {

namespace {

std::string where(const std::string& src, const toml::source_region& r) {
    std::ostringstream m;
    m << src;
    if (r.begin.line > 0) m << ": line " << r.begin.line;
    return m.str();
}

// Reads the keys of one table, remembering which were seen so the rest can be rejected.
class Section {
public:
    Section(const toml::table& t, std::string prefix, const std::string& src)
        : t_(t), prefix_(std::move(prefix)), src_(src) {}

    [[noreturn]] void fail(const toml::node& n, const std::string& key, const std::string& msg) const {
        throw ConfigError(where(src_, n.source()) + ": " + name(key) + ": " + msg);
    }

    bool has(const std::string& key) const { return t_.contains(key); }

    void real(const std::string& key, double& out, std::function<bool(double)> ok = {}, const char* rule = "") {
        const toml::node* n = take(key);
        if (!n) return;
        if (auto v = n->value<double>(); v && (n->is_floating_point() || n->is_integer()))
            out = *v;
        else
            fail(*n, key, "expected a number");
        if (ok && !ok(out)) fail(*n, key, rule);
    }
    void integer(const std::string& key, int& out, std::function<bool(long)> ok = {}, const char* rule = "") {
        const toml::node* n = take(key);
        if (!n) return;
        if (!n->is_integer()) fail(*n, key, "expected an integer");
        const long v = n->value<long>().value();
        if (ok && !ok(v)) fail(*n, key, rule);
        out = static_cast<int>(v);
    }
    void text(const std::string& key, std::string& out, std::function<bool(const std::string&)> ok = {},
              const char* rule = "") {
        const toml::node* n = take(key);
        if (!n) return;
        if (!n->is_string()) fail(*n, key, "expected a string");
        out = n->value<std::string>().value();
        if (ok && !ok(out)) fail(*n, key, rule);
    }
    void boolean(const std::string& key, bool& out) {
        const toml::node* n = take(key);
        if (!n) return;
        if (!n->is_boolean()) fail(*n, key, "expected true or false");
        out = n->value<bool>().value();
    }
    void reals(const std::string& key, std::vector<double>& out, std::function<bool(double)> ok = {},
               const char* rule = "") {
        const toml::node* n = take(key);
        if (!n) return;
        const auto* arr = n->as_array();
        if (!arr || arr->empty()) fail(*n, key, "expected a non-empty array of numbers");
        out.clear();
        for (const auto& el : *arr) {
            auto v = el.value<double>();
            if (!v || !(el.is_floating_point() || el.is_integer())) fail(el, key, "expected a number");
            if (ok && !ok(*v)) fail(el, key, rule);
            out.push_back(*v);
        }
    }
    void finish() const {
        for (const auto& [k, v] : t_)
            if (!seen_.count(std::string(k.str())) && !v.is_table())
                throw ConfigError(where(src_, v.source()) + ": " + name(std::string(k.str())) + ": unknown key");
    }
    const toml::node* node(const std::string& key) const { return t_.get(key); }
    void mark(const std::string& key) { seen_.insert(key); }

private:
    const toml::node* take(const std::string& key) {
        seen_.insert(key);
        return t_.get(key);
    }
    std::string name(const std::string& key) const { return prefix_.empty() ? key : prefix_ + "." + key; }

    const toml::table& t_;
    std::string prefix_;
    const std::string& src_;
    std::set<std::string> seen_;
};

const auto positive = [](double v) { return v > 0; };
const auto nonneg = [](double v) { return v >= 0; };

} // namespace

RunConfig parse_config(std::string_view text, const std::string& source) {
    toml::table root;
    try {
        root = toml::parse(text, source);
    } catch (const toml::parse_error& err) {
        std::ostringstream m;
        m << source << ": line " << err.source().begin.line << ": " << err.description();
        throw ConfigError(m.str());
    }
    RunConfig c;
    c.source_text = std::string(text);
    static const std::set<std::string> tables{"grid", "data", "solver", "construction", "fit", "ode", "energy"};
    for (const auto& [k, v] : root)
        if (v.is_table() && !tables.count(std::string(k.str())))
            throw ConfigError(where(source, v.source()) + ": " + std::string(k.str()) + ": unknown table");
    auto sub = [&](const char* name) -> const toml::table& {
        static const toml::table empty;
        if (auto* n = root.get(name)) {
            if (!n->is_table()) throw ConfigError(where(source, n->source()) + ": " + name + ": expected a table");
            return *n->as_table();
        }
        return empty;
    };

    Section top(root, "", source);
    top.real("p", c.p, [](double p) { return p > 1; }, "must exceed 1");
    if (const auto* n = root.get("seed")) {
        if (!n->is_integer() || n->value<long>().value() < 0) top.fail(*n, "seed", "expected a non-negative integer");
        c.seed = static_cast<std::uint64_t>(n->value<long>().value());
    }
    top.mark("seed");
    top.text("output", c.output);
    top.finish();

    Section grid(sub("grid"), "grid", source);
    grid.real("L", c.L, positive, "must be positive");
    grid.integer("n", c.n, [](long n) { return n >= 8; }, "must be at least 8");
    grid.finish();

    Section data(sub("data"), "data", source);
    data.text("initial", c.initial,
              [](const std::string& s) { return s == "perturbed" || s == "ansatz" || s == "model"; },
              "must be one of perturbed, ansatz, model");
    data.text("f", c.f);
    data.real("slope", c.slope, [](double v) { return std::fabs(v) < 1; }, "must satisfy |slope| < 1");
    data.text("psi", c.psi);
    data.real("N", c.N, nonneg, "must be non-negative");
    data.real("t_seed", c.t_seed, positive, "must be positive");
    data.real("eps", c.eps);
    data.reals("eps_list", c.eps_list);
    data.text("g0", c.g0);
    data.text("g1", c.g1);
    data.integer("random_modes", c.random_modes, [](long v) { return v >= 0; }, "must be non-negative");
    // profiles must evaluate on the grid
    const Grid1D g(c.L, c.n);
    for (auto [key, spec] : {std::pair{"f", &c.f}, {"psi", &c.psi}, {"g0", &c.g0}, {"g1", &c.g1}}) {
        try {
            eval_profile(*spec, g);
        } catch (const ConfigError& err) {
            const toml::node* n = data.node(key);
            if (n) data.fail(*n, key, err.what());
            throw ConfigError(source + ": data." + key + ": " + err.what());
        }
    }
    data.finish();

    Section solver(sub("solver"), "solver", source);
    solver.real("cfl", c.solver.cfl, [](double v) { return v > 0 && v <= 1; }, "must be in (0, 1]");
    if (!solver.has("dt_frac") && c.initial == "ansatz") c.solver.dt_frac = 1e-3;
    solver.real("dt_frac", c.solver.dt_frac, positive, "must be positive");
    solver.real("phi_max", c.solver.phi_max, positive, "must be positive");
    solver.real("phi_stop", c.solver.phi_stop, nonneg, "must be non-negative");
    solver.real("t_end", c.t_end);
    solver.integer("outputs", c.outputs, [](long v) { return v >= 0; }, "must be non-negative");
    solver.boolean("record_steps", c.solver.record_steps);
    solver.finish();

    Section cons(sub("construction"), "construction", source);
    cons.real("t_forward", c.t_forward, positive, "must be positive");
    cons.real("t_resample", c.t_resample, positive, "must be positive");
    cons.finish();

    auto& pc = c.pipeline;
    Section fit(sub("fit"), "fit", source);
    fit.real("phi_stop", pc.phi_stop, positive, "must be positive");
    fit.real("s0", pc.s0, positive, "must be positive");
    fit.real("psi_lo", pc.psi_lo, positive, "must be positive");
    fit.real("psi_hi", pc.psi_hi, positive, "must be positive");
    fit.integer("psi_samples", pc.psi_samples, [](long v) { return v >= 8; }, "must be at least 8");
    fit.real("dt_frac_fine", pc.dt_frac_fine, positive, "must be positive");
    fit.real("dt_frac_coarse", pc.dt_frac_coarse, positive, "must be positive");
    fit.integer("max_stages", pc.max_stages, [](long v) { return v >= 1; }, "must be at least 1");
    fit.real("stage_tol", pc.stage_tol, positive, "must be positive");
    fit.real("surface_window_lo", pc.surface.window_lo, positive, "must be positive");
    fit.real("surface_window_hi", pc.surface.window_hi, positive, "must be positive");
    fit.integer("surface_degree", pc.surface.degree, [](long v) { return v >= 1 && v <= 6; }, "must be in 1..6");
    fit.real("misfit_tol", pc.scattering.misfit_tol, positive, "must be positive");
    fit.integer("iterations", pc.scattering.iterations, [](long v) { return v >= 1; }, "must be at least 1");
    fit.real("N", pc.scattering.N, nonneg, "must be non-negative");
    pc.cfl = c.solver.cfl;
    if (!(pc.psi_lo < pc.psi_hi)) throw ConfigError(source + ": fit.psi_hi: must exceed fit.psi_lo");
    if (!(pc.surface.window_lo < pc.surface.window_hi))
        throw ConfigError(source + ": fit.surface_window_hi: must exceed fit.surface_window_lo");
    fit.finish();

    Section ode(sub("ode"), "ode", source);
    ode.real("psi", c.ode_psi);
    ode.real("t0", c.ode_t0);
    ode.real("t_seed", c.ode_t_seed, positive, "must be positive");
    ode.real("t_end", c.ode_t_end);
    ode.real("rtol", c.ode.rtol, positive, "must be positive");
    ode.real("tau_min", c.ode.tau_min, positive, "must be positive");
    ode.real("tau_fit_max", c.ode_fit.tau_fit_max, positive, "must be positive");
    ode.real("spread_tol", c.ode_fit.spread_tol, positive, "must be positive");
    ode.finish();
    if (!(c.ode_t_end > c.ode_t0 + c.ode_t_seed))
        throw ConfigError(source + ": ode.t_end: must lie beyond t0 + t_seed");

    Section en(sub("energy"), "energy", source);
    en.real("q", c.q, nonneg, "must be non-negative");
    en.real("tau_lo", c.tau_lo, positive, "must be positive");
    en.real("tau_hi", c.tau_hi, positive, "must be positive");
    en.integer("levels", c.levels, [](long v) { return v >= 3; }, "must be at least 3");
    en.real("N", c.energy_N, nonneg, "must be non-negative");
    en.real("t_min", c.t_min, nonneg, "must be non-negative");
    en.finish();
    if (!(c.tau_lo < c.tau_hi)) throw ConfigError(source + ": energy.tau_hi: must exceed energy.tau_lo");
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path);
}

Grid1D config_grid(const RunConfig& cfg) { return Grid1D(cfg.L, cfg.n); }

ChartPtr config_chart(const RunConfig& cfg) {
    const Grid1D g = config_grid(cfg);
    return std::make_shared<const Chart>(Chart::tilted(g, eval_profile(cfg.f, g), cfg.slope));
}

Field config_psi(const RunConfig& cfg) { return eval_profile(cfg.psi, config_grid(cfg)); }

AnsatzConfig config_ansatz(const RunConfig& cfg) {
    AnsatzConfig a;
    a.e = derive_exponents(cfg.p);
    a.chart = *config_chart(cfg);
    a.psi = config_psi(cfg);
    a.N = cfg.N > 0 ? cfg.N : 2 * a.e.beta + 4;
    a.slope_limit = std::max(a.slope_limit, a.chart.max_slope() * 1.01);
    return a;
}

Field config_g0(const RunConfig& cfg) {
    const Grid1D g = config_grid(cfg);
    if (cfg.random_modes == 0) {
        Field g0 = eval_profile(cfg.g0, g);
        const double s = supnorm(g0);
        return s > 0 ? Field(g0 / s) : g0;
    }
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> nd;
    const Field x = g.x();
    Field g0 = Field::Zero(cfg.n);
    for (int k = 1; k <= cfg.random_modes; ++k) {
        const double k0 = 2 * M_PI * k / cfg.L;
        const double a = nd(rng), b = nd(rng);
        g0 += (a * (k0 * x).cos() + b * (k0 * x).sin()) / (k * k);
    }
    return g0 / supnorm(g0);
}

WaveState config_initial_state(const RunConfig& cfg, double eps) {
    const Exponents e = derive_exponents(cfg.p);
    const Grid1D g = config_grid(cfg);
    if (cfg.initial == "ansatz") {
        const auto ac = config_ansatz(cfg);
        return seed_from_ansatz(e, build_ansatz(ac), std::make_shared<const Chart>(ac.chart), cfg.t_seed);
    }
    if (cfg.initial == "model") return perturbed_model_data(e, 0.0, Field::Zero(cfg.n), Field::Zero(cfg.n), g);
    Field g1 = eval_profile(cfg.g1, g);
    if (supnorm(g1) > 0) g1 /= supnorm(g1);
    return perturbed_model_data(e, eps, config_g0(cfg), g1, g);
}

} // namespace nlw

namespace nlw {

std::string config_to_toml(const RunConfig& c) {
    auto arr = [](const std::vector<double>& v) {
        toml::array a;
        for (double x : v) a.push_back(x);
        return a;
    };
    const auto& pc = c.pipeline;
    toml::table t{
        {"p", c.p},
        {"seed", static_cast<int64_t>(c.seed)},
        {"output", c.output},
        {"grid", toml::table{{"L", c.L}, {"n", c.n}}},
        {"data", toml::table{{"initial", c.initial}, {"f", c.f}, {"slope", c.slope}, {"psi", c.psi}, {"N", c.N},
                             {"t_seed", c.t_seed}, {"eps", c.eps}, {"eps_list", arr(c.eps_list)}, {"g0", c.g0},
                             {"g1", c.g1}, {"random_modes", c.random_modes}}},
        {"solver", toml::table{{"cfl", c.solver.cfl}, {"dt_frac", c.solver.dt_frac}, {"phi_max", c.solver.phi_max},
                               {"phi_stop", c.solver.phi_stop}, {"t_end", c.t_end}, {"outputs", c.outputs},
                               {"record_steps", c.solver.record_steps}}},
        {"construction", toml::table{{"t_forward", c.t_forward}, {"t_resample", c.t_resample}}},
        {"fit", toml::table{{"phi_stop", pc.phi_stop}, {"s0", pc.s0}, {"psi_lo", pc.psi_lo}, {"psi_hi", pc.psi_hi},
                            {"psi_samples", pc.psi_samples}, {"dt_frac_fine", pc.dt_frac_fine},
                            {"dt_frac_coarse", pc.dt_frac_coarse}, {"max_stages", pc.max_stages},
                            {"stage_tol", pc.stage_tol}, {"surface_window_lo", pc.surface.window_lo},
                            {"surface_window_hi", pc.surface.window_hi}, {"surface_degree", pc.surface.degree},
                            {"misfit_tol", pc.scattering.misfit_tol}, {"iterations", pc.scattering.iterations},
                            {"N", pc.scattering.N}}},
        {"ode", toml::table{{"psi", c.ode_psi}, {"t0", c.ode_t0}, {"t_seed", c.ode_t_seed}, {"t_end", c.ode_t_end},
                            {"rtol", c.ode.rtol}, {"tau_min", c.ode.tau_min}, {"tau_fit_max", c.ode_fit.tau_fit_max},
                            {"spread_tol", c.ode_fit.spread_tol}}},
        {"energy", toml::table{{"q", c.q}, {"tau_lo", c.tau_lo}, {"tau_hi", c.tau_hi}, {"levels", c.levels},
                              {"N", c.energy_N}, {"t_min", c.t_min}}},
    };
    std::ostringstream os;
    os << t << "\n";
    return os.str();
}

} // namespace nlw
