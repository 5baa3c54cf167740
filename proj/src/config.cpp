#include "rotstar/config.hpp"

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "rotstar/errors.hpp"

namespace rotstar {

namespace {

using nlohmann::json;

void cfg_fail(const std::string& msg) { fail(Status::config, msg, "config"); }

// Reads one block and rejects keys it does not consume.
class Block {
public:
    Block(const json& root, const char* name) : name_(name) {
        if (!root.contains(name)) return;
        const json& b = root.at(name);
        if (!b.is_object()) cfg_fail(std::string("block '") + name + "' must be an object");
        obj_ = &b;
    }
    ~Block() noexcept(false) {
        if (!obj_ || std::uncaught_exceptions()) return;
        for (auto it = obj_->begin(); it != obj_->end(); ++it)
            if (!seen_.count(it.key())) cfg_fail("unknown key '" + name_ + "." + it.key() + "'");
    }

    template <class T>
    void get(const char* key, T& out) {
        if (const json* v = find(key)) out = convert<T>(*v, key);
    }
    template <class T>
    void get(const char* key, std::optional<T>& out) {
        if (const json* v = find(key)) out = convert<T>(*v, key);
    }

private:
    const json* find(const char* key) {
        seen_.insert(key);
        if (!obj_ || !obj_->contains(key)) return nullptr;
        return &obj_->at(key);
    }
    template <class T>
    T convert(const json& v, const char* key) const {
        const std::string where = name_ + "." + key;
        if constexpr (std::is_same_v<T, double>) {
            if (!v.is_number()) cfg_fail("'" + where + "' must be a number");
        } else if constexpr (std::is_same_v<T, int>) {
            if (!v.is_number_integer()) cfg_fail("'" + where + "' must be an integer");
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (!v.is_string()) cfg_fail("'" + where + "' must be a string");
        } else {
            if (!v.is_array()) cfg_fail("'" + where + "' must be an array");
        }
        try {
            return v.get<T>();
        } catch (const json::exception&) {
            cfg_fail("'" + where + "' has elements of the wrong type");
        }
        return T{};
    }

    std::string name_;
    const json* obj_ = nullptr;
    std::set<std::string> seen_;
};

void check_positive(double v, const char* what) {
    if (!(v > 0.0)) cfg_fail(std::string(what) + " must be positive");
}

void validate(const RunConfig& c) {
    if (c.gamma && !(*c.gamma > 1.2 && *c.gamma < 2.0)) cfg_fail("eos.gamma must lie in (6/5, 2)");
    check_positive(c.A_const, "eos.A_const");
    check_positive(c.series_radius, "eos.series_radius");
    check_positive(c.u_O, "star.u_O");
    check_positive(c.c_light, "star.c_light");
    check_positive(c.G_grav, "star.G_grav");
    if (c.Omega_O && c.b) cfg_fail("give at most one of star.Omega_O and star.b");
    if (c.b && *c.b < 0.0) cfg_fail("star.b must be non-negative");
    for (int n : {c.n_in, c.n_ex})
        if (n < 9 || (n - 1) % 8 != 0) cfg_fail("grid sizes must be 8k + 1 with k >= 1");
    if (!(c.r_max > c.fit_lo)) cfg_fail("grid.r_max must exceed verify.fit_lo");
    check_positive(c.fit_lo, "verify.fit_lo");
    check_positive(c.inner_tol, "solver.inner_tol");
    check_positive(c.outer_tol, "solver.outer_tol");
    if (c.inner_max < 1 || c.outer_max < 1 || c.divergence_window < 1) cfg_fail("iteration limits must be at least 1");
    if (!(c.damping > 0.0 && c.damping <= 1.0)) cfg_fail("solver.damping must lie in (0, 1]");
    if (c.ray_points < 2 || c.rays < 2) cfg_fail("solver.ray_points and solver.rays must be at least 2");
    if (c.levels.size() < 2) cfg_fail("verify.levels needs at least two grids");
    for (std::size_t k = 0; k < c.levels.size(); ++k) {
        if (c.levels[k] < 9 || (c.levels[k] - 1) % 8 != 0) cfg_fail("verify.levels must be 8k + 1 grids");
        if (k && c.levels[k] - 1 != 2 * (c.levels[k - 1] - 1)) cfg_fail("verify.levels must halve the spacing each step");
    }
    check_positive(c.order_band, "verify.order_band");
    check_positive(c.flat_tol, "verify.flat_tol");
    if (!(c.residual_drop >= 1.0)) cfg_fail("verify.residual_drop must be at least 1");
    for (const auto& f : c.formats)
        if (f != "json" && f != "columns" && f != "binary") cfg_fail("unknown output format '" + f + "'");
    if (c.directory.empty()) cfg_fail("output.directory must not be empty");
    if (c.nu && !(*c.nu >= 0.0 && *c.nu < 5.0)) cfg_fail("lane_emden.nu must lie in [0, 5)");
    check_positive(c.m_geom, "kerr.m_geom");
    if (!(c.a_spin >= 0.0)) cfg_fail("kerr.a_spin must be non-negative");
    if (c.a_spin > c.m_geom) cfg_fail("kerr.a_spin exceeds kerr.m_geom");
    if (c.sweep_u_O.size() < 2) cfg_fail("sweep.u_O needs at least two values");
    for (double u : c.sweep_u_O) check_positive(u, "sweep.u_O entries");
    if (c.threads < 0) cfg_fail("sweep.threads must be non-negative");
}

json to_json(const RunConfig& c) {
    json j;
    j["eos"] = {{"A_const", c.A_const}, {"upsilon_rho", c.upsilon_rho}, {"series_radius", c.series_radius}};
    if (c.gamma) j["eos"]["gamma"] = *c.gamma;
    j["star"] = {{"u_O", c.u_O}, {"c_light", c.c_light}, {"G_grav", c.G_grav}, {"beta0", c.beta0}, {"delta0", c.delta0}};
    if (c.Omega_O) j["star"]["Omega_O"] = *c.Omega_O;
    if (c.b) j["star"]["b"] = *c.b;
    j["grid"] = {{"n_in", c.n_in}, {"n_ex", c.n_ex}, {"r_max", c.r_max}};
    j["solver"] = {{"inner_tol", c.inner_tol}, {"inner_max", c.inner_max}, {"outer_tol", c.outer_tol},
                   {"outer_max", c.outer_max}, {"divergence_window", c.divergence_window}, {"damping", c.damping},
                   {"ray_points", c.ray_points}, {"rays", c.rays}};
    j["verify"] = {{"levels", c.levels}, {"order_band", c.order_band}, {"flat_tol", c.flat_tol},
                   {"fit_lo", c.fit_lo}, {"residual_drop", c.residual_drop}};
    j["output"] = {{"directory", c.directory}, {"formats", c.formats}};
    j["lane_emden"] = json::object();
    if (c.nu) j["lane_emden"]["nu"] = *c.nu;
    j["kerr"] = {{"m_geom", c.m_geom}, {"a_spin", c.a_spin}};
    j["sweep"] = {{"u_O", c.sweep_u_O}, {"threads", c.threads}};
    j["export"] = {{"source", c.source}};
    return j;
}

}  // namespace

RunConfig parse_config(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        cfg_fail(std::string("malformed JSON: ") + e.what());
    }
    if (!root.is_object()) cfg_fail("configuration must be a JSON object");
    static const std::set<std::string> blocks{"eos", "star", "grid", "solver", "verify", "output", "lane_emden", "kerr", "sweep", "export"};
    for (auto it = root.begin(); it != root.end(); ++it)
        if (!blocks.count(it.key())) cfg_fail("unknown block '" + it.key() + "'");

    RunConfig c;
    {
        Block b(root, "eos");
        b.get("gamma", c.gamma);
        b.get("A_const", c.A_const);
        b.get("upsilon_rho", c.upsilon_rho);
        b.get("series_radius", c.series_radius);
    }
    {
        Block b(root, "star");
        b.get("u_O", c.u_O);
        b.get("Omega_O", c.Omega_O);
        b.get("b", c.b);
        b.get("c_light", c.c_light);
        b.get("G_grav", c.G_grav);
        b.get("beta0", c.beta0);
        b.get("delta0", c.delta0);
    }
    {
        Block b(root, "grid");
        b.get("n_in", c.n_in);
        b.get("n_ex", c.n_ex);
        b.get("r_max", c.r_max);
    }
    {
        Block b(root, "solver");
        b.get("inner_tol", c.inner_tol);
        b.get("inner_max", c.inner_max);
        b.get("outer_tol", c.outer_tol);
        b.get("outer_max", c.outer_max);
        b.get("divergence_window", c.divergence_window);
        b.get("damping", c.damping);
        b.get("ray_points", c.ray_points);
        b.get("rays", c.rays);
    }
    {
        Block b(root, "verify");
        b.get("levels", c.levels);
        b.get("order_band", c.order_band);
        b.get("flat_tol", c.flat_tol);
        b.get("fit_lo", c.fit_lo);
        b.get("residual_drop", c.residual_drop);
    }
    {
        Block b(root, "output");
        b.get("directory", c.directory);
        b.get("formats", c.formats);
    }
    {
        Block b(root, "lane_emden");
        b.get("nu", c.nu);
    }
    {
        Block b(root, "kerr");
        b.get("m_geom", c.m_geom);
        b.get("a_spin", c.a_spin);
    }
    {
        Block b(root, "sweep");
        b.get("u_O", c.sweep_u_O);
        b.get("threads", c.threads);
    }
    {
        Block b(root, "export");
        b.get("source", c.source);
    }
    validate(c);
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) fail(Status::config, "cannot read configuration file " + path, "config");
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_config(ss.str());
}

std::string canonical_json(const RunConfig& c) { return to_json(c).dump(2); }

std::string config_hash(const RunConfig& c) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : to_json(c).dump()) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void apply_grid_level(RunConfig& c, int level) {
    if (level < 0 || level > 4) fail(Status::config, "grid level must lie in [0, 4]", "config");
    c.n_in = 32 * (1 << level) + 1;
    c.n_ex = 24 * (1 << level) + 1;
}

EquationOfState RunConfig::eos() const {
    if (!gamma) fail(Status::config, "missing key 'eos.gamma'", "config");
    EquationOfState e;
    e.gamma = *gamma;
    e.A_const = A_const;
    e.c_light = c_light;
    e.upsilon_rho = upsilon_rho;
    e.series_radius = series_radius;
    return e;
}

StarParams RunConfig::params() const {
    if (Omega_O) return make_params(eos(), G_grav, u_O, *Omega_O, beta0, delta0);
    return make_params_b(eos(), G_grav, u_O, b.value_or(0.0), beta0, delta0);
}

SolverOptions RunConfig::solver_options() const {
    SolverOptions o;
    o.grid.n_in = n_in;
    o.grid.n_ex = n_ex;
    o.grid.damping = damping;
    o.inner_tol = inner_tol;
    o.inner_max = inner_max;
    o.outer_tol = outer_tol;
    o.outer_max = outer_max;
    o.divergence_window = divergence_window;
    o.ray_points = ray_points;
    o.rays = rays;
    o.fit_lo = fit_lo;
    o.fit_hi = r_max;
    return o;
}

}  // namespace rotstar
