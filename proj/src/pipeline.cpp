#include "rotstar/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <sstream>

#include "json.hpp"
#include "rotstar/errors.hpp"
#include "rotstar/lane_emden.hpp"
#include "rotstar/verify.hpp"

namespace rotstar {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream os(p);
    if (!os) fail(Status::io, "cannot write " + p.string(), "cli");
    os << text;
    if (!os) fail(Status::io, "write failed for " + p.string(), "cli");
}

bool has(const std::vector<std::string>& v, const char* s) { return std::find(v.begin(), v.end(), s) != v.end(); }

json sups(const std::array<double, 5>& a) { return json(std::vector<double>(a.begin(), a.end())); }

// Least-squares slope of log y against log x.
double log_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double lx = std::log(x[k]), ly = std::log(y[k]);
        sx += lx, sy += ly, sxx += lx * lx, sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

int exterior_size(int n_in) { return (n_in - 1) * 3 / 4 + 1; }

// Nodes shared with the coarsest level, outside radius r_min.
RegionMask coarse_mask(int n, int n_coarse, double r_min) {
    const int stride = (n - 1) / (n_coarse - 1);
    return [=](const NodeRef& node) {
        if (std::hypot(node.p.w, node.p.z) < r_min) return false;
        const int i = static_cast<int>(node.k) / n, j = static_cast<int>(node.k) % n;
        return i % stride == 0 && j % stride == 0;
    };
}

struct Run {
    const RunConfig& cfg;
    fs::path dir;
    json report;
    std::ostringstream summary;
    std::vector<std::string> files;
    bool passed = true;

    void check(bool ok, const std::string& what) {
        report["checks"].push_back({{"name", what}, {"passed", ok}});
        summary << (ok ? "  ok    " : "  FAIL  ") << what << '\n';
        if (!ok) passed = false;
    }
    void add_file(const std::string& name, const std::string& text) {
        write_text(dir / name, text);
        files.push_back(name);
    }
};

// ---- lane-emden -------------------------------------------------------------

void cmd_lane_emden(Run& r) {
    const RunConfig& c = r.cfg;
    const double nu = c.nu ? *c.nu : c.eos().nu();
    const LaneEmdenSolution le = solve_classical(nu);
    r.report["classical"] = {{"nu", nu}, {"xi1", le.xi1}, {"mu1", le.mu1}};
    r.summary << "classical: nu = " << nu << ", xi1 = " << le.xi1 << ", mu1 = " << le.mu1 << '\n';
    std::ostringstream prof;
    prof.precision(17);
    prof << "# xi theta dtheta\n";
    for (int k = 0; k <= 800; ++k) {
        const double xi = 2.0 * le.xi1 * k / 800.0;
        prof << xi << ' ' << le.theta(xi) << ' ' << le.dtheta(xi) << '\n';
    }
    r.add_file("profile.tsv", prof.str());

    if (nu < 1.0) {
        r.summary << "distorted: skipped (nu < 1)\n";
        return;
    }
    double b = c.b.value_or(0.0);
    if (c.Omega_O) b = c.params().b;
    DistortedOptions opt;
    opt.n_in = c.n_in;
    opt.n_ex = c.n_ex;
    opt.damping = c.damping;
    const DistortedLaneEmden d = solve_distorted(nu, b, opt);
    double dev = 0.0;
    for (double v : d.delta.in) dev = std::max(dev, std::abs(v));
    const double mx = *std::max_element(d.Xi1.begin(), d.Xi1.end());
    r.report["distorted"] = {{"b", b}, {"iterations", d.iterations}, {"contraction", d.contraction},
                             {"equator_Xi1", d.Xi1.front()}, {"pole_Xi1", d.Xi1.back()}, {"max_Xi1", mx},
                             {"max_deviation", dev}};
    std::ostringstream curve;
    curve.precision(17);
    curve << "# zeta Xi1\n";
    for (std::size_t k = 0; k < d.zeta.size(); ++k) curve << d.zeta[k] << ' ' << d.Xi1[k] << '\n';
    r.add_file("xi1_curve.tsv", curve.str());
    r.summary << "distorted: b = " << b << ", equator Xi1 = " << d.Xi1.front() << ", pole Xi1 = " << d.Xi1.back()
              << ", iterations " << d.iterations << '\n';
    if (b == 0.0)
        r.check(dev <= 1e-6, "b = 0 reproduces the classical profile");
    else
        r.check(d.Xi1.front() > d.Xi1.back() && mx < 2 * le.xi1, "rotation flattens the star within 2 xi1");
}

// ---- solve --------------------------------------------------------------

std::string solve_summary(const Solution& s) {
    const auto& d = s.diag;
    std::ostringstream os;
    os.precision(6);
    os << "star: u_O = " << s.params.u_O << ", Omega_O = " << s.params.Omega_O << ", b = " << s.params.b
       << ", eps = " << s.params.epsilon << '\n'
       << "outer iterations " << d.outer.iterations << ", last ratio " << d.outer.ratio << '\n'
       << "M = " << d.M << " (Newtonian " << d.M_N << "), J = " << d.J << '\n'
       << "support radius / r1 = " << d.support_radius / s.params.r1 << ", max |Z|/c^2 = " << d.max_Z << '\n'
       << "far-field orders:";
    for (int k = 0; k < 4; ++k) {
        os << ' ';
        if (d.asymptotics.exact[k])
            os << "exact";
        else
            os << d.asymptotics.order[k];
    }
    os << (d.asymptotics.flat ? " (flat)\n" : " (not flat)\n");
    if (d.verified) {
        os << "residual sups:";
        for (double v : d.residuals.sup) os << ' ' << v;
        os << "\nfirst-integral spread " << d.residuals.first_integral_spread << ", K consistency " << d.consistency.sup_L
           << '\n';
    }
    for (const auto& w : d.regime.warnings) os << "warning: " << w << '\n';
    return os.str();
}

void cmd_solve(Run& r) {
    const StarParams p = r.cfg.params();
    const Solution s = solve(p, r.cfg.solver_options());
    r.report["solution"] = json::parse(solution_report(s));
    r.report["regime_warnings"] = s.diag.regime.warnings;
    for (const auto& f : write_solution_fields(s, r.dir.string(), r.cfg.formats)) r.files.push_back(f);
    r.summary << solve_summary(s);
}

// ---- verify -------------------------------------------------------------

void cmd_verify(Run& r) {
    const RunConfig& c = r.cfg;
    const StarParams p = c.params();
    std::vector<ResidualReport> res;
    std::vector<double> spread, L;
    AsymptoticReport fit;
    std::vector<std::future<SolveDiagnostics>> jobs;
    for (int n : c.levels) {
        SolverOptions o = c.solver_options();
        o.grid.n_in = n;
        o.grid.n_ex = exterior_size(n);
        jobs.push_back(std::async(std::launch::async, [&p, o] { return solve(p, o).diag; }));
    }
    for (std::size_t k = 0; k < jobs.size(); ++k) {
        const int n = c.levels[k];
        const SolveDiagnostics d = jobs[k].get();
        res.push_back(d.residuals);
        spread.push_back(d.residuals.first_integral_spread);
        L.push_back(d.consistency.sup_L);
        fit = d.asymptotics;
        r.report["levels"].push_back({{"n_in", n}, {"residual_sup", sups(d.residuals.sup)},
                                      {"first_integral_spread", spread.back()}, {"K_consistency", L.back()},
                                      {"M", d.M}, {"J", d.J}});
        r.summary << "level " << n << ": residuals";
        for (double v : d.residuals.sup) r.summary << ' ' << v;
        r.summary << ", spread " << spread.back() << ", L " << L.back() << '\n';
    }
    const std::size_t f = res.size() - 1;
    const double floor_abs = 10 * c.outer_tol * p.u_O * p.u_O;
    for (int e = 0; e < 5; ++e) {
        const double coarse = res[f - 1].sup[e], fine = res[f].sup[e];
        r.check(fine <= std::max(coarse / c.residual_drop, floor_abs),
                "equation " + std::to_string(e) + " residual is discretization error");
    }
    const double spread_bound = std::max(std::abs(spread[f - 1] - spread[f]) / 3, 10 * c.outer_tol * p.epsilon);
    r.check(spread[f] <= spread_bound, "first integral holds to discretization error");
    r.check(L[f] <= std::max(L[f - 1] / c.residual_drop, floor_abs), "K system consistent to discretization error");
    bool flat = true;
    for (int k = 0; k < 4; ++k) flat = flat && (fit.exact[k] || fit.order[k] >= fit.nominal[k] - c.flat_tol);
    r.report["asymptotic_orders"] = fit.order;
    r.check(flat, "far-field orders match the asymptotic-flatness laws");
}

// ---- kerr-check ---------------------------------------------------------

void cmd_kerr_check(Run& r) {
    const RunConfig& c = r.cfg;
    const KerrParams kp{c.m_geom, c.a_spin};
    validate(kp);
    std::vector<double> h;
    std::vector<std::array<double, 12>> s;
    AsymptoticReport fit;
    for (int n : c.levels) {
        const AxiGrid g{n, n, 4.0 * c.m_geom};
        const MetricLanczos m = kerr_metric(kp, g);
        const RegionMask mask = coarse_mask(n, c.levels.front(), 3.0 * c.m_geom);
        const ResidualReport R = residual_reduced_system(m, {}, mask);
        const RicciReport Q = ricci_cross_check(m, {}, mask);
        const ConsistencyReport C = consistency_K(m, {}, mask);
        std::array<double, 12> v{};
        for (int k = 0; k < 5; ++k) v[k] = R.sup[k];
        for (int k = 0; k < 6; ++k) v[5 + k] = Q.sup[k];
        v[11] = C.sup_L;
        s.push_back(v);
        h.push_back(g.h_in());
        fit = asymptotic_fit(far_field(m), 10.0 * c.m_geom, 50.0 * c.m_geom);
        r.report["levels"].push_back({{"n", n}, {"sups", v}});
    }
    static const char* names[12] = {"EQa", "EQb", "EQc", "EQd", "EQe", "R00", "R02", "R22", "R11", "R33", "R13", "K consistency"};
    json orders = json::object();
    for (int k = 0; k < 12; ++k) {
        std::vector<double> e;
        for (const auto& v : s) e.push_back(v[k]);
        if (*std::max_element(e.begin(), e.end()) <= 1e-10) {
            orders[names[k]] = "identically satisfied";
            r.summary << names[k] << ": identically satisfied\n";
            continue;
        }
        const double p = observed_order(h, e);
        orders[names[k]] = p;
        r.summary << names[k] << ": order " << p << '\n';
        r.check(std::abs(p - 2.0) <= c.order_band, std::string(names[k]) + " converges at second order");
    }
    r.report["orders"] = orders;
    const double dm = std::abs(fit.M - c.m_geom) / c.m_geom;
    const double a_fit = fit.J / fit.M;
    const double da = c.a_spin > 0 ? std::abs(a_fit - c.a_spin) / c.a_spin : std::abs(a_fit);
    r.report["asymptotics"] = {{"M", fit.M}, {"a", a_fit}, {"orders", fit.order}};
    r.summary << "far field: M = " << fit.M << ", a = " << a_fit << '\n';
    r.check(dm <= 0.01 && da <= 0.01, "asymptotic fit recovers m and a within 1%");
}

// ---- tov-compare --------------------------------------------------------

void cmd_tov_compare(Run& r) {
    RunConfig c = r.cfg;
    c.Omega_O = 0.0;
    c.b.reset();
    const StarParams p = c.params();
    const Solution s = solve(p, c.solver_options());
    const TovSolution t = tov_benchmark(p.eos, p.G_grav, p.u_O);
    const auto& g = s.metric.F.grid;
    double gap = 0.0;
    std::ostringstream eq;
    eq.precision(17);
    eq << "# varpi areal_radius F_solver F_tov\n";
    for (int i = 0; i < g.n_in; ++i) {
        const NodeRef n{false, g.id_in(i, 0), {g.x_in(i), 0.0}};
        const double F = node_value(s.metric.F, n) - s.metric.F.offset;
        const double areal = std::exp(-F) * n.p.w * (1 + node_value(s.metric.q, n));
        gap = std::max(gap, std::abs(F - t.F(areal)));
        eq << n.p.w << ' ' << areal << ' ' << F << ' ' << t.F(areal) << '\n';
    }
    r.add_file("equator.tsv", eq.str());
    std::ostringstream tab;
    tab.precision(17);
    tab << "# r u m\n";
    for (std::size_t k = 0; k < t.r.size(); k += std::max<std::size_t>(1, t.r.size() / 1000))
        tab << t.r[k] << ' ' << t.u[k] << ' ' << t.m[k] << '\n';
    r.add_file("tov.tsv", tab.str());
    r.report["tov"] = {{"R", t.R}, {"M", t.M}, {"F_surface", t.F_surface}};
    r.report["solver"] = {{"M", s.diag.M}, {"M_N", s.diag.M_N}};
    r.report["gap"] = gap;
    r.report["gap_over_eps2"] = gap / (p.epsilon * p.epsilon);
    r.summary << "TOV: R = " << t.R << ", M = " << t.M << "; solver M = " << s.diag.M << '\n'
              << "sup |F_solver - F_TOV| = " << gap << " (" << gap / (p.epsilon * p.epsilon) << " eps^2)\n";
    r.check(std::isfinite(gap), "TOV comparison evaluated");
}

// ---- sweep --------------------------------------------------------------

void cmd_sweep(Run& r) {
    const RunConfig& c = r.cfg;
    const std::size_t n = c.sweep_u_O.size();
    std::vector<SolveDiagnostics> diag(n);
    std::vector<StarParams> params(n);
    const std::size_t width = c.threads > 0 ? static_cast<std::size_t>(c.threads) : n;
    for (std::size_t start = 0; start < n; start += width) {
        std::vector<std::future<Solution>> jobs;
        for (std::size_t k = start; k < std::min(n, start + width); ++k) {
            RunConfig ck = c;
            ck.u_O = c.sweep_u_O[k];
            params[k] = ck.params();
            jobs.push_back(std::async(std::launch::async, [p = params[k], o = ck.solver_options()] { return solve(p, o); }));
        }
        for (std::size_t k = start; k < std::min(n, start + width); ++k) diag[k] = jobs[k - start].get().diag;
    }
    std::vector<double> u, om, W, Y, X, K, dm;
    std::ostringstream tab;
    tab.precision(10);
    tab << "# u_O Omega_O sup_W sup_Y sup_X sup_K M M_N outer_ratio\n";
    double worst_ratio = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const auto& d = diag[k];
        const double c4 = std::pow(params[k].eos.c_light, 4);
        u.push_back(params[k].u_O);
        om.push_back(std::abs(params[k].Omega_O) * params[k].u_O);
        W.push_back(d.sup_W);
        Y.push_back(d.sup_Y);
        X.push_back(d.sup_X);
        K.push_back(d.sup_V / c4);
        dm.push_back(std::abs(d.M - d.M_N) / d.M_N);
        for (double q : d.contraction) worst_ratio = std::max(worst_ratio, q);
        tab << u.back() << ' ' << params[k].Omega_O << ' ' << W.back() << ' ' << Y.back() << ' ' << X.back() << ' '
            << K.back() << ' ' << d.M << ' ' << d.M_N << ' ' << d.outer.ratio << '\n';
    }
    r.add_file("sweep.tsv", tab.str());
    json ex = json::object();
    auto fit = [&](const char* name, double s, double nominal) {
        ex[name] = s;
        r.summary << name << " exponent " << s << " (nominal " << nominal << ")\n";
        r.check(std::abs(s / nominal - 1.0) <= 0.15, std::string(name) + " scaling within 15%");
    };
    const bool rotating = om.front() > 0.0;
    fit("W", log_slope(u, W), 2.0);
    if (rotating) fit("Y", log_slope(om, Y), 1.0);
    fit("X", log_slope(u, X), 2.0);
    fit("K", log_slope(u, K), 2.0);
    fit("mass defect", log_slope(u, dm), 1.0);
    r.report["exponents"] = ex;
    r.report["max_outer_ratio"] = worst_ratio;
    r.check(worst_ratio < 1.0, "outer iteration contracts");
}

// ---- export -------------------------------------------------------------

void cmd_export(Run& r) {
    if (r.cfg.source.empty()) fail(Status::config, "export needs 'export.source'", "cli");
    const fs::path src(r.cfg.source);
    if (!fs::is_directory(src)) fail(Status::io, "not a directory: " + src.string(), "cli");
    std::vector<fs::path> dumps;
    for (const auto& e : fs::directory_iterator(src))
        if (e.path().extension() == ".bin") dumps.push_back(e.path());
    std::sort(dumps.begin(), dumps.end());
    for (const auto& d : dumps) {
        const AxiField f = read_binary(d.string());
        std::ostringstream os;
        write_columns(f, os);
        r.add_file(d.stem().string() + ".tsv", os.str());
    }
    r.report["exported"] = dumps.size();
    r.summary << "exported " << dumps.size() << " fields\n";
}

}  // namespace

const char* library_version() { return "0.1.0"; }

const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names{"lane-emden", "solve", "verify", "kerr-check", "tov-compare", "sweep", "export"};
    return names;
}

std::vector<std::string> write_solution_fields(const Solution& s, const std::string& dir,
                                               const std::vector<std::string>& formats) {
    const std::map<std::string, const AxiField*> fields{
        {"W", &s.U.W}, {"Y", &s.U.Y}, {"X", &s.U.X}, {"V", &s.U.V}, {"w", &s.U.w},
        {"F", &s.metric.F}, {"A_over_varpi2", &s.metric.y}, {"Pi_over_varpi_minus_1", &s.metric.q}, {"K", &s.metric.K},
        {"u_N", &s.nf.u_N}, {"rho_N", &s.nf.rho_N}, {"Phi_N", &s.nf.Phi_N}};
    std::vector<std::string> out;
    for (const auto& [name, f] : fields) {
        if (has(formats, "binary")) {
            write_binary(*f, (fs::path(dir) / (name + ".bin")).string());
            out.push_back(name + ".bin");
        }
        if (has(formats, "columns")) {
            std::ostringstream os;
            write_columns(*f, os);
            write_text(fs::path(dir) / (name + ".tsv"), os.str());
            out.push_back(name + ".tsv");
        }
    }
    return out;
}

std::string solution_report(const Solution& s) {
    const auto& d = s.diag;
    const auto& p = s.params;
    json j;
    j["params"] = {{"gamma", p.eos.gamma}, {"A_const", p.eos.A_const}, {"c_light", p.eos.c_light}, {"G_grav", p.G_grav},
                   {"u_O", p.u_O}, {"Omega_O", p.Omega_O}, {"b", p.b}, {"epsilon", p.epsilon}, {"a", p.a},
                   {"rho_NO", p.rho_NO}, {"xi1", p.xi1}, {"r1", p.r1}, {"R0", p.R0}};
    j["grid"] = {{"n_in", s.U.W.grid.n_in}, {"n_ex", s.U.W.grid.n_ex}};
    j["outer"] = {{"iterations", d.outer.iterations}, {"ratio", d.outer.ratio}, {"history", d.outer.history},
                  {"contraction", d.contraction}};
    json inner = json::array();
    for (const auto& r : d.inner) inner.push_back({{"iterations", r.iterations}, {"ratio", r.ratio}});
    j["inner"] = inner;
    j["V"] = {{"C_inf", d.C_inf}, {"ray_spread", d.ray_spread}};
    j["mass"] = {{"M", d.M}, {"J", d.J}, {"M_N", d.M_N}};
    j["support_radius_over_r1"] = d.support_radius / p.r1;
    j["max_Z_over_c2"] = d.max_Z;
    j["sup"] = {{"W", d.sup_W}, {"Y", d.sup_Y}, {"X", d.sup_X}, {"V", d.sup_V}};
    j["regime"] = {{"gamma_ok", d.regime.gamma_ok}, {"b_ok", d.regime.b_ok}, {"eps_ok", d.regime.eps_ok},
                   {"warnings", d.regime.warnings}};
    j["asymptotics"] = {{"order", d.asymptotics.order}, {"nominal", d.asymptotics.nominal},
                        {"exact", d.asymptotics.exact}, {"flat", d.asymptotics.flat},
                        {"r_lo", d.asymptotics.r_lo}, {"r_hi", d.asymptotics.r_hi}};
    if (d.verified) {
        j["residuals"] = {{"sup", sups(d.residuals.sup)}, {"first_integral_spread", d.residuals.first_integral_spread},
                          {"b_margin", d.residuals.b_margin}, {"c_margin", d.residuals.c_margin},
                          {"nodes", d.residuals.nodes}};
        j["K_consistency"] = {{"sup_L", d.consistency.sup_L}, {"sup_identity", d.consistency.sup_identity}};
    }
    j["norms_note"] = "weighted norms and support radius are node-sampled";
    return j.dump(2);
}

CommandResult run_command(const std::string& command, const RunConfig& config, const std::string& out_dir) {
    static const std::map<std::string, void (*)(Run&)> table{
        {"lane-emden", cmd_lane_emden}, {"solve", cmd_solve},     {"verify", cmd_verify}, {"kerr-check", cmd_kerr_check},
        {"tov-compare", cmd_tov_compare}, {"sweep", cmd_sweep}, {"export", cmd_export}};
    const auto it = table.find(command);
    if (it == table.end()) fail(Status::config, "unknown command '" + command + "'", "cli");

    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) fail(Status::io, "cannot create " + out_dir + ": " + ec.message(), "cli");
    Run r{config, fs::path(out_dir), json::object(), {}, {}, true};
    r.summary.precision(12);
    r.report["command"] = command;
    r.report["checks"] = json::array();
    it->second(r);
    r.report["passed"] = r.passed;

    CommandResult out;
    out.report_json = r.report.dump(2);
    out.summary = command + (r.passed ? ": passed\n" : ": FAILED\n") + r.summary.str();
    out.passed = r.passed;
    write_text(r.dir / "report.json", out.report_json);
    write_text(r.dir / "summary.txt", out.summary);
    write_text(r.dir / "config.json", canonical_json(config));
    json manifest = {{"command", command}, {"library_version", library_version()}, {"config_hash", config_hash(config)},
                     {"passed", r.passed}, {"files", r.files}};
    if (r.report.contains("regime_warnings")) manifest["regime_warnings"] = r.report["regime_warnings"];
    write_text(r.dir / "manifest.json", manifest.dump(2));
    return out;
}

}  // namespace rotstar
