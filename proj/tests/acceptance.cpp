// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "rotstar/greens.hpp"
#include "rotstar/lane_emden.hpp"
#include "rotstar/pn_solver.hpp"
#include "rotstar/verify.hpp"

using namespace rotstar;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) pass = false;
        if (!detail.empty()) detail += "; ";
        detail += what + (ok ? "" : " [miss]");
    }
};

std::string fmt(const char* f, double a) {
    char buf[96];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

// ---- Lane-Emden ------------------------------------------------------------

// Fixed-step RK4 for the classical profile from a series start at x0.
struct Rk4Profile {
    std::vector<double> x, y;
    double operator()(double at) const {
        const auto it = std::lower_bound(x.begin(), x.end(), at);
        const std::size_t k = std::clamp<std::size_t>(it - x.begin(), 1, x.size() - 1);
        const double t = (at - x[k - 1]) / (x[k] - x[k - 1]);
        return (1 - t) * y[k - 1] + t * y[k];
    }
};

Rk4Profile rk4_profile(double nu, double h, double x_end) {
    auto f = [nu](double x, double y0, double y1, double& d0, double& d1) {
        d0 = y1;
        d1 = -(y0 > 0 ? std::pow(y0, nu) : 0.0) - 2 * y1 / x;
    };
    double x = 1e-4;
    double y0 = 1 - x * x / 6 + nu * std::pow(x, 4) / 120, y1 = -x / 3 + nu * std::pow(x, 3) / 30;
    Rk4Profile P;
    P.x.push_back(0.0);
    P.y.push_back(1.0);
    while (x < x_end) {
        double a0, a1, b0, b1, c0, c1, e0, e1;
        f(x, y0, y1, a0, a1);
        f(x + h / 2, y0 + h / 2 * a0, y1 + h / 2 * a1, b0, b1);
        f(x + h / 2, y0 + h / 2 * b0, y1 + h / 2 * b1, c0, c1);
        f(x + h, y0 + h * c0, y1 + h * c1, e0, e1);
        y0 += h / 6 * (a0 + 2 * b0 + 2 * c0 + e0);
        y1 += h / 6 * (a1 + 2 * b1 + 2 * c1 + e1);
        x += h;
        P.x.push_back(x);
        P.y.push_back(y0);
    }
    return P;
}

Outcome criterion1() {
    Outcome o;
    const LaneEmdenSolution s1 = solve_classical(1.0);
    o.require(std::abs(s1.xi1 - M_PI) <= 1e-8, "|xi1(nu=1) - pi| = " + fmt("%.2e", std::abs(s1.xi1 - M_PI)));

    const LaneEmdenProfile p5 = integrate_lane_emden(5.0, 20.0);
    double e5 = 0.0;
    for (int k = 0; k <= 2000; ++k) {
        const double x = 0.01 * k;
        e5 = std::max(e5, std::abs(p5.theta(x) - 1.0 / std::sqrt(1 + x * x / 3)));
    }
    o.require(e5 <= 1e-8, "nu=5 closed-form error " + fmt("%.2e", e5));

    // the oracle's step is ten times finer than a step already accurate to 1e-9
    const LaneEmdenSolution s15 = solve_classical(1.5);
    const Rk4Profile oracle = rk4_profile(1.5, 1e-4, s15.xi1);
    double e15 = 0.0;
    for (int k = 0; k <= 400; ++k) {
        const double x = s15.xi1 * k / 400.0;
        e15 = std::max(e15, std::abs(s15.theta(x) - oracle(x)));
    }
    o.require(e15 <= 1e-6, "nu=1.5 vs refined RK4 " + fmt("%.2e", e15));
    return o;
}

Outcome criterion2() {
    Outcome o;
    DistortedOptions opt;
    opt.n_in = 129;
    opt.n_ex = 97;
    const DistortedLaneEmden d0 = solve_distorted(1.5, 0.0, opt);
    double e = 0.0;
    for (int i = 0; i < opt.n_in; ++i)
        for (int j = 0; j < opt.n_in; ++j) {
            const double w = d0.delta.grid.x_in(i), z = d0.delta.grid.x_in(j);
            e = std::max(e, std::abs(d0.Theta(w, z) - d0.classical.theta(std::hypot(w, z))));
        }
    o.require(e <= 1e-6, "b=0 deviation on 129^2 " + fmt("%.2e", e));

    const DistortedLaneEmden d1 = solve_distorted(1.5, 1e-3, opt);
    const double eq = d1.Xi1.front(), pole = d1.Xi1.back();
    const double mx = *std::max_element(d1.Xi1.begin(), d1.Xi1.end());
    o.require(eq > pole, "b=1e-3 equator " + fmt("%.6f", eq) + " > pole " + fmt("%.6f", pole));
    o.require(mx < 2 * d1.classical.xi1, "max Xi1/xi1 = " + fmt("%.4f", mx / d1.classical.xi1));
    return o;
}

// ---- Green operators ------------------------------------------------------

double forward_error(int n, int N) {
    const AxiGrid G{N, N, 1.0};
    auto src = [](double w, double z) {
        const double s2 = (w * w + 1.5 * z * z) / 0.49;
        return s2 < 1.0 ? std::pow(1 - s2, 4) * (1 + w * w) : 0.0;
    };
    const AxiField g = sample_field(G, n + 4, src, 0.0, 0.0);
    const NodeValues L = laplacian(k_n(g, n), n);
    double e = 0.0;
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j)
            if (std::hypot(G.x_in(i), G.x_in(j)) <= 1.0)
                e = std::max(e, std::abs(L.in[G.id_in(i, j)] + g.in[G.id_in(i, j)]));
    return e;
}

Outcome criterion3() {
    Outcome o;
    const std::vector<int> levels{33, 65, 129};
    for (int n = 3; n <= 5; ++n) {
        std::vector<double> h, e;
        for (int N : levels) {
            h.push_back(1.0 / (N - 1));
            e.push_back(forward_error(n, N));
        }
        const double p = observed_order(h, e);
        o.require(std::abs(p - 2.0) <= 0.2, "n=" + std::to_string(n) + " order " + fmt("%.2f", p));
    }
    // uniform ball of radius b, unit density: potential b^2/2 - r^2/6 inside, b^3/(3r) outside
    const double b = 0.55;
    auto exact = [&](double r) { return r < b ? b * b / 2 - r * r / 6 : b * b * b / (3 * r); };
    std::vector<double> err;
    for (int N : levels) {
        const AxiGrid G{N, N, 1.0};
        const AxiField g = sample_field(G, 7, [&](double w, double z) { return std::hypot(w, z) < b ? 1.0 : 0.0; }, 0.0, 0.0);
        const AxiField f = k_n(g, 3);
        double e = 0.0;
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < N; ++j)
                e = std::max(e, std::abs(f.in[G.id_in(i, j)] - exact(std::hypot(G.x_in(i), G.x_in(j)))));
        err.push_back(e / exact(0.0));
    }
    // the source jump is resolved to one cell, so the quadrature tolerance is O(h)
    const double p = std::log2(err[1] / err[2]);
    o.require(err[2] <= 2.0 / (levels[2] - 1), "uniform ball relative error " + fmt("%.2e", err[2]) + " (order " + fmt("%.2f", p) + ")");
    return o;
}

// ---- Kelvin machinery -----------------------------------------------------

FieldFn axis_charges(int n, double z0) {
    return [=](double w, double z) { return std::pow(std::hypot(w, z - z0), 2.0 - n) + std::pow(std::hypot(w, z + z0), 2.0 - n); };
}

Outcome criterion4() {
    Outcome o;
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    double inv = 0.0;
    for (int k = 0; k < 100000; ++k) {
        const Point p{std::exp(5 * U(rng)) * std::abs(U(rng)) + 1e-12, std::exp(5 * U(rng)) * U(rng)};
        const Point q = kelvin_point(kelvin_point(p, 1.3), 1.3);
        inv = std::max(inv, std::hypot(q.w - p.w, q.z - p.z) / std::hypot(p.w, p.z));
    }
    o.require(inv <= 1e-15, "involution " + fmt("%.1e", inv));

    for (int n = 3; n <= 5; ++n) {
        std::vector<double> h, e;
        for (int N : {33, 65, 129}) {
            const AxiGrid g{N, N, 1.0};
            const AxiField f = sample_field(g, n, axis_charges(n, 0.3), 0.0, 2.0);
            const NodeValues L = laplacian(f, n);
            double m = 0.0;
            for (int i = 0; i < N; ++i)
                for (int j = 0; j < N; ++j) {
                    const double rs = std::hypot(g.x_ex(i), g.x_ex(j));
                    if (rs > 0.0 && rs <= 0.8) m = std::max(m, std::abs(L.ex[g.id_ex(i, j)]));
                }
            h.push_back(g.h_ex());
            e.push_back(m);
        }
        const double p = observed_order(h, e);
        o.require(std::abs(p - 2.0) <= 0.2, "harmonic transport n=" + std::to_string(n) + " order " + fmt("%.2f", p));

        const AxiGrid g{65, 65, 1.0};
        const AxiField f = sample_field(g, n, axis_charges(n, 0.3), 0.0, 2.0);
        // least-squares slope of log|Q| against log r along a ray, r in [10, 100] R0
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        const int m = 40;
        for (int k = 0; k < m; ++k) {
            const double r = 10.0 * std::pow(10.0, k / (m - 1.0));
            const double x = std::log(r), y = std::log(std::abs(eval(f, {0.6 * r, 0.8 * r})));
            sx += x, sy += y, sxx += x * x, sxy += x * y;
        }
        const double slope = -(m * sxy - sx * sy) / (m * sxx - sx * sx);
        o.require(std::abs(slope - (n - 2)) <= 0.05 * (n - 2), "decay n=" + std::to_string(n) + " fit " + fmt("%.3f", slope));
    }
    return o;
}

// ---- Kerr and flat space --------------------------------------------------

RegionMask coincident(int N, double r_min) {
    const int stride = (N - 1) / 32;
    return [=](const NodeRef& node) {
        if (std::hypot(node.p.w, node.p.z) < r_min) return false;
        const int i = static_cast<int>(node.k) / N, j = static_cast<int>(node.k) % N;
        return i % stride == 0 && j % stride == 0;
    };
}

Outcome criterion5() {
    Outcome o;
    for (double spin : {0.0, 0.5, 0.9}) {
        const KerrParams kp{1.0, spin};
        std::vector<double> h;
        std::vector<std::array<double, 11>> sups;
        AsymptoticReport fit;
        for (int N : {33, 65, 129}) {
            const AxiGrid g{N, N, 4.0};
            const MetricLanczos m = kerr_metric(kp, g);
            const ResidualReport R = residual_reduced_system(m, {}, coincident(N, 3.0));
            const RicciReport Q = ricci_cross_check(m, {}, coincident(N, 3.0));
            std::array<double, 11> s{};
            for (int k = 0; k < 5; ++k) s[k] = R.sup[k];
            for (int k = 0; k < 6; ++k) s[5 + k] = Q.sup[k];
            sups.push_back(s);
            h.push_back(g.h_in());
            if (N == 129) fit = asymptotic_fit(far_field(m), 10.0, 50.0);
        }
        double lo = 1e9, hi = -1e9;
        int exact = 0;
        for (int k = 0; k < 11; ++k) {
            // equations satisfied identically by the data stay at round-off on every level
            if (std::max({sups[0][k], sups[1][k], sups[2][k]}) <= 1e-10) {
                ++exact;
                continue;
            }
            const double p = observed_order(h, {sups[0][k], sups[1][k], sups[2][k]});
            lo = std::min(lo, p);
            hi = std::max(hi, p);
        }
        const std::string tag = "a=" + fmt("%.1f", spin) + ": ";
        o.require(lo >= 1.8 && hi <= 2.2, tag + "orders in [" + fmt("%.2f", lo) + ", " + fmt("%.2f", hi) + "], " + std::to_string(exact) + " identically zero");
        const double dm = std::abs(fit.M - 1.0);
        const double da = spin == 0.0 ? std::abs(fit.J) : std::abs(fit.J / fit.M - spin) / spin;
        o.require(dm <= 0.01 && da <= 0.01, tag + "M err " + fmt("%.1e", dm) + ", a err " + fmt("%.1e", da));
    }
    return o;
}

Outcome criterion6() {
    Outcome o;
    double worst = 0.0;
    for (int N : {17, 33, 65}) {
        const AxiGrid g{N, N, 2.5};
        MetricLanczos m;
        m.F = AxiField(g, 3);
        m.y = AxiField(g, 5);
        m.q = AxiField(g, 4);
        m.K = AxiField(g, 4);
        const ResidualReport R = residual_reduced_system(m, {});
        const RicciReport Q = ricci_cross_check(m, {});
        const ConsistencyReport C = consistency_K(m, {});
        for (double s : R.sup) worst = std::max(worst, s);
        for (double s : Q.sup) worst = std::max(worst, s);
        worst = std::max({worst, Q.sigma_identity, C.sup_L, C.sup_identity});
        const AsymptoticReport A = asymptotic_fit(far_field(m), 5.0, 50.0);
        worst = std::max({worst, std::abs(A.M), std::abs(A.J)});
    }
    o.require(worst <= 1e-12, "max flat residual " + fmt("%.1e", worst));
    return o;
}

// ---- Solver runs ----------------------------------------------------------

StarParams star(double eps, double b) {
    EquationOfState eos;
    eos.gamma = 5.0 / 3.0;
    eos.c_light = 1.0;
    return make_params_b(eos, 1.0, eps, b);
}

SolverOptions grid_options(int N) {
    SolverOptions o;
    o.grid.n_in = N;
    o.grid.n_ex = (N - 1) * 3 / 4 + 1;
    return o;
}

const Solution& solution(double eps, double b, int N) {
    static std::map<std::tuple<double, double, int>, Solution> cache;
    const auto key = std::make_tuple(eps, b, N);
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, solve(star(eps, b), grid_options(N))).first;
    return it->second;
}

const std::vector<double> kEps{1e-3, 5e-4, 2.5e-4};

double slope(const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<double> lx, ly;
    for (std::size_t k = 0; k < x.size(); ++k) {
        lx.push_back(std::log(x[k]));
        ly.push_back(std::log(y[k]));
    }
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < x.size(); ++k) sx += lx[k], sy += ly[k], sxx += lx[k] * lx[k], sxy += lx[k] * ly[k];
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

Outcome criterion7() {
    Outcome o;
    std::vector<double> u, om, W, Y, X, K;
    double worst_ratio = 0.0, worst_support = 0.0;
    for (double e : kEps) {
        const Solution& S = solution(e, 1e-3, 65);
        const double c4 = std::pow(S.params.eos.c_light, 4);
        u.push_back(e);
        om.push_back(std::abs(S.params.Omega_O) * e);
        W.push_back(S.diag.sup_W);
        Y.push_back(S.diag.sup_Y);
        X.push_back(S.diag.sup_X);
        K.push_back(S.diag.sup_V / c4);
        for (double r : S.diag.contraction) worst_ratio = std::max(worst_ratio, r);
        worst_support = std::max(worst_support, S.diag.support_radius / S.params.r1);
    }
    o.require(worst_ratio < 1.0, "max outer ratio " + fmt("%.1e", worst_ratio));
    const double sW = slope(u, W) / 2, sY = slope(om, Y), sX = slope(u, X) / 2, sK = slope(u, K) / 2;
    for (auto [name, s] : {std::pair{"W/u^2", sW}, {"Y/(|Om|u)", sY}, {"X/u^2", sX}, {"K/u^2", sK}})
        o.require(std::abs(s - 1.0) <= 0.15, std::string(name) + " exponent ratio " + fmt("%.3f", s));

    // residuals of the converged state fall with the grid, so they are discretization error
    const ResidualReport& c = solution(1e-3, 1e-3, 65).diag.residuals;
    const ResidualReport& f = solution(1e-3, 1e-3, 129).diag.residuals;
    const double tol = 10 * SolverOptions{}.outer_tol * 1e-6;
    for (int k = 0; k < 5; ++k)
        o.require(f.sup[k] <= std::max(c.sup[k] / 2, tol),
                  "eq" + std::to_string(k) + " " + fmt("%.2e", c.sup[k]) + " -> " + fmt("%.2e", f.sup[k]));
    o.require(worst_support < 3.0, "support/r1 " + fmt("%.3f", worst_support));
    return o;
}

Outcome criterion8() {
    Outcome o;
    const double eps = 1e-3;
    const double c = solution(eps, 1e-3, 65).diag.residuals.first_integral_spread;
    const double f = solution(eps, 1e-3, 129).diag.residuals.first_integral_spread;
    // Richardson estimate of the fine-level h^2 error, against the solver tolerance on a quantity of size eps
    const double bound = std::max(std::abs(c - f) / 3, 10 * SolverOptions{}.outer_tol * eps);
    o.require(f <= bound, "spread " + fmt("%.2e", f) + " <= " + fmt("%.2e", bound));
    return o;
}

Outcome criterion9() {
    Outcome o;
    const double eps = 1e-3;
    const double c = solution(eps, 1e-3, 65).diag.consistency.sup_L;
    const double f = solution(eps, 1e-3, 129).diag.consistency.sup_L;
    const double bound = std::max(c / 2, 10 * SolverOptions{}.outer_tol * eps * eps);
    o.require(f <= bound, "star L " + fmt("%.2e", c) + " -> " + fmt("%.2e", f));
    std::vector<double> h, e;
    for (int N : {33, 65, 129}) {
        const AxiGrid g{N, N, 4.0};
        e.push_back(consistency_K(kerr_metric({1.0, 0.5}, g), {}, coincident(N, 3.0)).sup_L);
        h.push_back(g.h_in());
    }
    const double p = observed_order(h, e);
    o.require(std::abs(p - 2.0) <= 0.2, "Kerr vacuum L order " + fmt("%.2f", p));
    return o;
}

double tov_gap(double eps) {
    const Solution& S = solution(eps, 0.0, 65);
    const TovSolution t = tov_benchmark(S.params.eos, S.params.G_grav, eps);
    const auto& g = S.metric.F.grid;
    double gap = 0.0;
    for (int i = 0; i < g.n_in; ++i) {
        const NodeRef n{false, g.id_in(i, 0), {g.x_in(i), 0.0}};
        const double F = node_value(S.metric.F, n) - S.metric.F.offset;
        // areal radius of the equatorial circle through this node
        const double areal = std::exp(-F) * n.p.w * (1 + node_value(S.metric.q, n));
        gap = std::max(gap, std::abs(F - t.F(areal)));
    }
    return gap;
}

Outcome criterion10() {
    Outcome o;
    std::vector<double> rel;
    for (double e : kEps) {
        const auto& d = solution(e, 1e-3, 65).diag;
        o.require(d.M > 0.0, "M(" + fmt("%.2g", e) + ") = " + fmt("%.4e", d.M));
        rel.push_back(std::abs(d.M - d.M_N) / d.M_N);
    }
    const double s = slope(kEps, rel);
    o.require(std::abs(s - 1.0) <= 0.15, "|M-M_N|/M_N ~ eps^" + fmt("%.3f", s));
    std::vector<double> gaps;
    for (double e : kEps) gaps.push_back(tov_gap(e));
    for (std::size_t k = 1; k < gaps.size(); ++k) {
        const double r = gaps[k - 1] / gaps[k];
        o.require(std::abs(r - 4.0) <= 0.6, "TOV gap " + fmt("%.2e", gaps[k - 1]) + " -> " + fmt("%.2e", gaps[k]) + " ratio " + fmt("%.2f", r));
    }
    return o;
}

Outcome criterion11() {
    Outcome o;
    const AsymptoticReport& A = solution(1e-3, 1e-3, 129).diag.asymptotics;
    const char* names[4] = {"F", "A", "Pi", "e^K"};
    for (int k = 0; k < 4; ++k) {
        const bool ok = A.exact[k] || A.order[k] >= A.nominal[k] - 0.3;
        o.require(ok, std::string(names[k]) + (A.exact[k] ? " exact" : " order " + fmt("%.2f", A.order[k])) + " (nominal " +
                          fmt("%.0f", A.nominal[k]) + ")");
    }
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"Lane-Emden exactness", criterion1},
        {"distorted Lane-Emden degeneracy", criterion2},
        {"Green-operator correctness", criterion3},
        {"Kelvin machinery", criterion4},
        {"Kerr oracle", criterion5},
        {"flat-space zero", criterion6},
        {"solver convergence and scalings", criterion7},
        {"first integral", criterion8},
        {"K consistency", criterion9},
        {"positive mass and PN limit", criterion10},
        {"asymptotic flatness", criterion11},
    };
    int only = argc > 1 ? std::atoi(argv[1]) : 0;
    int failed = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        if (only && static_cast<int>(k) + 1 != only) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome r;
        try {
            r = criteria[k].second();
        } catch (const std::exception& e) {
            r.pass = false;
            r.detail = std::string("exception: ") + e.what();
        }
        const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("%s criterion %zu (%s): %s [%.1f s]\n", r.pass ? "PASS" : "FAIL", k + 1, criteria[k].first.c_str(),
                    r.detail.c_str(), dt);
        std::fflush(stdout);
        if (!r.pass) ++failed;
    }
    return failed == 0 ? 0 : 1;
}
