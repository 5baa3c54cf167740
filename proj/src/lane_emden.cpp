#include "rotstar/lane_emden.hpp"

#include <boost/numeric/odeint.hpp>

#include <array>
#include <cmath>
#include <map>
#include <mutex>

#include "rotstar/errors.hpp"
#include "rotstar/greens.hpp"

namespace rotstar {

namespace {

constexpr double kSeriesEnd = 0.01;
constexpr double kTableStep = 2e-3;

double series_theta(double nu, double x) {
    const double x2 = x * x;
    return 1.0 - x2 / 6.0 + nu * x2 * x2 / 120.0 - nu * (8 * nu - 5) * x2 * x2 * x2 / 15120.0;
}

double series_dtheta(double nu, double x) {
    const double x2 = x * x;
    return -x / 3.0 + nu * x * x2 / 30.0 - nu * (8 * nu - 5) * x2 * x2 * x / 2520.0;
}

inline double source(double nu, double th) { return th > 0.0 ? std::pow(th, nu) : 0.0; }

inline double second(double nu, double xi, double th, double dth) { return -source(nu, th) - 2.0 * dth / xi; }

std::array<double, 2> advance(double nu, double x0, std::array<double, 2> y, double x1) {
    namespace odeint = boost::numeric::odeint;
    using State = std::array<double, 2>;
    if (x1 == x0) return y;
    auto rhs = [nu](const State& s, State& ds, double x) {
        ds[0] = s[1];
        ds[1] = second(nu, x, s[0], s[1]);
    };
    odeint::integrate_adaptive(odeint::make_controlled(1e-15, 1e-15, odeint::runge_kutta_dopri5<State>()), rhs, y,
                               x0, x1, (x1 - x0) / 8);
    return y;
}

}  // namespace

LaneEmdenProfile::LaneEmdenProfile(double nu, double step, std::vector<double> th, std::vector<double> dth,
                                   double xi0)
    : nu_(nu), step_(step), xi0_(xi0), th_(std::move(th)), dth_(std::move(dth)) {}

// Quintic Hermite on the cell containing xi, using theta'' from the ODE.
double LaneEmdenProfile::theta(double xi) const {
    if (xi < xi0_) return series_theta(nu_, xi);
    const double s = (xi - xi0_) / step_;
    const int k = std::min(static_cast<int>(s), static_cast<int>(th_.size()) - 2);
    const double t = s - k, h = step_;
    const double x0 = xi0_ + k * h, x1 = x0 + h;
    const double f0 = th_[k], f1 = th_[k + 1], d0 = dth_[k], d1 = dth_[k + 1];
    const double s0 = second(nu_, x0, f0, d0), s1 = second(nu_, x1, f1, d1);
    const double t2 = t * t, t3 = t2 * t, t4 = t3 * t, t5 = t4 * t;
    const double H0 = 1 - 10 * t3 + 15 * t4 - 6 * t5, H5 = 10 * t3 - 15 * t4 + 6 * t5;
    const double H1 = t - 6 * t3 + 8 * t4 - 3 * t5, H4 = -4 * t3 + 7 * t4 - 3 * t5;
    const double H2 = 0.5 * (t2 - 3 * t3 + 3 * t4 - t5), H3 = 0.5 * (t3 - 2 * t4 + t5);
    return f0 * H0 + f1 * H5 + h * (d0 * H1 + d1 * H4) + h * h * (s0 * H2 + s1 * H3);
}

double LaneEmdenProfile::dtheta(double xi) const {
    if (xi < xi0_) return series_dtheta(nu_, xi);
    const double s = (xi - xi0_) / step_;
    const int k = std::min(static_cast<int>(s), static_cast<int>(th_.size()) - 2);
    const double t = s - k, h = step_;
    const double x0 = xi0_ + k * h, x1 = x0 + h;
    const double f0 = th_[k], f1 = th_[k + 1], d0 = dth_[k], d1 = dth_[k + 1];
    const double s0 = second(nu_, x0, f0, d0), s1 = second(nu_, x1, f1, d1);
    const double t2 = t * t, t3 = t2 * t, t4 = t3 * t;
    const double H0 = -30 * t2 + 60 * t3 - 30 * t4, H5 = -H0;
    const double H1 = 1 - 18 * t2 + 32 * t3 - 15 * t4, H4 = -12 * t2 + 28 * t3 - 15 * t4;
    const double H2 = 0.5 * (2 * t - 9 * t2 + 12 * t3 - 5 * t4), H3 = 0.5 * (3 * t2 - 8 * t3 + 5 * t4);
    return (f0 * H0 + f1 * H5) / h + d0 * H1 + d1 * H4 + h * (s0 * H2 + s1 * H3);
}

LaneEmdenProfile integrate_lane_emden(double nu, double xi_end, double tol) {
    namespace odeint = boost::numeric::odeint;
    using State = std::array<double, 2>;
    if (!(nu >= 0.0)) fail(Status::domain, "polytropic index must be non-negative", "lane_emden");
    if (!(xi_end > kSeriesEnd)) fail(Status::domain, "integration range too short", "lane_emden");
    const int nodes = static_cast<int>(std::ceil((xi_end - kSeriesEnd) / kTableStep)) + 1;
    const double end = kSeriesEnd + (nodes - 1) * kTableStep;
    std::vector<double> th, dth;
    th.reserve(nodes);
    dth.reserve(nodes);
    auto rhs = [nu](const State& y, State& dy, double x) {
        dy[0] = y[1];
        dy[1] = second(nu, x, y[0], y[1]);
    };
    State y{series_theta(nu, kSeriesEnd), series_dtheta(nu, kSeriesEnd)};
    auto stepper = odeint::make_controlled(tol, tol, odeint::runge_kutta_dopri5<State>());
    odeint::integrate_const(stepper, rhs, y, kSeriesEnd, end + 0.5 * kTableStep, kTableStep,
                            [&](const State& s, double) {
                                th.push_back(s[0]);
                                dth.push_back(s[1]);
                            });
    th.resize(nodes);
    dth.resize(nodes);
    return LaneEmdenProfile(nu, kTableStep, std::move(th), std::move(dth), kSeriesEnd);
}

double LaneEmdenSolution::theta(double xi) const {
    xi = std::abs(xi);
    return xi <= xi1 ? profile.theta(xi) : mu1 * (1.0 / xi - 1.0 / xi1);
}

double LaneEmdenSolution::dtheta(double xi) const {
    const double s = xi < 0 ? -1.0 : 1.0;
    xi = std::abs(xi);
    return s * (xi <= xi1 ? profile.dtheta(xi) : -mu1 / (xi * xi));
}

LaneEmdenSolution solve_classical(double nu, double tol) {
    if (!(nu >= 0.0 && nu < 5.0)) fail(Status::domain, "polytropic index must lie in [0, 5)", "lane_emden");
    for (double xi_end = 16.0; xi_end <= 1024.0; xi_end *= 2.0) {
        LaneEmdenProfile prof = integrate_lane_emden(nu, xi_end);
        // first table cell where theta changes sign
        double lo = -1.0;
        for (double x = kSeriesEnd; x + kTableStep <= prof.xi_end() + 1e-12; x += kTableStep)
            if (prof.theta(x + kTableStep) <= 0.0) {
                lo = x;
                break;
            }
        if (lo < 0.0) continue;
        const double cell_lo = lo;
        double hi = lo + kTableStep;
        while (hi - lo > tol) {
            const double mid = 0.5 * (lo + hi);
            (prof.theta(mid) > 0.0 ? lo : hi) = mid;
        }
        // The table cell containing the zero straddles the kink of the clamped source;
        // polish by Newton on a direct integration from the last interior node.
        const double x0 = cell_lo;
        const std::array<double, 2> y0{prof.theta(x0), prof.dtheta(x0)};
        double xi = 0.5 * (lo + hi);
        std::array<double, 2> y = y0;
        for (int it = 0; it < 8; ++it) {
            y = advance(nu, x0, y0, xi);
            const double dx = y[0] / y[1];
            xi -= dx;
            if (std::abs(dx) < 1e-15 * xi) break;
        }
        y = advance(nu, x0, y0, xi);
        LaneEmdenSolution sol;
        sol.nu = nu;
        sol.xi1 = xi;
        sol.mu1 = xi * xi * std::abs(y[1]);
        sol.profile = std::move(prof);
        return sol;
    }
    fail(Status::convergence, "no zero of the Lane-Emden function found", "lane_emden");
}

const LaneEmdenSolution& classical_cached(double nu) {
    static std::mutex mu;
    static std::map<double, LaneEmdenSolution> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(nu);
    if (it == cache.end()) it = cache.emplace(nu, solve_classical(nu)).first;
    return it->second;
}

double DistortedLaneEmden::Theta(double w, double z) const {
    return classical.theta(std::hypot(w, z)) + eval(delta, {w, z});
}

DistortedLaneEmden solve_distorted(double nu, double b, const DistortedOptions& opt) {
    if (b < 0.0) fail(Status::domain, "rotation parameter must be non-negative", "lane_emden");
    DistortedLaneEmden out;
    out.nu = nu;
    out.b = b;
    out.classical = classical_cached(nu);
    const double xi1 = out.classical.xi1;
    out.Xi0 = 4.0 * xi1;
    const AxiGrid G{opt.n_in, opt.n_ex, out.Xi0};

    auto centrifugal = [&](double w, double z) {
        const double c = cutoff(std::hypot(w, z) / out.Xi0);
        return 0.5 * b * c * c * w * w;
    };
    std::vector<double> th(G.size_in()), base(G.size_in()), cf(G.size_in());
    for (int i = 0; i < G.n_in; ++i)
        for (int j = 0; j < G.n_in; ++j) {
            const auto k = G.id_in(i, j);
            th[k] = out.classical.theta(std::hypot(G.x_in(i), G.x_in(j)));
            base[k] = source(nu, th[k]);
            cf[k] = centrifugal(G.x_in(i), G.x_in(j));
        }

    // Iterate on delta = Theta - theta: the b = 0 fixed point is delta = 0 exactly.
    std::vector<double> delta(G.size_in(), 0.0);
    AxiField src(G, 7), pot(G, 3);
    double prev_change = 0.0;
    for (int it = 1; it <= opt.max_iter; ++it) {
        for (int i = 0; i < G.n_in; ++i)
            for (int j = 0; j < G.n_in; ++j) {
                const auto k = G.id_in(i, j);
                const double Th = th[k] + delta[k];
                if (Th > 0.0 && std::hypot(G.x_in(i), G.x_in(j)) >= out.Xi0)
                    fail(Status::regime, "Theta positive beyond Xi0; rotation parameter too large", "lane_emden");
                src.in[k] = source(nu, Th) - base[k];
            }
        pot = k_n(src, 3);
        double change = 0.0;
        for (std::size_t k = 0; k < delta.size(); ++k) {
            const double rhs = cf[k] + pot.in[k] - pot.in[0];
            const double next = (1.0 - opt.damping) * delta[k] + opt.damping * rhs;
            change = std::max(change, std::abs(next - delta[k]));
            delta[k] = next;
        }
        out.iterations = it;
        out.last_change = change;
        if (prev_change > 0.0) out.contraction = change / prev_change;
        prev_change = change;
        if (change < opt.tol) break;
        if (it == opt.max_iter)
            fail(Status::convergence,
                 "distorted Lane-Emden iteration did not converge; last change " + std::to_string(change),
                 "lane_emden");
    }

    // Final field: exact update from the converged source on both patches.
    for (std::size_t k = 0; k < delta.size(); ++k) src.in[k] = source(nu, th[k] + delta[k]) - base[k];
    pot = k_n(src, 3);
    out.delta = AxiField(G, 3, -pot.in[0]);
    for (std::size_t k = 0; k < delta.size(); ++k) out.delta.in[k] = cf[k] + pot.in[k] - pot.in[0];
    for (int i = 0; i < G.n_ex; ++i)
        for (int j = 0; j < G.n_ex; ++j) {
            const auto k = G.id_ex(i, j);
            if (k == 0) {
                out.delta.ex[0] = pot.ex[0];
                continue;
            }
            const Point p = outer_node_point(G, i, j);
            out.delta.ex[k] = pot.ex[k] + std::hypot(p.w, p.z) / out.Xi0 * centrifugal(p.w, p.z);
        }

    // sup Theta beyond Xi0 must be negative
    for (int i = 0; i < G.n_ex; ++i)
        for (int j = 0; j < G.n_ex; ++j) {
            const auto k = G.id_ex(i, j);
            double Th;
            if (k == 0) {
                Th = out.theta_inf();
            } else {
                const Point p = outer_node_point(G, i, j);
                const double r = std::hypot(p.w, p.z);
                Th = out.classical.theta(r) + out.delta.offset + out.Xi0 / r * out.delta.ex[k];
            }
            if (Th >= 0.0) fail(Status::regime, "Theta not negative beyond Xi0", "lane_emden");
        }

    // vacuum boundary per ray
    const double hs = 0.25 * G.h_in();
    for (int m = 0; m < opt.rays; ++m) {
        const double zeta = opt.rays > 1 ? static_cast<double>(m) / (opt.rays - 1) : 0.0;
        const double sw = std::sqrt(std::max(0.0, 1.0 - zeta * zeta));
        auto along = [&](double s) { return out.Theta(s * sw, s * zeta); };
        double lo = 0.0, hi = -1.0;
        for (double s = hs; s <= out.Xi0; s += hs) {
            if (along(s) <= 0.0) {
                hi = s;
                break;
            }
            lo = s;
        }
        if (hi < 0.0) fail(Status::regime, "no vacuum boundary inside Xi0", "lane_emden");
        while (hi - lo > 1e-10) {
            const double mid = 0.5 * (lo + hi);
            (along(mid) > 0.0 ? lo : hi) = mid;
        }
        out.zeta.push_back(zeta);
        out.Xi1.push_back(0.5 * (lo + hi));
    }
    return out;
}

NewtonianFields newtonian_fields(const DistortedLaneEmden& dle, const StarParams& p) {
    const AxiGrid& X = dle.delta.grid;
    const AxiGrid G{X.n_in, X.n_ex, p.R0};
    const auto& eos = p.eos;
    NewtonianFields nf;
    const double uO = p.u_O;
    const double Th_inf = dle.theta_inf();
    nf.u_N = AxiField(G, 3, uO * Th_inf);
    nf.Phi_N = AxiField(G, 3, 0.0);
    nf.rho_N = AxiField(G, 7);
    nf.P_N = AxiField(G, 7);
    nf.Omega = AxiField(G, 7);
    const double cl_inf = dle.classical.theta_inf();
    auto half_w2Omega2 = [&](double w, double z) {
        const double om = omega_profile(p, std::hypot(w, z));
        return 0.5 * om * om * w * w;
    };
    // Phi_N = u_O - u_N + Omega^2 varpi^2/2 + Phi_N(O), Phi_N(O) = -u_O (1 - Theta_inf)
    const double phi_O = -uO * (1.0 - Th_inf);
    for (int i = 0; i < G.n_in; ++i)
        for (int j = 0; j < G.n_in; ++j) {
            const auto k = G.id_in(i, j);
            const double w = G.x_in(i), z = G.x_in(j);
            const double xi = std::hypot(X.x_in(i), X.x_in(j));
            const double u = uO * (dle.classical.theta(xi) + dle.delta.in[k]);
            nf.u_N.in[k] = u;
            nf.rho_N.in[k] = rho_newtonian(eos, u);
            nf.P_N.in[k] = p_newtonian(eos, u);
            nf.Omega.in[k] = omega_profile(p, std::hypot(w, z));
            nf.Phi_N.in[k] = uO - u + half_w2Omega2(w, z) + phi_O;
        }
    for (int i = 0; i < G.n_ex; ++i)
        for (int j = 0; j < G.n_ex; ++j) {
            const auto k = G.id_ex(i, j);
            double tail;  // (r/R0)(Theta - Theta_inf) on the xi-grid node
            if (k == 0) {
                tail = dle.classical.mu1 / dle.Xi0 + dle.delta.ex[0];
            } else {
                const Point q = outer_node_point(X, i, j);
                const double xi = std::hypot(q.w, q.z);
                tail = xi / dle.Xi0 * (dle.classical.theta(xi) - cl_inf) + dle.delta.ex[k];
                const Point pp = outer_node_point(G, i, j);
                const double r = std::hypot(pp.w, pp.z);
                const double u = uO * (Th_inf + dle.Xi0 / xi * tail);
                if (u > 0.0) fail(Status::regime, "positive enthalpy beyond R0", "lane_emden");
                nf.Omega.ex[k] = std::pow(r / p.R0, 5) * omega_profile(p, r);
                nf.Phi_N.ex[k] = -uO * tail + r / p.R0 * half_w2Omega2(pp.w, pp.z);
            }
            nf.u_N.ex[k] = uO * tail;
            if (k == 0) nf.Phi_N.ex[0] = -uO * tail;
        }
    // Phi_N -> -G M_N / r: the origin image holds -G M_N / R0.
    nf.M_N = -nf.Phi_N.ex[0] * p.R0 / p.G_grav;
    return nf;
}

AxiField phi_from_density(const AxiField& rho_N, double G) {
    AxiField f = k_n(rho_N, 3);
    const double s = -4.0 * M_PI * G;
    for (double& v : f.in) v *= s;
    for (double& v : f.ex) v *= s;
    return f;
}

}  // namespace rotstar
