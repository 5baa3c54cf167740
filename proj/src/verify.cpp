#include "rotstar/verify.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <limits>

#include "rotstar/errors.hpp"

namespace rotstar {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Matter {
    double rho = 0.0, P = 0.0, u = 0.0, Om = 0.0;
    bool has_u = false;
};

double pick(const NodeValues& v, const NodeRef& n) {
    const auto& a = n.outer ? v.ex : v.in;
    return a.empty() ? 0.0 : a[n.k];
}

Matter matter_at(const FluidState& f, const NodeRef& n) {
    Matter m;
    m.rho = pick(f.rho, n);
    m.P = pick(f.P, n);
    m.u = pick(f.u, n);
    m.Om = pick(f.Omega, n);
    m.has_u = !(n.outer ? f.u.ex : f.u.in).empty();
    return m;
}

NodeValues nan_nodes(const AxiGrid& g) {
    NodeValues v;
    v.in.assign(g.size_in(), kNaN);
    v.ex.assign(g.size_ex(), kNaN);
    return v;
}

double& slot(NodeValues& v, const NodeRef& n) { return n.outer ? v.ex[n.k] : v.in[n.k]; }

// ∂1(a_1/Π) + ∂3(a_3/Π)
double div_over(const Jet& a, const Jet& Pi) {
    return (a.d11 + a.d33) / Pi.v - (a.d1 * Pi.d1 + a.d3 * Pi.d3) / (Pi.v * Pi.v);
}

// Right-hand sides of the first-order K system from regularized pieces
// (finite on the axis).
struct KTilde {
    double K1, K3, Pi1, Pi3;
};
KTilde k_tilde(const Jet& F, const Jet& y, const Jet& q, double w) {
    const double p = 1.0 + q.v;
    const double Pi = w * p;
    const double Pi1 = p + w * q.d1, Pi3 = w * q.d3;
    const double Pi11 = 2 * q.d1 + w * q.d11, Pi33 = w * q.d33, Pi13 = q.d3 + w * q.d13;
    const double a1 = 2 * y.v + w * y.d1, a3 = w * y.d3;
    const double e4 = std::exp(4 * F.v);
    const double rd = 0.5 * (Pi11 - Pi33) + Pi * (F.d1 * F.d1 - F.d3 * F.d3) - e4 * w * (a1 * a1 - a3 * a3) / (4 * p);
    const double re = Pi13 + 2 * Pi * F.d1 * F.d3 - e4 * w * a1 * a3 / (2 * p);
    const double D = Pi1 * Pi1 + Pi3 * Pi3;
    return {(Pi1 * rd + Pi3 * re) / D, (-Pi3 * rd + Pi1 * re) / D, Pi1, Pi3};
}

}  // namespace

ResidualReport residual_reduced_system(const MetricLanczos& m, const FluidState& fluid, const RegionMask& mask) {
    const AxiGrid& g = m.F.grid;
    const double c = m.c_light, c2 = c * c, c4 = c2 * c2;
    const double kap = 4 * kPi * m.G_grav / c4;
    const MetricJets J(m);
    ResidualReport R;
    for (auto& e : R.eq) e = nan_nodes(g);
    double fi_lo = std::numeric_limits<double>::infinity(), fi_hi = -fi_lo;
    R.b_margin = std::numeric_limits<double>::infinity();
    R.c_margin = std::numeric_limits<double>::infinity();
    for (const auto& n : grid_nodes(g)) {
        if (mask && !mask(n)) continue;
        const LanczosJets L = J.at(n);
        const Matter f = matter_at(fluid, n);
        const Jet &F = L.F, &A = L.A, &Pi = L.Pi, &K = L.K;
        const double bq = b_quantity(F.v, A.v, Pi.v, f.Om, c);
        R.b_margin = std::min(R.b_margin, bq);
        R.c_margin = std::min(R.c_margin, Pi.d1 * Pi.d1 + Pi.d3 * Pi.d3);
        if (f.rho > 0.0 && f.has_u && bq > 0.0) {
            const double fi = f.u / c2 + 0.5 * std::log(bq);
            fi_lo = std::min(fi_lo, fi);
            fi_hi = std::max(fi_hi, fi);
        }
        if (n.p.w <= 0.0) continue;
        const double eps = c2 * f.rho;
        const double t = 1.0 + f.Om * A.v / c;
        const double e2F = std::exp(2 * F.v), em2F = 1.0 / e2F;
        const double D = e2F * t * t - em2F * f.Om * f.Om * Pi.v * Pi.v / c2;
        const double Nn = e2F * t * t + em2F * f.Om * f.Om * Pi.v * Pi.v / c2;
        const double e2KF = std::exp(2 * (K.v - F.v));
        const double e4F = e2F * e2F;
        const double sA = A.d1 * A.d1 + A.d3 * A.d3;
        const double r0 = F.d11 + F.d33 + (Pi.d1 * F.d1 + Pi.d3 * F.d3) / Pi.v + e4F * sA / (2 * Pi.v * Pi.v) -
                          kap * e2KF * ((eps + f.P) * Nn / D + 2 * f.P);
        const double r1 = A.d11 + A.d33 - (Pi.d1 * A.d1 + Pi.d3 * A.d3) / Pi.v + 4 * (F.d1 * A.d1 + F.d3 * A.d3) +
                          4 * kap * e2KF * (eps + f.P) * em2F * (f.Om / c) * Pi.v * Pi.v * t / D;
        const double r2 = Pi.d11 + Pi.d33 - 4 * kap * e2KF * f.P * Pi.v;
        const double r3 = Pi.d1 * K.d1 - Pi.d3 * K.d3 -
                          (0.5 * (Pi.d11 - Pi.d33) + Pi.v * (F.d1 * F.d1 - F.d3 * F.d3) -
                           e4F * (A.d1 * A.d1 - A.d3 * A.d3) / (4 * Pi.v));
        const double r4 = Pi.d3 * K.d1 + Pi.d1 * K.d3 -
                          (Pi.d13 + 2 * Pi.v * F.d1 * F.d3 - e4F * A.d1 * A.d3 / (2 * Pi.v));
        const double r[5] = {r0, r1, r2, r3, r4};
        for (int e = 0; e < 5; ++e) {
            slot(R.eq[e], n) = r[e];
            R.sup[e] = std::max(R.sup[e], std::abs(r[e]));
        }
        ++R.nodes;
    }
    R.first_integral_spread = fi_hi >= fi_lo ? fi_hi - fi_lo : 0.0;
    return R;
}

RicciReport ricci_cross_check(const MetricLanczos& m, const FluidState& fluid, const RegionMask& mask) {
    const AxiGrid& g = m.F.grid;
    const double c = m.c_light, c2 = c * c, c4 = c2 * c2;
    const double kap8 = 8 * kPi * m.G_grav / c4;
    const MetricJets J(m);
    RicciReport R;
    for (auto& e : R.eq) e = nan_nodes(g);
    for (const auto& n : grid_nodes(g)) {
        if (mask && !mask(n)) continue;
        if (n.p.w <= 0.0) continue;
        const LanczosJets L = J.at(n);
        const Matter mt = matter_at(fluid, n);
        const Jet f = exp(2.0 * L.F);
        const Jet k = -1.0 * (f * L.A);
        const Jet l = -1.0 * (f * sq(L.A)) + exp(-2.0 * L.F) * sq(L.Pi);
        const Jet mm = 2.0 * (L.K - L.F);
        const Jet& Pi = L.Pi;
        const double P = Pi.v;

        const double sigma = f.d1 * l.d1 + f.d3 * l.d3 + k.d1 * k.d1 + k.d3 * k.d3;
        const double e4F = std::exp(4 * L.F.v);
        const double sigma_lanczos = e4F * (L.A.d1 * L.A.d1 + L.A.d3 * L.A.d3) -
                                     4 * P * P * (L.F.d1 * L.F.d1 + L.F.d3 * L.F.d3) +
                                     4 * P * (Pi.d1 * L.F.d1 + Pi.d3 * L.F.d3);
        const double sig_scale = std::abs(sigma) + std::abs(sigma_lanczos) + 1e-300;
        R.sigma_identity = std::max(R.sigma_identity, std::abs(sigma - sigma_lanczos) / sig_scale);

        // stress-energy, covariant Lewis components
        const double eps = c2 * mt.rho, Pr = mt.P, w = mt.Om / c;
        const double fp = f.v - 2 * w * k.v - w * w * l.v;
        const double S00 = 0.5 * (eps + Pr) / fp * ((f.v - w * k.v) * (f.v - w * k.v) + w * w * P * P) + Pr * f.v;
        const double S02 = 0.5 * (eps + Pr) / fp * (-k.v * f.v - 2 * w * f.v * l.v + w * w * k.v * l.v) - Pr * k.v;
        const double S22 = 0.5 * (eps + Pr) / fp * (P * P + (k.v + w * l.v) * (k.v + w * l.v)) - Pr * l.v;
        const double S11 = 0.5 * std::exp(mm.v) * (eps - Pr);

        const double em = std::exp(mm.v);
        const double r00 = div_over(f, Pi) + f.v * sigma / (P * P * P) - (2 * em / P) * kap8 * S00;
        const double r02 = div_over(k, Pi) + k.v * sigma / (P * P * P) + (2 * em / P) * kap8 * S02;
        const double r22 = div_over(l, Pi) + l.v * sigma / (P * P * P) + (2 * em / P) * kap8 * S22;
        const double mix = (mm.d1 * Pi.d1 - mm.d3 * Pi.d3) / P;
        const double r11 = -mm.d11 - mm.d33 - 2 * Pi.d11 / P + mix + (f.d1 * l.d1 + k.d1 * k.d1) / (P * P) -
                           2 * kap8 * S11;
        const double r33 = -mm.d11 - mm.d33 - 2 * Pi.d33 / P - mix + (f.d3 * l.d3 + k.d3 * k.d3) / (P * P) -
                           2 * kap8 * S11;
        const double r13 = -2 * Pi.d13 / P + (mm.d3 * Pi.d1 + mm.d1 * Pi.d3) / P +
                           (f.d1 * l.d3 + l.d1 * f.d3 + 2 * k.d1 * k.d3) / (2 * P * P);
        const double r[6] = {r00, r02, r22, r11, r33, r13};
        for (int e = 0; e < 6; ++e) {
            slot(R.eq[e], n) = r[e];
            R.sup[e] = std::max(R.sup[e], std::abs(r[e]));
        }
        ++R.nodes;
    }
    return R;
}

ConsistencyReport consistency_K(const MetricLanczos& m, const FluidState& fluid, const RegionMask& mask) {
    const AxiGrid& g = m.F.grid;
    const double c = m.c_light, c4 = c * c * c * c;
    const double kap = 16 * kPi * m.G_grav / c4;
    const MetricJets J(m);
    ConsistencyReport R;
    R.K1 = nan_nodes(g);
    R.K3 = nan_nodes(g);
    std::vector<KTilde> kt;
    const auto nodes = grid_nodes(g);
    kt.reserve(nodes.size());
    for (const auto& n : nodes) {
        const KTilde t = k_tilde(J.F(n), J.y(n), J.q(n), n.p.w);
        slot(R.K1, n) = t.K1;
        slot(R.K3, n) = t.K3;
        kt.push_back(t);
    }
    const AxiField K1f = field_from_nodes(g, 5, R.K1, -1, 1);
    const AxiField K3f = field_from_nodes(g, 5, R.K3, 1, -1);
    const NodeValues dzK1 = node_values(derivative(K1f, Axis::z, 1));
    const NodeValues dwK3 = node_values(derivative(K3f, Axis::w, 1));
    R.L = nan_nodes(g);
    R.rhs = nan_nodes(g);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const auto& n = nodes[i];
        if (mask && !mask(n)) continue;
        const double L = (n.outer ? dzK1.ex[n.k] : dzK1.in[n.k]) - (n.outer ? dwK3.ex[n.k] : dwK3.in[n.k]);
        const Jet F = J.F(n), K = J.K(n);
        const Matter mt = matter_at(fluid, n);
        const double Pi = n.p.w * (1.0 + J.q(n).v);
        const KTilde& t = kt[i];
        const double D = t.Pi1 * t.Pi1 + t.Pi3 * t.Pi3;
        const double rhs = kap * std::exp(2 * (K.v - F.v)) * mt.P * Pi / D *
                           ((K.d1 - t.K1) * t.Pi3 - (K.d3 - t.K3) * t.Pi1);
        slot(R.L, n) = L;
        slot(R.rhs, n) = rhs;
        R.sup_L = std::max(R.sup_L, std::abs(L));
        R.sup_identity = std::max(R.sup_identity, std::abs(L - rhs));
    }
    return R;
}

FarField far_field(const MetricLanczos& m) {
    FarField ff;
    ff.F = [F = m.F](Point p) { return eval(F, p); };
    ff.y = [y = m.y](Point p) { return eval(y, p); };
    ff.q = [q = m.q](Point p) { return eval(q, p); };
    ff.K = [K = m.K](Point p) { return eval(K, p); };
    ff.F_inf = m.F.offset;
    ff.c_light = m.c_light;
    ff.G_grav = m.G_grav;
    return ff;
}

namespace {

double legendre(int l, double x) {
    switch (l) {
        case 0: return 1.0;
        case 2: return 0.5 * (3 * x * x - 1);
        case 4: return (35 * x * x * x * x - 30 * x * x + 3) / 8.0;
        default: return std::legendre(l, x);
    }
}

// Least-squares fit of v(r, zeta) on sum_{k} sum_{l even <= 2(k - k0)} a_{kl} P_l(zeta)/r^k,
// k = k0..k0+3; returns the coefficient of 1/r^k0.
double leading_coefficient(const std::vector<std::array<double, 3>>& samples, int k0) {
    std::vector<std::pair<int, int>> basis;
    for (int k = k0; k <= k0 + 3; ++k)
        for (int l = 0; l <= 2 * (k - k0) && l <= 4; l += 2) basis.push_back({k, l});
    Eigen::MatrixXd M(samples.size(), basis.size());
    Eigen::VectorXd b(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double r = samples[i][0], zeta = samples[i][1];
        // scale columns so the system stays well conditioned
        for (std::size_t j = 0; j < basis.size(); ++j)
            M(i, j) = legendre(basis[j].second, zeta) * std::pow(samples.front()[0] / r, basis[j].first);
        b(i) = samples[i][2];
    }
    const Eigen::VectorXd x = M.colPivHouseholderQr().solve(b);
    return x(0) * std::pow(samples.front()[0], k0);
}

}  // namespace

double observed_order(const std::vector<double>& h, const std::vector<double>& err) {
    if (h.size() != err.size() || h.size() < 2) fail(Status::domain, "need at least two levels", "verify");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(h.size());
    for (std::size_t i = 0; i < h.size(); ++i) {
        const double x = std::log(h[i]), y = std::log(std::abs(err[i]));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

AsymptoticReport asymptotic_fit(const FarField& ff, double r_lo, double r_hi, double order_tol) {
    if (!(r_hi > r_lo && r_lo > 0)) fail(Status::domain, "asymptotic window must satisfy 0 < r_lo < r_hi", "verify");
    const int n_r = 14, n_z = 9;
    std::vector<double> radii(n_r), zetas(n_z);
    for (int i = 0; i < n_r; ++i) radii[i] = r_lo * std::pow(r_hi / r_lo, i / (n_r - 1.0));
    for (int j = 0; j < n_z; ++j) zetas[j] = 0.95 * j / (n_z - 1.0);
    auto point = [](double r, double zeta) { return Point{r * std::sqrt(1 - zeta * zeta), r * zeta}; };

    std::vector<std::array<double, 3>> sF, sY;
    for (double r : radii)
        for (double zeta : zetas) {
            const Point p = point(r, zeta);
            sF.push_back({r, zeta, ff.F(p) - ff.F_inf});
            sY.push_back({r, zeta, ff.y(p) * r * r * r});
        }
    const double c1 = leading_coefficient(sF, 1);
    const double d0 = leading_coefficient(sY, 0);
    AsymptoticReport R;
    R.r_lo = r_lo;
    R.r_hi = r_hi;
    const double c = ff.c_light, G = ff.G_grav;
    R.M = -c1 * c * c / G;
    R.J = d0 * c * c * c / (2 * G);

    const double scaleF = std::abs(c1) / r_lo + 1e-300;
    const double scaleY = std::abs(d0) / (r_lo * r_lo * r_lo) + 1e-300;
    const std::array<double, 4> scale{scaleF, scaleY, scaleF, scaleF};
    std::array<std::vector<double>, 4> sup;
    for (auto& s : sup) s.assign(n_r, 0.0);
    for (int i = 0; i < n_r; ++i) {
        const double r = radii[i];
        for (double zeta : zetas) {
            const Point p = point(r, zeta);
            const double rem[4] = {ff.F(p) - ff.F_inf - c1 / r, ff.y(p) - d0 / (r * r * r), ff.q(p),
                                   std::expm1(ff.K(p))};
            for (int e = 0; e < 4; ++e) sup[e][i] = std::max(sup[e][i], std::abs(rem[e]));
        }
    }
    R.flat = true;
    for (int e = 0; e < 4; ++e) {
        const double mx = *std::max_element(sup[e].begin(), sup[e].end());
        R.exact[e] = mx <= 1e-11 * scale[e];
        if (R.exact[e]) {
            R.order[e] = std::numeric_limits<double>::infinity();
            continue;
        }
        std::vector<double> rr, ee;
        for (int i = 0; i < n_r; ++i)
            if (sup[e][i] > 0.0) {
                rr.push_back(radii[i]);
                ee.push_back(sup[e][i]);
            }
        R.order[e] = rr.size() >= 2 ? -observed_order(rr, ee) : std::numeric_limits<double>::infinity();
        if (R.order[e] < R.nominal[e] - order_tol) R.flat = false;
    }
    return R;
}

double TovSolution::enthalpy(double radius) const {
    if (radius >= R) return 0.0;
    if (radius <= 0.0) return u.front();
    const std::size_t n = r.size();
    auto it = std::upper_bound(r.begin(), r.end(), radius);
    std::size_t i = std::min<std::size_t>(std::max<std::ptrdiff_t>(it - r.begin(), 1), n - 1) - 1;
    const double h = r[i + 1] - r[i], t = (radius - r[i]) / h;
    const double h00 = (1 + 2 * t) * (1 - t) * (1 - t), h10 = t * (1 - t) * (1 - t);
    const double h01 = t * t * (3 - 2 * t), h11 = t * t * (t - 1);
    return h00 * u[i] + h10 * h * dudr[i] + h01 * u[i + 1] + h11 * h * dudr[i + 1];
}

double TovSolution::mass(double radius) const {
    if (radius >= R) return M;
    if (radius <= 0.0) return 0.0;
    auto it = std::upper_bound(r.begin(), r.end(), radius);
    std::size_t i = std::min<std::size_t>(std::max<std::ptrdiff_t>(it - r.begin(), 1), r.size() - 1) - 1;
    const double t = (radius - r[i]) / (r[i + 1] - r[i]);
    return (1 - t) * m[i] + t * m[i + 1];
}

double TovSolution::F(double radius) const {
    const double c2 = c_light * c_light;
    if (radius >= R) return 0.5 * std::log1p(-2 * G_grav * M / (c2 * radius));
    return F_surface - enthalpy(radius) / c2;
}

TovSolution tov_benchmark(const EquationOfState& eos, double G, double u_O, double tol, int table) {
    namespace ode = boost::numeric::odeint;
    validate(eos);
    if (!(u_O > 0.0)) fail(Status::domain, "central enthalpy must be positive", "tov");
    if (table < 16) fail(Status::domain, "TOV table too small", "tov");
    const double c = eos.c_light, c2 = c * c;
    using State = std::array<double, 2>;  // u, m
    auto rhs = [&](const State& x, State& dx, double r) {
        const double uu = x[0];
        const double rho = density_from_enthalpy(eos, uu), P = pressure_from_enthalpy(eos, uu);
        const double denom = r * r * (1 - 2 * G * x[1] / (c2 * r));
        dx[0] = -G * (x[1] + 4 * kPi * r * r * r * P / c2) / denom;
        dx[1] = 4 * kPi * r * r * rho;
    };
    const double rho_c = density_from_enthalpy(eos, u_O), P_c = pressure_from_enthalpy(eos, u_O);
    const double a = std::sqrt(u_O / (4 * kPi * G * rho_c));
    const double curv = (2 * kPi / 3) * G * (rho_c + 3 * P_c / c2);
    const double r_s = 1e-5 * a;
    auto series = [&](double r) { return State{u_O - curv * r * r, 4 * kPi / 3 * rho_c * r * r * r}; };

    // first pass: locate the surface
    auto make = [&] { return ode::make_dense_output(tol, tol, ode::runge_kutta_dopri5<State>()); };
    auto stepper = make();
    stepper.initialize(series(r_s), r_s, 1e-3 * a);
    double R = 0.0;
    for (int steps = 0;; ++steps) {
        if (steps > 2000000) fail(Status::convergence, "TOV integration did not reach the surface", "tov");
        stepper.do_step(rhs);
        if (stepper.current_state()[0] <= 0.0) {
            double lo = stepper.previous_time(), hi = stepper.current_time();
            State x;
            for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
                const double mid = 0.5 * (lo + hi);
                stepper.calc_state(mid, x);
                (x[0] > 0.0 ? lo : hi) = mid;
            }
            R = 0.5 * (lo + hi);
            break;
        }
        if (2 * G * stepper.current_state()[1] / (c2 * stepper.current_time()) >= 1.0)
            fail(Status::regime, "TOV star collapsed inside its horizon", "tov");
    }

    TovSolution sol;
    sol.G_grav = G;
    sol.c_light = c;
    sol.R = R;
    sol.r.resize(table);
    sol.u.resize(table);
    sol.dudr.resize(table);
    sol.m.resize(table);
    auto stepper2 = make();
    stepper2.initialize(series(r_s), r_s, 1e-3 * a);
    for (int i = 0; i < table; ++i) {
        const double ri = R * i / (table - 1.0);
        State x;
        if (ri <= r_s) {
            x = series(ri);
        } else {
            while (stepper2.current_time() < ri) stepper2.do_step(rhs);
            stepper2.calc_state(ri, x);
        }
        State dx{};
        if (ri > 0.0)
            rhs(x, dx, ri);
        else
            dx = {0.0, 0.0};
        sol.r[i] = ri;
        sol.u[i] = i + 1 == table ? 0.0 : x[0];
        sol.dudr[i] = dx[0];
        sol.m[i] = x[1];
    }
    sol.M = sol.m.back();
    sol.F_surface = 0.5 * std::log1p(-2 * G * sol.M / (c2 * R));
    return sol;
}

}  // namespace rotstar
