#include "rotstar/pn_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rotstar/errors.hpp"
#include "rotstar/greens.hpp"

namespace rotstar {

namespace {

constexpr double kPi = 3.14159265358979323846;

double& slot(NodeValues& v, const NodeRef& n) { return n.outer ? v.ex[n.k] : v.in[n.k]; }
double get(const NodeValues& v, const NodeRef& n) { return n.outer ? v.ex[n.k] : v.in[n.k]; }

NodeValues zero_nodes(const AxiGrid& g) {
    NodeValues v;
    v.in.assign(g.size_in(), 0.0);
    v.ex.assign(g.size_ex(), 0.0);
    return v;
}

Jet pick(const FieldJet& f, const NodeRef& n) {
    const PatchJet& P = n.outer ? f.ex : f.in;
    return {P.v[n.k], P.d1[n.k], P.d3[n.k], P.d11[n.k], P.d13[n.k], P.d33[n.k]};
}

// Newtonian node data, fixed for a run.
struct Background {
    AxiGrid g;
    std::vector<NodeRef> nodes;
    NodeValues uN, rhoN, PN, Phi, Om;
    FieldJet PhiJ;

    Background(const NewtonianFields& nf)
        : g(nf.u_N.grid), nodes(grid_nodes(g)), uN(node_values(nf.u_N)), rhoN(node_values(nf.rho_N)),
          PN(node_values(nf.P_N)), Phi(node_values(nf.Phi_N)), Om(node_values(nf.Omega)), PhiJ(jet(nf.Phi_N)) {}
};

// Everything the source terms need at one node.
struct Local {
    double w = 0.0;       // varpi
    Jet Fs, Y, X;         // Fs = Phi_N - W/c^2
    double V = 0.0;
    double uN = 0, rhoN = 0, PN = 0, Phi = 0, Om = 0;
    double wc = 0, Z = 0; // enthalpy correction and series argument
    double u = 0, rho = 0, P = 0;
};

struct Constants {
    double c, c2, c4, G;
    explicit Constants(const StarParams& p)
        : c(p.eos.c_light), c2(c * c), c4(c2 * c2), G(p.G_grav) {}
};

class LocalState {
public:
    LocalState(const StarParams& p, const Background& bg, const AxiField& W, const AxiField& Y, const AxiField& X,
               const AxiField& V)
        : p_(p), bg_(bg), K_(p), jW_(jet(W)), jY_(jet(Y)), jX_(jet(X)), V_(node_values(V)) {}

    void set_W(const AxiField& W) { jW_ = jet(W); }
    void set_Y(const AxiField& Y) { jY_ = jet(Y); }
    void set_X(const AxiField& X) { jX_ = jet(X); }

    Local at(const NodeRef& n) const {
        Local L;
        L.w = n.p.w;
        const Jet W = pick(jW_, n);
        L.Fs = pick(bg_.PhiJ, n) - W / K_.c2;
        L.Y = pick(jY_, n);
        L.X = pick(jX_, n);
        L.V = get(V_, n);
        L.uN = get(bg_.uN, n);
        L.rhoN = get(bg_.rhoN, n);
        L.PN = get(bg_.PN, n);
        L.Phi = get(bg_.Phi, n);
        L.Om = get(bg_.Om, n);
        L.wc = enthalpy_correction(W.v, L.Y.v, L.X.v, L.Phi, L.Om, L.w, K_.c, &L.Z);
        L.u = L.uN + L.wc / K_.c2;
        L.rho = density_from_enthalpy(p_.eos, L.u);
        L.P = pressure_from_enthalpy(p_.eos, L.u);
        return L;
    }

private:
    const StarParams& p_;
    const Background& bg_;
    Constants K_;
    FieldJet jW_, jY_, jX_;
    NodeValues V_;
};

struct Metric {
    double p, F, K, t, e2F, D, Nn, e2KF;
};
Metric metric_at(const Local& L, const Constants& k) {
    Metric m;
    m.p = 1.0 + L.X.v / k.c4;
    m.F = L.Fs.v / k.c2;
    m.K = L.V / k.c4;
    m.t = 1.0 + L.Om * L.w * L.w * L.Y.v / k.c4;
    m.e2F = std::exp(2 * m.F);
    const double Pi = L.w * m.p;
    const double rot = L.Om * L.Om * Pi * Pi / (k.c2 * m.e2F);
    m.D = m.e2F * m.t * m.t - rot;
    m.Nn = m.e2F * m.t * m.t + rot;
    m.e2KF = std::exp(2 * (m.K - m.F));
    return m;
}

double source_W(const Local& L, const Constants& k) {
    const Metric m = metric_at(L, k);
    const double a1 = 2 * L.Y.v + L.w * L.Y.d1, a3 = L.w * L.Y.d3;
    return 4 * kPi * k.G * k.c2 * L.rhoN -
           4 * kPi * k.G * m.e2KF * ((k.c2 * L.rho + L.P) * m.Nn / m.D + 2 * L.P) +
           (L.X.d1 * L.Fs.d1 + L.X.d3 * L.Fs.d3) / (k.c2 * m.p) +
           m.e2F * m.e2F * (a1 * a1 + a3 * a3) / (2 * k.c2 * m.p * m.p);
}

double source_Y(const Local& L, const Constants& k) {
    const Metric m = metric_at(L, k);
    const double t1 = L.X.d1 / (k.c4 * m.p) - 4 * L.Fs.d1 / k.c2;
    const double t3 = L.X.d3 / (k.c4 * m.p) - 4 * L.Fs.d3 / k.c2;
    // t1 is odd in varpi; on the axis t1/varpi becomes its varpi-derivative
    const double t1w = L.w > 0.0 ? t1 / L.w : L.X.d11 / (k.c4 * m.p) - 4 * L.Fs.d11 / k.c2;
    const double matter = L.rho > 0.0 ? 16 * kPi * k.G * m.e2KF * (L.rho + L.P / k.c2) * L.Om * m.p * m.p * m.t /
                                            (m.e2F * m.D)
                                      : 0.0;
    return -matter + 2 * t1w * L.Y.v + t1 * L.Y.d1 + t3 * L.Y.d3;
}

double source_X(const Local& L, const Constants& k) {
    if (L.P == 0.0) return 0.0;
    const Metric m = metric_at(L, k);
    return 16 * kPi * k.G * m.e2KF * L.P * m.p;
}

double lop_coefficient(const StarParams& p, double uN) {
    return 4 * kPi * p.G_grav * p.nu * rho_over_u(p.eos, uN);
}

// c^4 times the right-hand sides of the first-order K system.
struct Gradient {
    double V1, V3, RHd, RHe, Pi1, Pi3;
};
Gradient v_gradient(const Local& L, const Constants& k) {
    const double w = L.w;
    const double p = 1.0 + L.X.v / k.c4;
    const double e4F = std::exp(4 * L.Fs.v / k.c2);
    const double a1 = 2 * L.Y.v + w * L.Y.d1, a3 = w * L.Y.d3;
    Gradient G;
    G.RHd = 0.5 * (2 * L.X.d1 + w * (L.X.d11 - L.X.d33)) + w * p * (L.Fs.d1 * L.Fs.d1 - L.Fs.d3 * L.Fs.d3) -
            e4F * w * (a1 * a1 - a3 * a3) / (4 * k.c2 * p);
    G.RHe = L.X.d3 + w * L.X.d13 + 2 * w * p * L.Fs.d1 * L.Fs.d3 - e4F * w * a1 * a3 / (2 * k.c2 * p);
    G.Pi1 = p + w * L.X.d1 / k.c4;
    G.Pi3 = w * L.X.d3 / k.c4;
    const double D = G.Pi1 * G.Pi1 + G.Pi3 * G.Pi3;
    G.V1 = (G.Pi1 * G.RHd + G.Pi3 * G.RHe) / D;
    G.V3 = (-G.Pi3 * G.RHd + G.Pi1 * G.RHe) / D;
    return G;
}

void check_support(const StarParams& p, const Local& L, const NodeRef& n) {
    if (L.rho <= 0.0) return;
    const double r = std::hypot(n.p.w, n.p.z);
    if (r >= 3 * p.r1)
        fail(Status::regime, "fluid support reaches r = " + std::to_string(r / p.r1) + " r1 (limit 3 r1)",
             "pn_solver");
    if (n.outer) fail(Status::regime, "fluid support reaches the outer patch", "pn_solver");
}

double scaled_change(const AxiField& a, const AxiField& b, double scale) {
    return scale > 0.0 ? sup_owned(combine(a, b, 1.0, -1.0)) / scale : 0.0;
}

// log(1 + x) - x without cancellation for small x
double log1p_minus(double x) {
    if (std::abs(x) > 0.5) return std::log1p(x) - x;
    double term = x, sum = 0.0;
    for (int k = 2; k < 200; ++k) {
        term *= -x;
        const double add = term / k;
        sum += add;
        if (std::abs(add) <= 1e-17 * std::abs(sum)) break;
    }
    return sum;
}

}  // namespace

double enthalpy_correction(double W, double Y, double X, double Phi_N, double Omega, double varpi, double c,
                           double* Z_out) {
    const double c2 = c * c, c4 = c2 * c2;
    if (Omega == 0.0 || varpi == 0.0) {
        if (Z_out) *Z_out = 0.0;
        return W;
    }
    const double q = X / c4;
    const double t = -4.0 * (Phi_N - W / c2) / c2;
    const double one_minus_E = -(std::expm1(t) * (1 + q) * (1 + q) + q * (2 + q));
    const double E = 1.0 - one_minus_E;
    const double w2 = varpi * varpi;
    const double Z = 2 * Omega * w2 * Y / c2 + Omega * Omega * w2 * w2 * Y * Y / (c4 * c2) - Omega * Omega * w2 * E;
    if (Z_out) *Z_out = Z;
    if (!(std::abs(Z) / c2 < 1.0))
        fail(Status::regime, "|Z|/c^2 >= 1: logarithmic series diverges at varpi=" + std::to_string(varpi),
             "pn_solver");
    // -(c^4/2) sum_{k>=2} (-1)^{k+1} (Z/c^2)^k / k = -(c^4/2)(log(1+x) - x)
    return W - 0.5 * Omega * Omega * w2 * c2 * one_minus_E - Omega * w2 * Y - Omega * Omega * w2 * w2 * Y * Y / (2 * c4) -
           0.5 * c4 * log1p_minus(Z / c2);
}

Sources sources(const StarParams& p, const NewtonianFields& nf) {
    const AxiGrid& g = nf.u_N.grid;
    const double G = p.G_grav;
    NodeValues a = zero_nodes(g), b = zero_nodes(g), cc = zero_nodes(g);
    const Background bg(nf);
    for (const auto& n : bg.nodes) {
        const double rhoN = get(bg.rhoN, n);
        if (rhoN <= 0.0) continue;
        const double uN = get(bg.uN, n), PN = get(bg.PN, n), Phi = get(bg.Phi, n), Om = get(bg.Om, n);
        const double w2 = n.p.w * n.p.w;
        const double coef = lop_coefficient(p, uN);
        slot(a, n) = -coef * Om * Om * w2 * (2 * Phi - Om * Om * w2 / 4) +
                     4 * kPi * G * p.eos.upsilon1() * rhoN * uN - 8 * kPi * G * rhoN * (Phi + 2 * Om * Om * w2) +
                     12 * kPi * G * PN;
        slot(b, n) = 16 * kPi * G * Om * rhoN;
        slot(cc, n) = -16 * kPi * G * PN;
    }
    return {field_from_nodes(g, 7, a), field_from_nodes(g, 8, b), field_from_nodes(g, 6, cc)};
}

EnthalpyCorrection w_from_WYX(const StarParams& p, const AxiField& W, const AxiField& Y, const AxiField& X,
                              const NewtonianFields& nf) {
    const Background bg(nf);
    const double c = p.eos.c_light;
    NodeValues w = zero_nodes(bg.g), Z = zero_nodes(bg.g);
    for (const auto& n : bg.nodes) {
        double z = 0.0;
        slot(w, n) = enthalpy_correction(node_value(W, n), node_value(Y, n), node_value(X, n), get(bg.Phi, n),
                                         get(bg.Om, n), n.p.w, c, &z);
        slot(Z, n) = z;
    }
    return {field_from_nodes(bg.g, 3, w, 1, 1, W.offset), field_from_nodes(bg.g, 3, Z)};
}

FluidState fluid_state(const StarParams& p, const PotentialSet& U, const NewtonianFields& nf) {
    const Background bg(nf);
    const double c2 = p.eos.c_light * p.eos.c_light;
    FluidState f{zero_nodes(bg.g), zero_nodes(bg.g), zero_nodes(bg.g), bg.Om};
    for (const auto& n : bg.nodes) {
        const double u = get(bg.uN, n) + node_value(U.w, n) / c2;
        slot(f.u, n) = u;
        slot(f.rho, n) = density_from_enthalpy(p.eos, u);
        slot(f.P, n) = pressure_from_enthalpy(p.eos, u);
    }
    return f;
}

RemaindersABC remainders_abc(const StarParams& p, const PotentialSet& s, const NewtonianFields& nf) {
    const Background bg(nf);
    const Constants k(p);
    const LocalState state(p, bg, s.W, s.Y, s.X, s.V);
    const double G = k.G, c2 = k.c2;
    const double Df_nu = p.nu;
    RemaindersABC R{zero_nodes(bg.g), zero_nodes(bg.g), zero_nodes(bg.g), std::vector<NodeValues>(7, zero_nodes(bg.g))};
    for (const auto& n : bg.nodes) {
        const Local L = state.at(n);
        const Metric m = metric_at(L, k);
        const double w2 = L.w * L.w;
        const double coef = lop_coefficient(p, L.uN);
        const double W = node_value(s.W, n);
        const double g_exact = -source_W(L, k) - coef * W;
        const double g_a = -coef * L.Om * L.Om * w2 * (2 * L.Phi - L.Om * L.Om * w2 / 4) +
                           4 * kPi * G * p.eos.upsilon1() * L.rhoN * L.uN -
                           8 * kPi * G * L.rhoN * (L.Phi + 2 * L.Om * L.Om * w2) + 12 * kPi * G * L.PN;
        slot(R.R_a, n) = g_exact + coef * L.Om * w2 * L.Y.v - g_a;
        slot(R.R_b, n) = -source_Y(L, k) - 16 * kPi * G * L.Om * L.rhoN;
        slot(R.R_c, n) = -16 * kPi * G * (m.e2KF * L.P * m.p - L.PN);

        // auxiliary quantities
        const double Q0 = c2 * (L.wc - (W - 2 * L.Om * L.Om * w2 * L.Phi - L.Om * w2 * L.Y.v +
                                        L.Om * L.Om * L.Om * L.Om * w2 * w2 / 4));
        const double e4F = m.e2F * m.e2F;
        const double Q1 = L.Om * L.Om * w2 * m.p * m.p / (e4F * m.t * m.t);
        const double Df = Df_nu * rho_over_u(p.eos, L.uN);
        const double Hr = h_rho(p.eos, L.uN, L.wc);
        const double Q2 = c2 * c2 * (L.rho - L.rhoN - (Df * L.wc + p.eos.upsilon1() * L.rhoN * L.uN) / c2 - Hr);
        const double ratio = (1 + Q1 / c2) / (1 - Q1 / c2);
        const double bQ2 = -c2 * L.rho * (m.e2KF - ratio);
        const double Q3 = c2 * (bQ2 - 2 * L.rhoN * (L.Phi + 2 * Q1));
        const double Q4 = c2 * (bQ2 - 2 * L.rhoN * (L.Phi + 2 * L.Om * L.Om * w2));
        const double lhs5 = -m.e2KF * (c2 * L.rho * ratio + L.P * (3 - 2 * Q1 / c2) / (1 - Q1 / c2)) + c2 * L.rhoN;
        const double lead5 = -(Df * L.wc + p.eos.upsilon1() * L.rhoN * L.uN) +
                             2 * L.rhoN * (L.Phi + 2 * L.Om * L.Om * w2) - 3 * L.PN - c2 * Hr;
        const double Q5 = c2 * (lhs5 - lead5);
        const double lhs6 = m.e2KF / e4F * (c2 * L.rho + L.P) / (1 - Q1 / c2) * m.p * m.p / m.t / c2;
        const double Q6 = c2 * (lhs6 - L.rhoN);
        const double Q[7] = {Q0, Q1, Q2, Q3, Q4, Q5, Q6};
        for (int i = 0; i < 7; ++i) slot(R.Q[i], n) = Q[i];
    }
    return R;
}

RemaindersDE remainders_de(const StarParams& p, const PotentialSet& s, const NewtonianFields& nf) {
    const Background bg(nf);
    const Constants k(p);
    const LocalState state(p, bg, s.W, s.Y, s.X, s.V);
    RemaindersDE R{zero_nodes(bg.g), zero_nodes(bg.g), zero_nodes(bg.g), zero_nodes(bg.g), zero_nodes(bg.g)};
    const FieldJet phi = bg.PhiJ;
    for (const auto& n : bg.nodes) {
        const Local L = state.at(n);
        const Gradient Gd = v_gradient(L, k);
        const Jet P = pick(phi, n);
        const double w = L.w;
        const double lead_d = 0.5 * (2 * L.X.d1 + w * L.X.d11 - w * L.X.d33) + w * (P.d1 * P.d1 - P.d3 * P.d3);
        const double lead_e = L.X.d3 + w * L.X.d13 + 2 * w * P.d1 * P.d3;
        const double bd = Gd.Pi1 * Gd.RHd + Gd.Pi3 * Gd.RHe;
        const double be = -Gd.Pi3 * Gd.RHd + Gd.Pi1 * Gd.RHe;
        const double xhat = 1.0 / (Gd.Pi1 * Gd.Pi1 + Gd.Pi3 * Gd.Pi3) - 1.0;  // X_hat / c^4
        slot(R.X_hat, n) = xhat * k.c4;
        slot(R.Q7, n) = k.c2 * (bd - lead_d);
        slot(R.Q8, n) = k.c2 * (be - lead_e);
        slot(R.R_d, n) = Gd.V1 - lead_d;
        slot(R.R_e, n) = Gd.V3 - lead_e;
    }
    return R;
}

PotentialSet inner_fixed_point(const StarParams& p, const AxiField& V, const NewtonianFields& nf,
                               const SolverOptions& opt, const PotentialSet* warm, IterationReport* report) {
    const Background bg(nf);
    const AxiGrid& g = bg.g;
    const Constants k(p);
    PotentialSet U;
    if (warm) {
        U = *warm;
    } else {
        U.W = AxiField(g, 3);
        U.Y = AxiField(g, 5);
        U.X = AxiField(g, 4);
    }
    U.V = V;
    const bool rotating = p.Omega_O != 0.0;
    if (!rotating) U.Y = AxiField(g, 5);

    AxiField coef(g, 7);
    for (const auto& n : bg.nodes)
        if (!n.outer) coef.in[n.k] = lop_coefficient(p, get(bg.uN, n));

    const double sW = p.u_O * p.u_O, sY = std::abs(p.Omega_O) * p.u_O, sX = p.u_O * p.u_O;
    LocalState state(p, bg, U.W, U.Y, U.X, V);
    IterationReport rep;
    int bad = 0;
    double prev = std::numeric_limits<double>::infinity();
    NodeValues src = zero_nodes(g);
    auto build = [&](auto&& fn) {
        for (const auto& n : bg.nodes) slot(src, n) = fn(state.at(n), n);
    };
    for (int it = 1; it <= opt.inner_max; ++it) {
        AxiField Yn = U.Y;
        if (rotating) {
            build([&](const Local& L, const NodeRef& n) {
                check_support(p, L, n);
                return -source_Y(L, k);
            });
            Yn = k_n_global(field_from_nodes(g, 8, src), 5);
            state.set_Y(Yn);
        }
        build([&](const Local& L, const NodeRef& n) {
            check_support(p, L, n);
            return -source_W(L, k) - (n.outer ? 0.0 : coef.in[n.k]) * node_value(U.W, n);
        });
        AxiField Wn = l_op(field_from_nodes(g, 7, src), coef);
        state.set_W(Wn);
        build([&](const Local& L, const NodeRef&) { return -source_X(L, k); });
        AxiField Xn = k_n_global(field_from_nodes(g, 6, src), 4);
        state.set_X(Xn);

        double change = std::max(scaled_change(Wn, U.W, sW), scaled_change(Xn, U.X, sX));
        if (rotating) change = std::max(change, scaled_change(Yn, U.Y, sY));
        U.W = std::move(Wn);
        U.Y = std::move(Yn);
        U.X = std::move(Xn);
        rep.iterations = it;
        rep.history.push_back(change);
        rep.ratio = std::isfinite(prev) && prev > 0.0 ? change / prev : 0.0;
        rep.last_change = change;
        if (change < opt.inner_tol) break;
        if (it > 2 && rep.ratio >= 1.0) {
            if (++bad >= opt.divergence_window)
                fail(Status::convergence,
                     "inner iteration diverges: change " + std::to_string(change) + " after " + std::to_string(it) +
                         " sweeps",
                     "pn_solver/inner");
        } else {
            bad = 0;
        }
        if (it == opt.inner_max)
            fail(Status::convergence,
                 "inner iteration did not converge: change " + std::to_string(change) + " > tol", "pn_solver/inner");
        prev = change;
    }
    // enthalpy correction consistent with the final fields
    NodeValues wv = zero_nodes(g);
    for (const auto& n : bg.nodes) slot(wv, n) = state.at(n).wc;
    U.w = field_from_nodes(g, 3, wv, 1, 1, U.W.offset);
    if (report) *report = rep;
    return U;
}

std::vector<double> integrate_gradient(const AxiGrid& g, const std::vector<double>& Vw,
                                       const std::vector<double>& Vz, PathOrder order) {
    const int N = g.n_in;
    const double h = g.h_in();
    if (N < 5) fail(Status::domain, "grid too small for the cubic path rule", "pn_solver");
    // cumulative fourth-order rule for data odd about the start
    auto cumulate = [&](auto&& f, std::vector<double>& out) {
        out.assign(N, 0.0);
        for (int i = 0; i + 1 < N; ++i) {
            double inc;
            if (i + 2 < N) {
                const double fm = i == 0 ? -f(1) : f(i - 1);
                inc = h * (-fm + 13 * f(i) + 13 * f(i + 1) - f(i + 2)) / 24.0;
            } else {
                inc = h * (f(i - 2) - 5 * f(i - 1) + 19 * f(i) + 9 * f(i + 1)) / 24.0;
            }
            out[i + 1] = out[i] + inc;
        }
    };
    std::vector<double> out(g.size_in()), base, line;
    if (order == PathOrder::z_then_w) {
        cumulate([&](int j) { return Vz[g.id_in(0, j)]; }, base);
        for (int j = 0; j < N; ++j) {
            cumulate([&](int i) { return Vw[g.id_in(i, j)]; }, line);
            for (int i = 0; i < N; ++i) out[g.id_in(i, j)] = base[j] + line[i];
        }
    } else {
        cumulate([&](int i) { return Vw[g.id_in(i, 0)]; }, base);
        for (int i = 0; i < N; ++i) {
            cumulate([&](int j) { return Vz[g.id_in(i, j)]; }, line);
            for (int j = 0; j < N; ++j) out[g.id_in(i, j)] = base[i] + line[j];
        }
    }
    return out;
}

VMapResult v_map(const StarParams& p, const PotentialSet& U, const NewtonianFields& nf, const SolverOptions& opt) {
    const Background bg(nf);
    const AxiGrid& g = bg.g;
    const Constants k(p);
    const LocalState state(p, bg, U.W, U.Y, U.X, U.V);
    NodeValues v1 = zero_nodes(g), v3 = zero_nodes(g);
    for (const auto& n : bg.nodes) {
        const Gradient Gd = v_gradient(state.at(n), k);
        slot(v1, n) = Gd.V1;
        slot(v3, n) = Gd.V3;
    }
    VMapResult R;
    R.V1 = field_from_nodes(g, 5, v1, -1, 1);
    R.V3 = field_from_nodes(g, 5, v3, 1, -1);
    const std::vector<double> vhat = integrate_gradient(g, v1.in, v3.in, PathOrder::z_then_w);
    const double R0 = g.R0;
    auto inner_value = [&](Point q) {
        return interp_patch(vhat, g.n_in, g.h_in(), q.w, q.z, 1, 1, Interp::bicubic);
    };
    const GaussRule& gr = gauss_rule(opt.ray_points);
    // integral of dV/dr along the ray through direction (cw, cz), from r = R0/s to r = R0/s1
    auto ray = [&](double cw, double cz, double s, double s1) {
        double acc = 0.0;
        for (std::size_t i = 0; i < gr.x.size(); ++i) {
            const double sp = s + (s1 - s) * gr.x[i];
            const double r = R0 / sp;
            const Point q{r * cw, r * cz};
            const double vr = cw * eval(R.V1, q) + cz * eval(R.V3, q);
            acc += gr.w[i] * vr * R0 / (sp * sp);
        }
        return (s1 - s) * acc;
    };
    auto limit_on_ray = [&](double cw, double cz) { return inner_value({R0 * cw, R0 * cz}) + ray(cw, cz, 0.0, 1.0); };

    // constant at infinity: average of the per-ray limits over the solid angle
    const GaussRule& zr = gauss_rule(opt.rays);
    double lo = std::numeric_limits<double>::infinity(), hi = -lo, avg = 0.0;
    for (std::size_t i = 0; i < zr.x.size(); ++i) {
        const double zeta = zr.x[i];
        const double lim = limit_on_ray(std::sqrt(1 - zeta * zeta), zeta);
        avg += zr.w[i] * lim;
        lo = std::min(lo, lim);
        hi = std::max(hi, lim);
    }
    R.C_inf = avg;
    R.ray_spread = hi - lo;

    NodeValues V = zero_nodes(g);
    for (std::size_t i = 0; i < vhat.size(); ++i) V.in[i] = vhat[i] - R.C_inf;
    const double s_b = 0.5;  // rays take over beyond r = 2 R0
    AxiField out(g, 4, 0.0);
    out.in = V.in;
    for (const auto& n : bg.nodes) {
        if (!n.outer) continue;
        const double r = std::hypot(n.p.w, n.p.z);
        const double s = R0 / r;
        if (s > s_b) {
            out.ex[n.k] = (r / R0) * (r / R0) * (inner_value(n.p) - R.C_inf);
            continue;
        }
        const double cw = n.p.w / r, cz = n.p.z / r;
        const double tail = ray(cw, cz, 0.0, s);  // V_ray(inf) - V_ray(r)
        const double lim = limit_on_ray(cw, cz);
        const double t = s / s_b;
        const double blend = t * t * (3 - 2 * t);  // 1 - beta, O(s^2) at infinity
        // V = V_ray(r) - C_inf - (V_ray(inf) - C_inf) beta(s)
        out.ex[n.k] = (-tail + (lim - R.C_inf) * blend) / (s * s);
    }
    fill_origin_image(out);
    R.V = std::move(out);
    return R;
}

Solution solve(const StarParams& p, const SolverOptions& opt) {
    Solution S;
    S.params = p;
    S.diag.regime = check_regime(p);
    S.dle = solve_distorted(p.nu, p.b, opt.grid);
    S.nf = newtonian_fields(S.dle, p);
    S.diag.M_N = S.nf.M_N;
    const AxiGrid& g = S.nf.u_N.grid;

    AxiField V(g, 4);
    const double scale = p.u_O * p.u_O;
    PotentialSet U;
    const PotentialSet* warm = nullptr;
    double prev = std::numeric_limits<double>::infinity();
    int bad = 0;
    for (int k = 1; k <= opt.outer_max; ++k) {
        try {
            IterationReport ir;
            U = inner_fixed_point(p, V, S.nf, opt, warm, &ir);
            warm = &U;
            S.diag.inner.push_back(ir);
            VMapResult vm = v_map(p, U, S.nf, opt);
            const double change = scaled_change(vm.V, V, scale);
            V = vm.V;
            U.V = V;
            S.diag.C_inf = vm.C_inf;
            S.diag.ray_spread = vm.ray_spread;
            S.diag.outer.iterations = k;
            S.diag.outer.history.push_back(change);
            S.diag.outer.last_change = change;
            if (std::isfinite(prev) && prev > 0.0) {
                S.diag.outer.ratio = change / prev;
                S.diag.contraction.push_back(S.diag.outer.ratio);
            }
            if (change < opt.outer_tol) break;
            if (k > 1 && S.diag.outer.ratio >= 1.0) {
                if (++bad >= opt.divergence_window)
                    fail(Status::convergence, "outer V iteration does not contract", "pn_solver/outer");
            } else {
                bad = 0;
            }
            if (k == opt.outer_max)
                fail(Status::convergence, "outer V iteration did not converge", "pn_solver/outer");
            prev = change;
        } catch (const Error& e) {
            throw Error(e.status(), std::string(e.what()) + " (outer iteration " + std::to_string(k) + ")", e.stage());
        }
    }
    // final inner pass against the converged V so every field is mutually consistent
    {
        IterationReport ir;
        U = inner_fixed_point(p, V, S.nf, opt, &U, &ir);
        S.diag.inner.push_back(ir);
    }
    S.U = U;
    S.metric = assemble(p, U, S.nf.Phi_N);
    S.fluid = fluid_state(p, U, S.nf);

    const Background bg(S.nf);
    for (const auto& n : bg.nodes) {
        if (get(S.fluid.rho, n) > 0.0)
            S.diag.support_radius = std::max(S.diag.support_radius, std::hypot(n.p.w, n.p.z));
    }
    const EnthalpyCorrection ec = w_from_WYX(p, U.W, U.Y, U.X, S.nf);
    for (const auto& n : bg.nodes)
        S.diag.max_Z = std::max(S.diag.max_Z, std::abs(node_value(ec.Z, n)) / (p.eos.c_light * p.eos.c_light));
    S.diag.sup_W = sup_owned(U.W);
    S.diag.sup_Y = sup_owned(U.Y);
    S.diag.sup_X = sup_owned(U.X);
    S.diag.sup_V = sup_owned(U.V);

    S.diag.asymptotics = asymptotic_fit(far_field(S.metric), opt.fit_lo * g.R0, opt.fit_hi * g.R0);
    S.diag.M = S.diag.asymptotics.M;
    S.diag.J = S.diag.asymptotics.J;
    if (opt.verify) {
        S.diag.residuals = residual_reduced_system(S.metric, S.fluid);
        S.diag.consistency = consistency_K(S.metric, S.fluid);
        S.diag.verified = true;
    }
    return S;
}

}  // namespace rotstar
