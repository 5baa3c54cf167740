#include <cmath>
#include <random>

#include "doctest.h"
#include "rotstar/errors.hpp"
#include "rotstar/pn_solver.hpp"

using namespace rotstar;

namespace {

// Newtonian background with no matter anywhere; optional flat potential.
NewtonianFields empty_background(const AxiGrid& g, double Omega = 0.0) {
    NewtonianFields nf;
    nf.u_N = AxiField(g, 3, -1.0);
    for (double& v : nf.u_N.in) v = -1.0;
    nf.rho_N = AxiField(g, 7);
    nf.P_N = AxiField(g, 7);
    nf.Phi_N = AxiField(g, 3);
    nf.Omega = AxiField(g, 7);
    for (double& v : nf.Omega.in) v = Omega;
    return nf;
}

StarParams test_params(double u_O, double b) {
    EquationOfState eos;
    eos.gamma = 5.0 / 3.0;
    eos.c_light = 1.0;
    return make_params_b(eos, 1.0, u_O, b);
}

SolverOptions small_grid() {
    SolverOptions o;
    o.grid.n_in = 33;
    o.grid.n_ex = 25;
    return o;
}

PotentialSet zero_set(const AxiGrid& g) {
    return {AxiField(g, 3), AxiField(g, 5), AxiField(g, 4), AxiField(g, 4), AxiField(g, 3)};
}

const Solution& small_solution() {
    static const Solution S = solve(test_params(1e-3, 1e-3), small_grid());
    return S;
}

}  // namespace

TEST_CASE("enthalpy correction equals W without rotation") {
    for (double W : {0.0, 1e-6, -3e-5})
        CHECK(enthalpy_correction(W, 1e-4, 2e-6, -0.01, 0.0, 0.7, 1.0) == W);
}

TEST_CASE("enthalpy correction matches the direct logarithm in flat space") {
    for (double c : {1.0, 10.0})
        for (double Ow : {1e-3, 0.05, 0.3}) {
            const double Om = Ow / 0.8, w = 0.8;
            double Z = 0.0;
            const double got = enthalpy_correction(0.0, 0.0, 0.0, 0.0, Om, w, c, &Z);
            const double x = Ow * Ow / (c * c);
            const double oracle = std::pow(c, 4) * (-0.5 * x - 0.5 * std::log1p(-x));
            CHECK(Z == doctest::Approx(-Ow * Ow).epsilon(1e-15));
            CHECK(got == doctest::Approx(oracle).epsilon(1e-12));
        }
}

TEST_CASE("enthalpy correction agrees with the four-velocity path on random states") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    const double c = 1.0;
    for (int trial = 0; trial < 200; ++trial) {
        const double Phi = -0.01 * (1.5 + U(rng)), W = 1e-4 * U(rng), Y = 1e-4 * U(rng), X = 1e-4 * U(rng);
        const double w = 0.5 + 0.4 * U(rng), Om = 0.02 * U(rng);
        const double got = enthalpy_correction(W, Y, X, Phi, Om, w, c);
        const double F = (Phi - W / (c * c)) / (c * c);
        // G = F + log(b e^{-2F})/2, with b the normalization quantity written out directly
        const double A = w * w * Y / (c * c * c), Pi = w * (1 + X / std::pow(c, 4));
        const double s = Om * A / c;  // (1 + s)^2 - 1 kept exact
        const double G = F + 0.5 * std::log1p(s * (2 + s) - std::exp(-4 * F) * Om * Om * Pi * Pi / (c * c));
        const double alt = c * c * Phi - c * c * Om * Om * w * w / 2 - std::pow(c, 4) * G;
        // alt cancels terms of size c^2 Phi, so compare on that scale
        CHECK(got == doctest::Approx(alt).epsilon(1e-13).scale(std::abs(Phi)));
    }
}

TEST_CASE("enthalpy correction reports a divergent series") {
    CHECK_THROWS_AS(enthalpy_correction(0.0, 0.0, 0.0, 0.0, 2.0, 1.0, 1.0), Error);
}

TEST_CASE("leading sources specialize without rotation") {
    const StarParams p = test_params(1e-3, 0.0);
    const Solution& S = small_solution();
    // reuse the grid shape, rebuild the Newtonian star without rotation
    const DistortedLaneEmden dle = solve_distorted(p.nu, 0.0, small_grid().grid);
    const NewtonianFields nf = newtonian_fields(dle, p);
    const Sources src = sources(p, nf);
    const double G = p.G_grav;
    const auto nodes = grid_nodes(nf.u_N.grid);
    int inside = 0;
    for (const auto& n : nodes) {
        const double rho = node_value(nf.rho_N, n);
        CHECK(node_value(src.g_b, n) == 0.0);
        if (rho <= 0.0) {
            CHECK(node_value(src.g_a, n) == 0.0);
            CHECK(node_value(src.g_c, n) == 0.0);
            continue;
        }
        ++inside;
        const double expect = -8 * M_PI * G * rho * node_value(nf.Phi_N, n) + 12 * M_PI * G * node_value(nf.P_N, n);
        CHECK(node_value(src.g_a, n) == doctest::Approx(expect).epsilon(1e-13));
    }
    CHECK(inside > 10);
    CHECK(S.diag.M > 0.0);
}

TEST_CASE("remainders of the K system vanish with no corrections") {
    const StarParams p = test_params(1e-3, 1e-3);
    const Solution& S = small_solution();
    const AxiGrid& g = S.nf.u_N.grid;
    const RemaindersDE R = remainders_de(p, zero_set(g), S.nf);
    for (const auto& n : grid_nodes(g)) {
        CHECK(node_value(S.nf.Phi_N, n) != 0.0);
        const auto& v = [&](const NodeValues& a) { return n.outer ? a.ex[n.k] : a.in[n.k]; };
        CHECK(v(R.X_hat) == 0.0);
        CHECK(v(R.Q7) == 0.0);
        CHECK(v(R.Q8) == 0.0);
        CHECK(v(R.R_d) == 0.0);
        CHECK(v(R.R_e) == 0.0);
    }
}

TEST_CASE("X_hat for a constant X") {
    const StarParams p = test_params(1e-3, 1e-3);
    const AxiGrid g{17, 13, 1.0};
    PotentialSet s = zero_set(g);
    s.X = AxiField(g, 4, 0.1);  // X/c^4 = 0.1 with c = 1
    for (double& v : s.X.in) v = 0.1;
    const RemaindersDE R = remainders_de(p, s, empty_background(g));
    for (double v : R.X_hat.in) CHECK(v == doctest::Approx(1.0 / (1.1 * 1.1) - 1.0).epsilon(1e-14));
}

TEST_CASE("matter remainders vanish outside the fluid") {
    const StarParams p = test_params(1e-3, 1e-3);
    const Solution& S = small_solution();
    const RemaindersABC R = remainders_abc(p, S.U, S.nf);
    const auto& g = S.nf.u_N.grid;
    int vacuum = 0;
    for (const auto& n : grid_nodes(g)) {
        const double u = node_value(S.nf.u_N, n) + node_value(S.U.w, n);
        if (node_value(S.nf.u_N, n) > 0.0 || u > 0.0) continue;
        ++vacuum;
        const auto v = [&](const NodeValues& a) { return n.outer ? a.ex[n.k] : a.in[n.k]; };
        CHECK(v(R.Q[5]) == 0.0);
        CHECK(v(R.Q[6]) == 0.0);
        CHECK(v(R.R_c) == 0.0);
    }
    CHECK(vacuum > 100);
}

TEST_CASE("remainders are smaller than the leading sources") {
    const StarParams p = test_params(1e-3, 1e-3);
    const Solution& S = small_solution();
    const RemaindersABC R = remainders_abc(p, S.U, S.nf);
    const Sources src = sources(p, S.nf);
    double ra = 0, ga = 0, rb = 0, gb = 0;
    for (std::size_t k = 0; k < R.R_a.in.size(); ++k) {
        ra = std::max(ra, std::abs(R.R_a.in[k]));
        ga = std::max(ga, std::abs(src.g_a.in[k]));
        rb = std::max(rb, std::abs(R.R_b.in[k]));
        gb = std::max(gb, std::abs(src.g_b.in[k]));
    }
    // remainders carry an extra factor u_O/c^2 = 1e-3
    CHECK(ra < 0.05 * ga);
    CHECK(rb < 0.05 * gb);
}

TEST_CASE("no matter gives the trivial fixed point") {
    const StarParams p = test_params(1e-3, 1e-3);
    const AxiGrid g{33, 25, p.R0};
    const NewtonianFields nf = empty_background(g, p.Omega_O);
    IterationReport rep;
    const PotentialSet U = inner_fixed_point(p, AxiField(g, 4), nf, small_grid(), nullptr, &rep);
    CHECK(sup_owned(U.W) == 0.0);
    CHECK(sup_owned(U.Y) == 0.0);
    CHECK(sup_owned(U.X) == 0.0);
    const VMapResult vm = v_map(p, U, nf, small_grid());
    CHECK(sup_owned(vm.V) == 0.0);
    CHECK(vm.C_inf == 0.0);
}

TEST_CASE("fluid escaping the admissible region is a regime error") {
    const StarParams p = test_params(1e-3, 0.0);
    const AxiGrid g{17, 13, p.R0};
    NewtonianFields nf = empty_background(g);
    for (double& v : nf.u_N.in) v = 1e-3;
    try {
        inner_fixed_point(p, AxiField(g, 4), nf, small_grid());
        FAIL("expected a regime error");
    } catch (const Error& e) {
        CHECK(e.status() == Status::regime);
    }
}

TEST_CASE("gradient integration is exact for cubic potentials on both paths") {
    const AxiGrid g{21, 17, 1.5};
    std::vector<double> Vw(g.size_in()), Vz(g.size_in()), V(g.size_in());
    for (int i = 0; i < g.n_in; ++i)
        for (int j = 0; j < g.n_in; ++j) {
            const double w = g.x_in(i), z = g.x_in(j);
            const auto k = g.id_in(i, j);
            V[k] = w * w * z * z + z * z * z * z - 0.5 * w * w;
            Vw[k] = 2 * w * z * z - w;
            Vz[k] = 2 * w * w * z + 4 * z * z * z;
        }
    for (PathOrder o : {PathOrder::z_then_w, PathOrder::w_then_z}) {
        const auto got = integrate_gradient(g, Vw, Vz, o);
        for (std::size_t k = 0; k < V.size(); ++k) CHECK(got[k] == doctest::Approx(V[k]).epsilon(1e-12).scale(1.0));
    }
}

TEST_CASE("small rotating star converges with the expected structure") {
    const StarParams p = test_params(1e-3, 1e-3);
    const Solution& S = small_solution();
    const auto& d = S.diag;
    CHECK(d.outer.iterations >= 2);
    for (double r : d.contraction) CHECK(r < 1.0);
    CHECK(d.support_radius < 3 * p.r1);
    CHECK(d.M > 0.0);
    CHECK(std::abs(d.M - d.M_N) < 10 * p.epsilon * d.M_N);
    CHECK(d.J > 0.0);
    CHECK(d.residuals.first_integral_spread < 1e-13);
    // normalizations at the centre
    CHECK(S.U.W.in[0] == 0.0);
    CHECK(S.U.w.in[0] == 0.0);
    // w = W where the rotation is cut off
    for (const auto& n : grid_nodes(S.U.W.grid))
        if (std::hypot(n.p.w, n.p.z) >= 2 * p.R0) CHECK(node_value(S.U.w, n) == doctest::Approx(node_value(S.U.W, n)).epsilon(1e-13));
    CHECK(d.max_Z < 1.0);
}

TEST_CASE("static star has no frame dragging") {
    const Solution S = solve(test_params(1e-3, 0.0), small_grid());
    CHECK(sup_owned(S.U.Y) == 0.0);
    CHECK(S.diag.J == 0.0);
    CHECK(S.diag.max_Z == 0.0);
}
