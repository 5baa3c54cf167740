#include <cmath>
#include <vector>

#include "doctest.h"
#include "rotstar/errors.hpp"
#include "rotstar/lane_emden.hpp"
#include "rotstar/params.hpp"
#include "rotstar/verify.hpp"

using namespace rotstar;

namespace {

// Masks a grid of n nodes per side down to the nodes it shares with the
// 33-node grid, outside radius r_min.
RegionMask coarse_nodes(int n, double r_min) {
    const int stride = (n - 1) / 32;
    return [=](const NodeRef& node) {
        if (std::hypot(node.p.w, node.p.z) < r_min) return false;
        const int i = static_cast<int>(node.k) / n, j = static_cast<int>(node.k) % n;
        return i % stride == 0 && j % stride == 0;
    };
}

struct KerrLevels {
    ResidualReport coarse, fine;
    RicciReport rc, rf;
    ConsistencyReport cc, cf;
};

const KerrLevels& kerr_levels() {
    static const KerrLevels L = [] {
        const KerrParams kp{1.0, 0.6};
        KerrLevels out;
        const AxiGrid g1{33, 33, 4.0}, g2{65, 65, 4.0};
        const MetricLanczos m1 = kerr_metric(kp, g1), m2 = kerr_metric(kp, g2);
        out.coarse = residual_reduced_system(m1, {}, coarse_nodes(33, 3.0));
        out.fine = residual_reduced_system(m2, {}, coarse_nodes(65, 3.0));
        out.rc = ricci_cross_check(m1, {}, coarse_nodes(33, 3.0));
        out.rf = ricci_cross_check(m2, {}, coarse_nodes(65, 3.0));
        out.cc = consistency_K(m1, {}, coarse_nodes(33, 3.0));
        out.cf = consistency_K(m2, {}, coarse_nodes(65, 3.0));
        return out;
    }();
    return L;
}

}  // namespace

TEST_CASE("observed order recovers a synthetic power law") {
    const std::vector<double> h{0.1, 0.05, 0.025};
    const std::vector<double> e{3 * 0.01, 3 * 0.0025, 3 * 0.000625};
    CHECK(observed_order(h, e) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK_THROWS_AS(observed_order({1.0}, {1.0}), Error);
}

TEST_CASE("flat space has vanishing residuals and exact asymptotics") {
    const AxiGrid g{17, 17, 1.0};
    MetricLanczos m;
    m.F = AxiField(g, 3);
    m.y = AxiField(g, 5);
    m.q = AxiField(g, 4);
    m.K = AxiField(g, 4);
    const ResidualReport R = residual_reduced_system(m, {});
    for (double s : R.sup) CHECK(s < 1e-14);
    CHECK(R.c_margin == doctest::Approx(1.0));
    const RicciReport Q = ricci_cross_check(m, {});
    for (double s : Q.sup) CHECK(s < 1e-14);
    const AsymptoticReport A = asymptotic_fit(far_field(m), 5.0, 40.0);
    CHECK(A.M == 0.0);
    CHECK(A.J == 0.0);
    for (bool e : A.exact) CHECK(e);
    CHECK(A.flat);
}

TEST_CASE("Kerr reduced-system residuals converge at second order") {
    const auto& L = kerr_levels();
    for (int e : {0, 1, 3, 4}) {
        const double order = std::log2(L.coarse.sup[e] / L.fine.sup[e]);
        CHECK(order == doctest::Approx(2.0).epsilon(0.1));
    }
    // Pi = varpi exactly, so its equation holds to rounding
    CHECK(L.fine.sup[2] < 1e-10);
    CHECK(L.fine.c_margin > 0.0);
}

TEST_CASE("Kerr Ricci residuals converge at second order") {
    const auto& L = kerr_levels();
    for (int e = 0; e < 6; ++e) {
        const double order = std::log2(L.rc.sup[e] / L.rf.sup[e]);
        CHECK(order == doctest::Approx(2.0).epsilon(0.1));
    }
    CHECK(L.rf.sigma_identity < 1e-12);
}

TEST_CASE("Kerr K system is integrable up to discretization error") {
    const auto& L = kerr_levels();
    const double order = std::log2(L.cc.sup_L / L.cf.sup_L);
    CHECK(order == doctest::Approx(2.0).epsilon(0.1));
    // vacuum: the closed form vanishes, so L itself is the identity residual
    CHECK(L.cf.sup_identity == doctest::Approx(L.cf.sup_L));
}

TEST_CASE("asymptotic fit recovers Kerr mass and angular momentum") {
    const KerrParams kp{1.0, 0.6};
    const AxiGrid g{65, 65, 4.0};
    const AsymptoticReport A = asymptotic_fit(far_field(kerr_metric(kp, g)), 20.0, 200.0);
    CHECK(A.M == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(A.J == doctest::Approx(0.6).epsilon(5e-3));
    CHECK(A.flat);
    CHECK(A.order[1] == doctest::Approx(4.0).epsilon(0.1));
}

TEST_CASE("asymptotic fit on closed-form Kerr is tight") {
    const KerrParams kp{1.0, 0.6};
    FarField ff;
    ff.F = [&](Point p) { return kerr_lanczos(kp, p).F; };
    ff.y = [&](Point p) { return kerr_lanczos(kp, p).y; };
    ff.q = [&](Point p) { return kerr_lanczos(kp, p).q; };
    ff.K = [&](Point p) { return kerr_lanczos(kp, p).K; };
    const AsymptoticReport A = asymptotic_fit(ff, 20.0, 200.0);
    CHECK(A.M == doctest::Approx(1.0).epsilon(1e-7));
    CHECK(A.J == doctest::Approx(0.6).epsilon(1e-6));
    CHECK(A.exact[2]);
    CHECK(A.flat);
}

TEST_CASE("TOV star reduces to the Lane-Emden star for small enthalpy") {
    EquationOfState eos;
    eos.gamma = 5.0 / 3.0;
    eos.c_light = 1e3;
    const double u_O = 1.0;
    const TovSolution t = tov_benchmark(eos, 1.0, u_O);
    const StarParams p = make_params(eos, 1.0, u_O, 0.0);
    const double M_newton = 4 * M_PI * p.rho_NO * p.a * p.a * p.a * p.mu1;
    // relativistic corrections are O(u_O/c^2) = 1e-6
    CHECK(t.R == doctest::Approx(p.r1).epsilon(1e-5));
    CHECK(t.M == doctest::Approx(M_newton).epsilon(1e-5));
    CHECK(t.enthalpy(0.0) == u_O);
    CHECK(t.enthalpy(t.R) == 0.0);
}

TEST_CASE("TOV solution is continuous and physically ordered") {
    EquationOfState eos;
    eos.c_light = 1.0;
    const TovSolution t = tov_benchmark(eos, 1.0, 0.05);
    CHECK(2 * t.M / t.R < 8.0 / 9.0);
    CHECK(t.F(t.R * (1 - 1e-12)) == doctest::Approx(t.F(t.R * (1 + 1e-12))).epsilon(1e-9));
    double prev_u = t.u.front(), prev_m = -1.0;
    for (std::size_t i = 0; i < t.r.size(); ++i) {
        CHECK(t.u[i] <= prev_u);
        CHECK(t.m[i] > prev_m);
        prev_u = t.u[i];
        prev_m = t.m[i];
    }
    // Hermite table interpolation reproduces the stored nodes
    CHECK(t.enthalpy(t.r[100]) == doctest::Approx(t.u[100]).epsilon(1e-14));
}

TEST_CASE("TOV rejects a non-positive central enthalpy") {
    EquationOfState eos;
    CHECK_THROWS_AS(tov_benchmark(eos, 1.0, 0.0), Error);
}
