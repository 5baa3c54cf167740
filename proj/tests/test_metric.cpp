#include <cmath>

#include "doctest.h"
#include "rotstar/errors.hpp"
#include "rotstar/metric.hpp"

using namespace rotstar;

namespace {

MetricLanczos flat_metric(const AxiGrid& g) {
    MetricLanczos m;
    m.F = AxiField(g, 3);
    m.y = AxiField(g, 5);
    m.q = AxiField(g, 4);
    m.K = AxiField(g, 4);
    return m;
}

NodeValues constant_nodes(const AxiGrid& g, double v_in, double v_ex) {
    NodeValues n;
    n.in.assign(g.size_in(), v_in);
    n.ex.assign(g.size_ex(), v_ex);
    return n;
}

double& at(NodeValues& v, const NodeRef& n) { return n.outer ? v.ex[n.k] : v.in[n.k]; }
double at(const NodeValues& v, const NodeRef& n) { return n.outer ? v.ex[n.k] : v.in[n.k]; }

}  // namespace

TEST_CASE("Kerr coordinate map round-trips") {
    const KerrParams kp{1.0, 0.7};
    for (double rb : {2.5, 4.0, 17.0, 300.0})
        for (double ct : {-0.9, -0.2, 0.0, 0.4, 0.95, 1.0}) {
            const Point p = kerr_forward(kp, rb, ct);
            double rb2 = 0, ct2 = 0;
            kerr_inverse(kp, p, rb2, ct2);
            CHECK(rb2 == doctest::Approx(rb).epsilon(1e-12));
            CHECK(ct2 == doctest::Approx(ct).epsilon(1e-12).scale(1.0));
        }
}

TEST_CASE("Kerr potentials vanish where required on the axis") {
    const KerrParams kp{1.0, 0.5};
    for (double z : {3.0, 10.0, 100.0}) {
        const KerrPoint k = kerr_lanczos(kp, {0.0, z});
        REQUIRE(k.in_domain);
        CHECK(k.A == 0.0);
        CHECK(k.Pi == 0.0);
        CHECK(std::isfinite(k.y));
        CHECK(std::isfinite(k.q));
    }
}

TEST_CASE("Kerr Pi equals varpi") {
    const KerrParams kp{1.0, 0.9};
    for (double w : {0.5, 3.0, 40.0})
        for (double z : {0.0, 2.0, 25.0}) {
            const KerrPoint k = kerr_lanczos(kp, {w, z});
            if (!k.in_domain) continue;
            CHECK(std::abs(k.q) < 1e-13);
        }
}

TEST_CASE("Schwarzschild far field approaches the Newtonian potential") {
    const KerrParams kp{1.0, 0.0};
    for (double r : {1e3, 1e4}) {
        const KerrPoint k = kerr_lanczos(kp, {r * 0.6, r * 0.8});
        CHECK(std::abs(k.F + 1.0 / r) < 2.0 / (r * r));
        CHECK(k.y == 0.0);
    }
}

TEST_CASE("validate rejects an over-extremal spin") {
    CHECK_THROWS_AS(validate(KerrParams{1.0, 1.2}), Error);
    CHECK_THROWS_AS(validate(KerrParams{0.0, 0.0}), Error);
}

TEST_CASE("flat input gives the Minkowski Lewis coefficients") {
    const AxiGrid g{17, 17, 1.0};
    const MetricLewis L = to_lewis(flat_metric(g));
    for (const auto& n : grid_nodes(g)) {
        CHECK(at(L.f, n) == 1.0);
        CHECK(at(L.k, n) == 0.0);
        CHECK(at(L.l, n) == doctest::Approx(n.p.w * n.p.w).epsilon(1e-15));
        CHECK(at(L.m, n) == 0.0);
    }
    CHECK(L.identity_residual < 1e-15);
}

TEST_CASE("Kerr Lewis coefficients match Boyer-Lindquist components") {
    const KerrParams kp{1.0, 0.6};
    const AxiGrid g{33, 33, 8.0};
    const MetricLanczos m = kerr_metric(kp, g);
    const MetricLewis L = to_lewis(m);
    CHECK(L.identity_residual < 1e-12);
    int checked = 0;
    for (const auto& n : grid_nodes(g)) {
        const KerrPoint k = kerr_lanczos(kp, n.p);
        if (!k.in_domain || k.rbar < 3.0) continue;
        const double r = k.rbar, ct = k.cos_theta, st2 = 1 - ct * ct, a = kp.a_spin;
        const double sigma = r * r + a * a * ct * ct;
        const double l_bl = (r * r + a * a + 2 * r * a * a * st2 / sigma) * st2;
        const double k_bl = -2 * r * a * st2 / sigma;
        CHECK(at(L.l, n) == doctest::Approx(l_bl).epsilon(1e-10).scale(1.0));
        CHECK(at(L.k, n) == doctest::Approx(k_bl).epsilon(1e-10).scale(1.0));
        ++checked;
    }
    CHECK(checked > 500);
}

TEST_CASE("zero rotation gives G = F") {
    const KerrParams kp{1.0, 0.3};
    const AxiGrid g{17, 17, 8.0};
    const MetricLanczos m = kerr_metric(kp, g);
    const NodeValues Om = constant_nodes(g, 0.0, 0.0);
    const FourVelocity U = g_factor(m, Om);
    for (const auto& n : grid_nodes(g)) {
        if (!kerr_lanczos(kp, n.p).in_domain) continue;
        CHECK(at(U.G, n) == doctest::Approx(node_value(m.F, n)).epsilon(1e-14));
    }
    CHECK(U.norm_error < 1e-12);
}

TEST_CASE("rigid rotation in flat space gives the special-relativistic factor") {
    const AxiGrid g{17, 17, 1.0};
    const double Om = 0.3;
    const FourVelocity U = g_factor(flat_metric(g), constant_nodes(g, Om, 0.0));
    for (const auto& n : grid_nodes(g)) {
        if (n.outer) continue;
        const double expect = 1.0 - Om * Om * n.p.w * n.p.w;
        CHECK(std::exp(2 * at(U.G, n)) == doctest::Approx(expect).epsilon(1e-14));
    }
    CHECK(U.norm_error < 1e-12);
}

TEST_CASE("four-velocity stays normalized on Kerr with rotation") {
    const KerrParams kp{1.0, 0.8};
    const AxiGrid g{17, 17, 8.0};
    MetricLanczos m = kerr_metric(kp, g);
    NodeValues Om = constant_nodes(g, 0.0, 0.0);
    for (const auto& n : grid_nodes(g))
        if (!n.outer && kerr_lanczos(kp, n.p).rbar > 4.0) at(Om, n) = 0.02;
    const FourVelocity U = g_factor(m, Om);
    CHECK(U.norm_error < 1e-12);
    CHECK(U.min_b > 0.0);
}

TEST_CASE("superluminal rotation is reported as a domain error") {
    const AxiGrid g{9, 9, 1.0};
    CHECK_THROWS_AS(g_factor(flat_metric(g), constant_nodes(g, 0.9, 0.0)), Error);
}

TEST_CASE("field_from_nodes inverts node_values") {
    const AxiGrid g{17, 17, 1.0};
    const AxiField f = sample_field(g, 4, [](double w, double z) {
        const double r2 = 1 + w * w + z * z;
        return 1.0 / r2;
    });
    const AxiField h = field_from_nodes(g, 4, node_values(f));
    for (std::size_t k = 0; k < f.in.size(); ++k) CHECK(h.in[k] == doctest::Approx(f.in[k]).epsilon(1e-14));
    for (std::size_t k = 1; k < f.ex.size(); ++k) CHECK(h.ex[k] == doctest::Approx(f.ex[k]).epsilon(1e-12));
}
