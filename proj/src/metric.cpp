#include "rotstar/metric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rotstar/errors.hpp"

namespace rotstar {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

std::vector<NodeRef> grid_nodes(const AxiGrid& g) {
    std::vector<NodeRef> out;
    out.reserve(g.size_in() + g.size_ex());
    for (int i = 0; i < g.n_in; ++i)
        for (int j = 0; j < g.n_in; ++j) out.push_back({false, g.id_in(i, j), {g.x_in(i), g.x_in(j)}});
    for (int i = 0; i < g.n_ex; ++i)
        for (int j = 0; j < g.n_ex; ++j) {
            if (i == 0 && j == 0) continue;
            out.push_back({true, g.id_ex(i, j), outer_node_point(g, i, j)});
        }
    return out;
}

double node_value(const AxiField& f, const NodeRef& n) {
    if (!n.outer) return f.in[n.k];
    const double r = std::hypot(n.p.w, n.p.z);
    return f.offset + std::pow(f.grid.R0 / r, f.index - 2) * f.ex[n.k];
}

NodeValues node_values(const AxiField& f) {
    NodeValues out;
    out.in = f.in;
    out.ex.assign(f.ex.size(), f.offset);
    for (const auto& n : grid_nodes(f.grid))
        if (n.outer) out.ex[n.k] = node_value(f, n);
    return out;
}

AxiField field_from_nodes(const AxiGrid& g, int index, const NodeValues& v, int parity_w, int parity_z,
                          double offset) {
    AxiField f(g, index, offset);
    f.parity_w = parity_w;
    f.parity_z = parity_z;
    f.in = v.in;
    for (const auto& n : grid_nodes(g)) {
        if (!n.outer) continue;
        const double r = std::hypot(n.p.w, n.p.z);
        f.ex[n.k] = std::pow(r / g.R0, index - 2) * (v.ex[n.k] - offset);
    }
    if (parity_w < 0 || parity_z < 0)
        f.ex[0] = 0.0;
    else
        fill_origin_image(f);
    return f;
}

MetricJets::MetricJets(const MetricLanczos& m) : F_(jet(m.F)), y_(jet(m.y)), q_(jet(m.q)), K_(jet(m.K)) {}

Jet MetricJets::pick(const FieldJet& f, const NodeRef& n) {
    const PatchJet& P = n.outer ? f.ex : f.in;
    return {P.v[n.k], P.d1[n.k], P.d3[n.k], P.d11[n.k], P.d13[n.k], P.d33[n.k]};
}

LanczosJets MetricJets::at(const NodeRef& n) const {
    const Jet w = Jet::varpi(n.p.w);
    LanczosJets J;
    J.F = pick(F_, n);
    J.A = w * w * pick(y_, n);
    J.Pi = w * (1.0 + pick(q_, n));
    J.K = pick(K_, n);
    return J;
}

double b_quantity(double F, double A, double Pi, double Omega, double c) {
    const double t = 1.0 + Omega * A / c;
    return std::exp(2 * F) * t * t - std::exp(-2 * F) * Omega * Omega * Pi * Pi / (c * c);
}

MetricLanczos assemble(const StarParams& p, const PotentialSet& s, const AxiField& Phi_N) {
    const double c = p.eos.c_light;
    const double c2 = c * c, c3 = c2 * c, c4 = c2 * c2;
    MetricLanczos m;
    m.c_light = c;
    m.G_grav = p.G_grav;
    m.F = combine(Phi_N, s.W, 1.0 / c2, -1.0 / c4);
    m.y = combine(s.Y, s.Y, 1.0 / c3, 0.0);
    m.q = combine(s.X, s.X, 1.0 / c4, 0.0);
    m.K = combine(s.V, s.V, 1.0 / c4, 0.0);
    for (const auto& n : grid_nodes(m.F.grid)) {
        const double r = std::hypot(n.p.w, n.p.z);
        const double Om = omega_profile(p, r);
        if (Om == 0.0) continue;
        const double w = n.p.w;
        const double bq = b_quantity(node_value(m.F, n), w * w * node_value(m.y, n),
                                     w * (1.0 + node_value(m.q, n)), Om, c);
        if (!(bq > 0.0))
            fail(Status::regime, "four-velocity normalization violated at varpi=" + std::to_string(w) +
                                     ", z=" + std::to_string(n.p.z), "metric");
    }
    return m;
}

MetricLewis to_lewis(const MetricLanczos& m) {
    const AxiGrid& g = m.F.grid;
    MetricLewis L;
    for (NodeValues* nv : {&L.f, &L.k, &L.l, &L.m}) {
        nv->in.assign(g.size_in(), kNaN);
        nv->ex.assign(g.size_ex(), kNaN);
    }
    for (const auto& n : grid_nodes(g)) {
        const double w = n.p.w;
        const double F = node_value(m.F, n);
        const double A = w * w * node_value(m.y, n);
        const double Pi = w * (1.0 + node_value(m.q, n));
        const double K = node_value(m.K, n);
        const double e2 = std::exp(2 * F);
        const double f = e2, k = -e2 * A, l = -e2 * A * A + Pi * Pi / e2;
        auto slot = [&](NodeValues& v) -> double& { return n.outer ? v.ex[n.k] : v.in[n.k]; };
        slot(L.f) = f;
        slot(L.k) = k;
        slot(L.l) = l;
        slot(L.m) = 2 * (K - F);
        if (Pi != 0.0) L.identity_residual = std::max(L.identity_residual, std::abs(Pi * Pi - (f * l + k * k)) / (Pi * Pi));
    }
    return L;
}

FourVelocity g_factor(const MetricLanczos& m, const NodeValues& Omega) {
    const AxiGrid& g = m.F.grid;
    const double c = m.c_light;
    FourVelocity U;
    for (NodeValues* nv : {&U.G, &U.U0, &U.U2, &U.U_0, &U.U_2}) {
        nv->in.assign(g.size_in(), kNaN);
        nv->ex.assign(g.size_ex(), kNaN);
    }
    U.min_b = std::numeric_limits<double>::infinity();
    for (const auto& n : grid_nodes(g)) {
        const double w = n.p.w;
        const double Om = n.outer ? Omega.ex[n.k] : Omega.in[n.k];
        const double F = node_value(m.F, n);
        const double A = w * w * node_value(m.y, n);
        const double Pi = w * (1.0 + node_value(m.q, n));
        const double bq = b_quantity(F, A, Pi, Om, c);
        U.min_b = std::min(U.min_b, bq);
        if (!(bq > 0.0))
            fail(Status::domain, "four-velocity normalization violated at varpi=" + std::to_string(w), "metric");
        const double G = 0.5 * std::log(bq);
        const double u0 = std::exp(-G), u2 = u0 * Om / c;
        const double t = 1.0 + Om * A / c;
        const double l0 = std::exp(2 * F - G) * t;
        const double l2 = std::exp(2 * F - G) * (A * t - std::exp(-4 * F) * Om * Pi * Pi / c);
        auto slot = [&](NodeValues& v) -> double& { return n.outer ? v.ex[n.k] : v.in[n.k]; };
        slot(U.G) = G;
        slot(U.U0) = u0;
        slot(U.U2) = u2;
        slot(U.U_0) = l0;
        slot(U.U_2) = l2;
        U.norm_error = std::max(U.norm_error, std::abs(u0 * l0 + u2 * l2 - 1.0));
    }
    return U;
}

void validate(const KerrParams& kp) {
    if (!(kp.m_geom > 0.0)) fail(Status::config, "Kerr mass parameter must be positive", "kerr");
    if (std::abs(kp.a_spin) > kp.m_geom) fail(Status::config, "Kerr spin exceeds the mass parameter", "kerr");
}

Point kerr_forward(const KerrParams& kp, double rbar, double cos_theta) {
    const double m = kp.m_geom, a = kp.a_spin;
    const double delta = rbar * rbar - 2 * m * rbar + a * a;
    const double s = std::sqrt(std::max(0.0, 1.0 - cos_theta * cos_theta));
    return {std::sqrt(delta) * s, (rbar - m) * cos_theta};
}

void kerr_inverse(const KerrParams& kp, Point p, double& rbar, double& cos_theta) {
    const double m = kp.m_geom, a = kp.a_spin;
    const double kappa = m * m - a * a;
    const double s = kappa + p.w * p.w + p.z * p.z;
    const double disc = std::sqrt(std::max(0.0, s * s - 4 * kappa * p.z * p.z));
    const double lambda = 0.5 * (s + disc);
    const double root = std::sqrt(lambda);
    rbar = m + root;
    cos_theta = root > 0.0 ? std::clamp(p.z / root, -1.0, 1.0) : 1.0;
}

KerrPoint kerr_lanczos(const KerrParams& kp, Point p) {
    const double m = kp.m_geom, a = kp.a_spin;
    KerrPoint out;
    kerr_inverse(kp, p, out.rbar, out.cos_theta);
    const double r = out.rbar, ct = out.cos_theta;
    out.in_domain = r > 2 * m;
    if (!out.in_domain) return out;
    const double st2 = 1.0 - ct * ct;
    const double sigma = r * r + a * a * ct * ct;
    const double delta = r * r - 2 * m * r + a * a;
    const double e2F = 1.0 - 2 * m * r / sigma;
    out.F = 0.5 * std::log(e2F);
    out.y = 2 * m * r * a / ((sigma - 2 * m * r) * delta);
    out.A = p.w * p.w * out.y;
    const double pi2_over_w2 =
        e2F * (e2F * p.w * p.w * out.y * out.y + (r * r + a * a + 2 * m * r * a * a * st2 / sigma) / delta);
    out.q = std::sqrt(pi2_over_w2) - 1.0;
    out.Pi = p.w * (1.0 + out.q);
    out.K = out.F + 0.5 * std::log(sigma / (delta + (m * m - a * a) * st2));
    return out;
}

MetricLanczos kerr_metric(const KerrParams& kp, const AxiGrid& g) {
    validate(kp);
    auto comp = [&](double KerrPoint::*field) {
        return [&kp, field](double w, double z) {
            const KerrPoint k = kerr_lanczos(kp, {w, z});
            return k.in_domain ? k.*field : 0.0;
        };
    };
    MetricLanczos m;
    m.c_light = 1.0;
    m.G_grav = 1.0;
    // Limits at infinity of (r/R0)^{index-2} times each potential.
    m.F = sample_field(g, 3, comp(&KerrPoint::F), 0.0, -kp.m_geom / g.R0);
    m.y = sample_field(g, 5, comp(&KerrPoint::y), 0.0, 2 * kp.m_geom * kp.a_spin / (g.R0 * g.R0 * g.R0));
    m.q = sample_field(g, 4, comp(&KerrPoint::q), 0.0, 0.0);
    m.K = sample_field(g, 4, comp(&KerrPoint::K));
    return m;
}

}  // namespace rotstar
