#pragma once

#include <vector>

#include "rotstar/fields.hpp"
#include "rotstar/jet.hpp"
#include "rotstar/params.hpp"

namespace rotstar {

// Post-Newtonian unknowns. W, Y, X, V carry decay indices 3, 5, 4, 4; w is the
// enthalpy correction sampled on the same nodes (index 3, offset = W at infinity).
struct PotentialSet {
    AxiField W, Y, X, V, w;
};

// Lanczos potentials in regularized storage: A = varpi^2 y and Pi = varpi (1 + q),
// so every stored field is smooth and even across the axis.
struct MetricLanczos {
    AxiField F;  // index 3; offset is F at infinity
    AxiField y;  // index 5
    AxiField q;  // index 4
    AxiField K;  // index 4
    double c_light = 1.0;
    double G_grav = 1.0;
};

// A grid node other than the outer origin image (which sits at infinity).
struct NodeRef {
    bool outer = false;
    std::size_t k = 0;
    Point p;
};
std::vector<NodeRef> grid_nodes(const AxiGrid& g);

struct LanczosJets {
    Jet F, A, Pi, K;
};

// Finite-difference jets of the stored fields, combined per node into jets of F, A, Pi, K.
class MetricJets {
public:
    explicit MetricJets(const MetricLanczos& m);
    LanczosJets at(const NodeRef& n) const;
    // regularized pieces at a node
    Jet F(const NodeRef& n) const { return pick(F_, n); }
    Jet y(const NodeRef& n) const { return pick(y_, n); }
    Jet q(const NodeRef& n) const { return pick(q_, n); }
    Jet K(const NodeRef& n) const { return pick(K_, n); }

private:
    static Jet pick(const FieldJet& f, const NodeRef& n);
    FieldJet F_, y_, q_, K_;
};

// Physical value of a stored field at a node.
double node_value(const AxiField& f, const NodeRef& n);
// Builds a field from physical node values (outer origin image extrapolated).
AxiField field_from_nodes(const AxiGrid& g, int index, const NodeValues& v, int parity_w = 1, int parity_z = 1,
                          double offset = 0.0);
NodeValues node_values(const AxiField& f);

// F = Phi_N/c^2 - W/c^4, A = varpi^2 Y/c^3, Pi = varpi(1 + X/c^4), K = V/c^4.
// Fails with a regime error if the four-velocity normalization (B) breaks at a node.
MetricLanczos assemble(const StarParams& p, const PotentialSet& s, const AxiField& Phi_N);

// (B) quantity e^{2F}(1 + Omega A/c)^2 - e^{-2F} Omega^2 Pi^2 / c^2 at one node.
double b_quantity(double F, double A, double Pi, double Omega, double c);

struct MetricLewis {
    NodeValues f, k, l, m;
    double identity_residual = 0.0;  // max |Pi^2 - (f l + k^2)| / Pi^2
};
MetricLewis to_lewis(const MetricLanczos& m);

struct FourVelocity {
    NodeValues G, U0, U2, U_0, U_2;
    double min_b = 0.0;        // smallest (B) quantity seen
    double norm_error = 0.0;   // max |U^mu U_mu - 1|
};
// Omega given as physical node values. Fails with a domain error if (B) is violated.
FourVelocity g_factor(const MetricLanczos& m, const NodeValues& Omega);

struct KerrParams {
    double m_geom = 1.0;  // G M / c^2
    double a_spin = 0.0;  // J / (c M)
};

struct KerrPoint {
    double F = 0.0, A = 0.0, Pi = 0.0, K = 0.0;
    double y = 0.0, q = 0.0;  // A / varpi^2 and Pi / varpi - 1
    double rbar = 0.0, cos_theta = 0.0;
    bool in_domain = false;
};

void validate(const KerrParams& kp);
Point kerr_forward(const KerrParams& kp, double rbar, double cos_theta);
// Inverse of kerr_forward on the exterior (larger root of the lambda quadratic).
void kerr_inverse(const KerrParams& kp, Point p, double& rbar, double& cos_theta);
KerrPoint kerr_lanczos(const KerrParams& kp, Point p);

// Kerr sampled on a grid in geometric units (c = G = 1). Nodes outside rbar > 2m hold 0.
MetricLanczos kerr_metric(const KerrParams& kp, const AxiGrid& g);

}  // namespace rotstar
