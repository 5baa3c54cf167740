#pragma once

#include <array>
#include <functional>
#include <vector>

#include "rotstar/eos.hpp"
#include "rotstar/metric.hpp"

namespace rotstar {

// Matter on the grid as physical node values. Empty rho/P/u vectors mean vacuum;
// an empty Omega means no rotation.
struct FluidState {
    NodeValues rho, P, u, Omega;
};

using RegionMask = std::function<bool(const NodeRef&)>;

struct ResidualReport {
    // left minus right of the five field equations (F, A, Pi, K_varpi-combination,
    // K_z-combination); NaN where not evaluated (axis, masked nodes)
    std::array<NodeValues, 5> eq;
    std::array<double, 5> sup{};
    double first_integral_spread = 0.0;  // max - min of u/c^2 + G over rho > 0
    double b_margin = 0.0;               // min of the four-velocity normalization quantity
    double c_margin = 0.0;               // min of Pi_w^2 + Pi_z^2
    int nodes = 0;
};

ResidualReport residual_reduced_system(const MetricLanczos& m, const FluidState& fluid, const RegionMask& mask = {});

// The six Einstein equations through the Lewis coefficients, each written as
// left minus right; also the Sigma identity residual.
struct RicciReport {
    std::array<NodeValues, 6> eq;  // 00, 02, 22, 11, 33, 13
    std::array<double, 6> sup{};
    double sigma_identity = 0.0;
    int nodes = 0;
};
RicciReport ricci_cross_check(const MetricLanczos& m, const FluidState& fluid, const RegionMask& mask = {});

struct ConsistencyReport {
    NodeValues K1, K3;  // right-hand sides of the first-order K system
    NodeValues L;       // d_z K1 - d_w K3
    NodeValues rhs;     // closed form of L from the F, A, Pi equations
    double sup_L = 0.0;
    double sup_identity = 0.0;  // max |L - rhs|
};
ConsistencyReport consistency_K(const MetricLanczos& m, const FluidState& fluid, const RegionMask& mask = {});

// Far-field evaluators in physical coordinates.
struct FarField {
    std::function<double(Point)> F, y, q, K;
    double F_inf = 0.0;
    double c_light = 1.0;
    double G_grav = 1.0;
};
FarField far_field(const MetricLanczos& m);

struct AsymptoticReport {
    double M = 0.0, J = 0.0;
    // remainders of F + GM/(c^2 r), A/varpi^2 - 2GJ/(c^3 r^3), Pi/varpi - 1, e^K - 1
    std::array<double, 4> order{};
    std::array<double, 4> nominal{2.0, 4.0, 2.0, 2.0};
    std::array<bool, 4> exact{};  // remainder below round-off on the whole window
    double r_lo = 0.0, r_hi = 0.0;
    bool flat = false;  // every order >= nominal - tolerance
};
AsymptoticReport asymptotic_fit(const FarField& ff, double r_lo, double r_hi, double order_tol = 0.3);

// Static spherical star with the same equation of state and central enthalpy,
// integrated in areal radius r until the enthalpy vanishes.
struct TovSolution {
    double R = 0.0, M = 0.0;
    double G_grav = 1.0, c_light = 1.0;
    double F_surface = 0.0;  // (1/2) log(1 - 2GM/(c^2 R))
    std::vector<double> r, u, dudr, m;

    double enthalpy(double radius) const;
    double mass(double radius) const;
    // g_tt = e^{2F}, normalized to 1 at infinity
    double F(double radius) const;
};
TovSolution tov_benchmark(const EquationOfState& eos, double G, double u_O, double tol = 1e-12, int table = 4000);

// Slope of log|e| against log h, least squares over the levels.
double observed_order(const std::vector<double>& h, const std::vector<double>& err);

}  // namespace rotstar
