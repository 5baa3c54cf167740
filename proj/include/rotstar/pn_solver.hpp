#pragma once

#include <string>
#include <vector>

#include "rotstar/lane_emden.hpp"
#include "rotstar/metric.hpp"
#include "rotstar/params.hpp"
#include "rotstar/verify.hpp"

namespace rotstar {

struct SolverOptions {
    DistortedOptions grid;     // n_in, n_ex and the Lane-Emden iteration settings
    double inner_tol = 1e-11;  // relative to u_O^2
    int inner_max = 80;
    double outer_tol = 1e-10;  // relative to u_O^2
    int outer_max = 40;
    int divergence_window = 3; // consecutive ratios >= 1 before giving up
    int ray_points = 24;       // Gauss points per exterior ray of the V quadrature
    int rays = 16;             // rays averaged for the constant at infinity
    double fit_lo = 5.0;       // asymptotic window in units of R0
    double fit_hi = 50.0;
    bool verify = true;        // run residual and consistency checks on the result
};

// Leading post-Newtonian sources built from the Newtonian star, compact in supp(rho_N).
struct Sources {
    AxiField g_a, g_b, g_c;
};
Sources sources(const StarParams& p, const NewtonianFields& nf);

// Enthalpy correction at one point from the metric potentials; Z is the
// argument of the logarithmic series. Fails with a regime error if |Z|/c^2 >= 1.
double enthalpy_correction(double W, double Y, double X, double Phi_N, double Omega, double varpi, double c,
                           double* Z = nullptr);

struct EnthalpyCorrection {
    AxiField w, Z;
};
EnthalpyCorrection w_from_WYX(const StarParams& p, const AxiField& W, const AxiField& Y, const AxiField& X,
                              const NewtonianFields& nf);

// Remainders of the W, Y, X equations relative to their leading sources and the
// auxiliary quantities Q0..Q6, as physical node values.
struct RemaindersABC {
    NodeValues R_a, R_b, R_c;
    std::vector<NodeValues> Q;  // Q0..Q6
};
RemaindersABC remainders_abc(const StarParams& p, const PotentialSet& s, const NewtonianFields& nf);

struct RemaindersDE {
    NodeValues R_d, R_e, Q7, Q8, X_hat;  // X_hat is scaled like X
};
RemaindersDE remainders_de(const StarParams& p, const PotentialSet& s, const NewtonianFields& nf);

struct IterationReport {
    int iterations = 0;
    double last_change = 0.0;
    double ratio = 0.0;              // last successive-change ratio
    std::vector<double> history;     // scaled change per sweep
};

// The map V -> (W, Y, X, w). `warm` (optional) seeds the iteration.
PotentialSet inner_fixed_point(const StarParams& p, const AxiField& V, const NewtonianFields& nf,
                               const SolverOptions& opt, const PotentialSet* warm = nullptr,
                               IterationReport* report = nullptr);

enum class PathOrder { z_then_w, w_then_z };

// Line-integral of (V_w, V_z) on the inner patch from the origin; inputs are
// node arrays of the inner patch.
std::vector<double> integrate_gradient(const AxiGrid& g, const std::vector<double>& Vw,
                                       const std::vector<double>& Vz, PathOrder order);

struct VMapResult {
    AxiField V;            // index 4, V -> 0 at infinity
    AxiField V1, V3;       // gradient right-hand sides (index 5, odd parities)
    double C_inf = 0.0;    // constant removed so that V vanishes at infinity
    double ray_spread = 0.0;  // max - min of the per-ray limits (path-dependence diagnostic)
};
VMapResult v_map(const StarParams& p, const PotentialSet& U, const NewtonianFields& nf, const SolverOptions& opt);

struct SolveDiagnostics {
    IterationReport outer;
    std::vector<IterationReport> inner;
    std::vector<double> contraction;  // outer ratios
    double C_inf = 0.0, ray_spread = 0.0;
    double M = 0.0, J = 0.0, M_N = 0.0;
    double support_radius = 0.0;      // largest node radius with rho > 0
    double max_Z = 0.0;               // max |Z|/c^2
    double sup_W = 0.0, sup_Y = 0.0, sup_X = 0.0, sup_V = 0.0;
    RegimeFlags regime;
    AsymptoticReport asymptotics;
    ResidualReport residuals;
    ConsistencyReport consistency;
    bool verified = false;
};

struct Solution {
    StarParams params;
    DistortedLaneEmden dle;
    NewtonianFields nf;
    PotentialSet U;
    MetricLanczos metric;
    FluidState fluid;
    SolveDiagnostics diag;
};

// Physical density, pressure, enthalpy and angular velocity on the nodes.
FluidState fluid_state(const StarParams& p, const PotentialSet& U, const NewtonianFields& nf);

Solution solve(const StarParams& p, const SolverOptions& opt = {});

}  // namespace rotstar
