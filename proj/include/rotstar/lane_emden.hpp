#pragma once

#include <vector>

#include "rotstar/fields.hpp"
#include "rotstar/params.hpp"

namespace rotstar {

// Radial profile on [0, xi_end], stored with (theta, theta', theta'') on a uniform
// table and evaluated by quintic Hermite interpolation.
class LaneEmdenProfile {
public:
    LaneEmdenProfile() = default;
    LaneEmdenProfile(double nu, double step, std::vector<double> th, std::vector<double> dth, double xi0);

    double nu() const { return nu_; }
    double xi_end() const { return xi0_ + step_ * (th_.size() - 1); }
    double theta(double xi) const;
    double dtheta(double xi) const;

private:
    double nu_ = 1.0, step_ = 1.0, xi0_ = 0.0;
    std::vector<double> th_, dth_;
};

// Integrates -(xi^2 theta')'/xi^2 = (theta v 0)^nu, theta(0) = 1, up to xi_end.
LaneEmdenProfile integrate_lane_emden(double nu, double xi_end, double tol = 1e-13);

struct LaneEmdenSolution {
    double nu = 1.0;
    double xi1 = 0.0;
    double mu1 = 0.0;    // xi1^2 |theta'(xi1)|
    LaneEmdenProfile profile;

    // Extended profile: theta for xi <= xi1, mu1 (1/xi - 1/xi1) beyond.
    double theta(double xi) const;
    double dtheta(double xi) const;
    double theta_inf() const { return -mu1 / xi1; }
};

LaneEmdenSolution solve_classical(double nu, double tol = 1e-12);
// Cached per nu (pure function of nu).
const LaneEmdenSolution& classical_cached(double nu);

struct DistortedOptions {
    int n_in = 129;
    int n_ex = 97;
    double damping = 0.8;
    double tol = 1e-11;
    int max_iter = 200;
    int rays = 33;           // zeta samples on [0, 1]
};

// Theta = theta(|xi|) + delta on the xi-grid (R0 = Xi0 = 4 xi1).
struct DistortedLaneEmden {
    double nu = 1.5;
    double b = 0.0;
    double Xi0 = 0.0;
    LaneEmdenSolution classical;
    AxiField delta;                  // index 3, offset = delta at infinity
    std::vector<double> zeta, Xi1;   // vacuum boundary radius per ray, zeta = cos(polar angle)
    int iterations = 0;
    double contraction = 0.0;        // last observed ratio of successive updates
    double last_change = 0.0;

    double theta_inf() const { return classical.theta_inf() + delta.offset; }
    double Theta(double w, double z) const;
};

DistortedLaneEmden solve_distorted(double nu, double b, const DistortedOptions& opt = {});

struct NewtonianFields {
    AxiField u_N;     // index 3, offset u_O Theta_inf
    AxiField rho_N;   // compact
    AxiField P_N;     // compact
    AxiField Phi_N;   // index 3, decays
    AxiField Omega;   // compact, Omega_O chi(r/R0)
    double M_N = 0.0;
};

// Physical grid is the xi-grid scaled by a. Phi_N is taken from the Newtonian first
// integral (exact given Theta); phi_from_density gives the quadrature version.
NewtonianFields newtonian_fields(const DistortedLaneEmden& dle, const StarParams& p);
AxiField phi_from_density(const AxiField& rho_N, double G);

}  // namespace rotstar
