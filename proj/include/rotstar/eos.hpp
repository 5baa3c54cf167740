#pragma once

#include <vector>

namespace rotstar {

// Barotropic EOS parametrized by the relativistic enthalpy u.
// Density is primary: rho(u) = K_rho u^nu (1 + sum_k upsilon_rho[k-1] (u/c^2)^k),
// and pressure follows from dP/du = rho + P/c^2, P(0) = 0, so the enthalpy
// definition holds exactly. The pressure remainder series is derived, not free.
struct EquationOfState {
    double gamma = 5.0 / 3.0;
    double A_const = 1.0;
    double c_light = 1.0e3;
    std::vector<double> upsilon_rho;  // coefficient of (u/c^2)^k at index k-1
    double series_radius = 0.5;       // admissible |u|/c^2

    double nu() const { return 1.0 / (gamma - 1.0); }
    double k_rho() const;  // ((gamma-1)/(A gamma))^nu
    double k_p() const;    // A k_rho^gamma
    double upsilon1() const { return upsilon_rho.empty() ? 0.0 : upsilon_rho[0]; }
};

void validate(const EquationOfState& eos);

// Newtonian parts f_N(u); zero for u <= 0.
double rho_newtonian(const EquationOfState& eos, double u);
double p_newtonian(const EquationOfState& eos, double u);

double density_from_enthalpy(const EquationOfState& eos, double u);
double pressure_from_enthalpy(const EquationOfState& eos, double u);
// d rho / du, used by the sound-speed check.
double density_derivative(const EquationOfState& eos, double u);

double enthalpy_from_density(const EquationOfState& eos, double rho);

// Coefficients of the derived pressure remainder, P = f_N^P(u)(1 + sum_k c_k (u/c^2)^k).
std::vector<double> derived_upsilon_p(const EquationOfState& eos, int terms);

// Taylor remainder of the Newtonian density around u_N.
double h_rho(const EquationOfState& eos, double u_n, double w);

// rho_N/u_N with the removable limit (0 where u_N <= 0).
double rho_over_u(const EquationOfState& eos, double u_n);

struct TabulatedEos {
    std::vector<double> q, rho, p;
    double gamma_fit = 5.0 / 3.0;
    double a_fit = 0.0;
};

// Degenerate neutron gas: P = B c^5 int q^4/sqrt(1+q^2), rho = 3 B c^3 int sqrt(1+q^2) q^2.
TabulatedEos neutron_star_eos(double B, double q_max, double c_light, int nodes = 200);
double neutron_pressure(double B, double c_light, double q);
double neutron_density(double B, double c_light, double q);

}  // namespace rotstar
