#pragma once

#include <string>
#include <vector>

#include "rotstar/eos.hpp"

namespace rotstar {

// Physical inputs and the derived scales of a slowly rotating polytrope.
struct StarParams {
    EquationOfState eos;
    double G_grav = 1.0;
    double u_O = 1.0e-3;     // central enthalpy
    double Omega_O = 0.0;    // central angular velocity

    // derived
    double nu = 1.5;
    double rho_NO = 0.0;     // central Newtonian density
    double a = 0.0;          // length scale, a^2 = u_O / (4 pi G rho_NO)
    double b = 0.0;          // Omega_O^2 / (4 pi G rho_NO)
    double xi1 = 0.0;
    double mu1 = 0.0;
    double r1 = 0.0;
    double R0 = 0.0;         // 4 r1
    double Xi0 = 0.0;        // 4 xi1
    double epsilon = 0.0;    // u_O / c^2

    // regime thresholds (diagnostic)
    double beta0 = 5.0e-3;
    double delta0 = 1.0e-2;
};

struct RegimeFlags {
    bool gamma_ok = true;    // 6/5 < gamma < 2
    bool b_ok = true;        // b <= beta0
    bool eps_ok = true;      // u_O/c^2 <= delta0
    std::vector<std::string> warnings;
};

// Fills the derived members; needs the classical Lane-Emden zero for nu.
StarParams make_params(const EquationOfState& eos, double G, double u_O, double Omega_O, double beta0 = 5.0e-3,
                       double delta0 = 1.0e-2);
// Same, but fixing b instead of Omega_O.
StarParams make_params_b(const EquationOfState& eos, double G, double u_O, double b, double beta0 = 5.0e-3,
                         double delta0 = 1.0e-2);

RegimeFlags check_regime(const StarParams& p);

// Omega_O chi(r/R0).
double omega_profile(const StarParams& p, double r);

}  // namespace rotstar
