#include "rotstar/params.hpp"

#include <cmath>

#include "rotstar/errors.hpp"
#include "rotstar/fields.hpp"
#include "rotstar/lane_emden.hpp"

namespace rotstar {

namespace {

StarParams base_params(const EquationOfState& eos, double G, double u_O, double beta0, double delta0) {
    validate(eos);
    if (!(G > 0.0)) fail(Status::config, "G_grav must be positive", "params");
    if (!(u_O > 0.0)) fail(Status::config, "u_O must be positive", "params");
    StarParams p;
    p.eos = eos;
    p.G_grav = G;
    p.u_O = u_O;
    p.nu = eos.nu();
    p.rho_NO = rho_newtonian(eos, u_O);
    p.a = std::sqrt(u_O / (4.0 * M_PI * G * p.rho_NO));
    const auto& le = classical_cached(p.nu);
    p.xi1 = le.xi1;
    p.mu1 = le.mu1;
    p.r1 = p.a * p.xi1;
    p.R0 = 4.0 * p.r1;
    p.Xi0 = 4.0 * p.xi1;
    p.epsilon = u_O / (eos.c_light * eos.c_light);
    p.beta0 = beta0;
    p.delta0 = delta0;
    return p;
}

}  // namespace

StarParams make_params(const EquationOfState& eos, double G, double u_O, double Omega_O, double beta0,
                       double delta0) {
    StarParams p = base_params(eos, G, u_O, beta0, delta0);
    p.Omega_O = Omega_O;
    p.b = Omega_O * Omega_O / (4.0 * M_PI * G * p.rho_NO);
    return p;
}

StarParams make_params_b(const EquationOfState& eos, double G, double u_O, double b, double beta0, double delta0) {
    if (b < 0.0) fail(Status::config, "b must be non-negative", "params");
    StarParams p = base_params(eos, G, u_O, beta0, delta0);
    p.b = b;
    p.Omega_O = std::sqrt(b * 4.0 * M_PI * G * p.rho_NO);
    return p;
}

RegimeFlags check_regime(const StarParams& p) {
    RegimeFlags f;
    f.gamma_ok = p.eos.gamma > 1.2 && p.eos.gamma < 2.0;
    f.b_ok = p.b <= p.beta0;
    f.eps_ok = p.epsilon <= p.delta0;
    if (!f.gamma_ok) f.warnings.push_back("gamma outside (6/5, 2)");
    if (!f.b_ok) f.warnings.push_back("rotation parameter b above beta0");
    if (!f.eps_ok) f.warnings.push_back("u_O/c^2 above delta0");
    return f;
}

double omega_profile(const StarParams& p, double r) { return p.Omega_O * cutoff(r / p.R0); }

}  // namespace rotstar
