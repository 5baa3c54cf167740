#include "rotstar/eos.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include <cmath>
#include <limits>

#include "rotstar/errors.hpp"

namespace rotstar {

namespace {

double series(const std::vector<double>& c, double x) {
    double s = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) s = (s + *it) * x;
    return s;  // sum_k c[k-1] x^k
}

double series_derivative(const std::vector<double>& c, double x) {
    double s = 0.0;
    for (std::size_t k = c.size(); k >= 1; --k) s = s * x + static_cast<double>(k) * c[k - 1];
    return s;
}

// sum_m x^m / (a (a+1) ... (a+m)), i.e. e^x gamma_lower(a, x) / x^a.
double kummer_tail(double a, double x) {
    double term = 1.0 / a, sum = term;
    for (int m = 1; m < 400; ++m) {
        term *= x / (a + m);
        sum += term;
        if (std::abs(term) < 1e-18 * std::abs(sum)) break;
    }
    return sum;
}

void check_radius(const EquationOfState& eos, double u) {
    const double x = u / (eos.c_light * eos.c_light);
    if (!eos.upsilon_rho.empty() && std::abs(x) > eos.series_radius)
        fail(Status::domain, "u/c^2 outside the remainder-series radius", "eos");
}

}  // namespace

double EquationOfState::k_rho() const {
    return std::pow((gamma - 1.0) / (A_const * gamma), nu());
}

double EquationOfState::k_p() const { return A_const * std::pow(k_rho(), gamma); }

void validate(const EquationOfState& eos) {
    if (!(eos.gamma > 1.2 && eos.gamma < 2.0)) fail(Status::config, "gamma must lie in (6/5, 2)", "eos");
    if (!(eos.A_const > 0.0)) fail(Status::config, "A_const must be positive", "eos");
    if (!(eos.c_light > 0.0)) fail(Status::config, "c_light must be positive", "eos");
    if (!(eos.series_radius > 0.0)) fail(Status::config, "series_radius must be positive", "eos");
    const double c2 = eos.c_light * eos.c_light;
    for (int i = 1; i <= 64; ++i) {
        const double u = eos.series_radius * c2 * i / 64.0 * 0.999;
        const double rho = density_from_enthalpy(eos, u);
        const double drho = density_derivative(eos, u);
        if (!(rho > 0.0) || !(drho > 0.0))
            fail(Status::config, "density must increase with enthalpy on the admissible range", "eos");
        const double dpdrho = (rho + pressure_from_enthalpy(eos, u) / c2) / drho;
        if (!(dpdrho < c2)) fail(Status::config, "sound speed exceeds c on the admissible range", "eos");
    }
}

double rho_newtonian(const EquationOfState& eos, double u) {
    return u > 0.0 ? eos.k_rho() * std::pow(u, eos.nu()) : 0.0;
}

double p_newtonian(const EquationOfState& eos, double u) {
    return u > 0.0 ? eos.k_p() * std::pow(u, eos.nu() + 1.0) : 0.0;
}

double density_from_enthalpy(const EquationOfState& eos, double u) {
    if (u <= 0.0) return 0.0;
    check_radius(eos, u);
    const double x = u / (eos.c_light * eos.c_light);
    return rho_newtonian(eos, u) * (1.0 + series(eos.upsilon_rho, x));
}

double density_derivative(const EquationOfState& eos, double u) {
    if (u <= 0.0) return 0.0;
    const double c2 = eos.c_light * eos.c_light, x = u / c2, nu = eos.nu();
    const double base = eos.k_rho() * std::pow(u, nu - 1.0);
    return base * (nu * (1.0 + series(eos.upsilon_rho, x)) + x * series_derivative(eos.upsilon_rho, x));
}

// P(u) = int_0^u e^{(u-s)/c^2} rho(s) ds, expanded termwise.
double pressure_from_enthalpy(const EquationOfState& eos, double u) {
    if (u <= 0.0) return 0.0;
    check_radius(eos, u);
    const double x = u / (eos.c_light * eos.c_light), nu = eos.nu();
    double sum = kummer_tail(nu + 1.0, x), xk = 1.0;
    for (std::size_t k = 1; k <= eos.upsilon_rho.size(); ++k) {
        xk *= x;
        sum += eos.upsilon_rho[k - 1] * xk * kummer_tail(nu + 1.0 + k, x);
    }
    return eos.k_rho() * std::pow(u, nu + 1.0) * sum;
}

double enthalpy_from_density(const EquationOfState& eos, double rho) {
    if (rho < 0.0) fail(Status::domain, "negative density", "eos");
    if (rho == 0.0) return 0.0;
    const double guess = std::pow(rho / eos.k_rho(), 1.0 / eos.nu());
    if (eos.upsilon_rho.empty()) return guess;
    const double umax = eos.series_radius * eos.c_light * eos.c_light;
    if (density_from_enthalpy(eos, umax) < rho) fail(Status::domain, "density beyond the admissible range", "eos");
    std::uintmax_t iters = 200;
    auto f = [&](double u) {
        return std::make_pair(density_from_enthalpy(eos, u) - rho, density_derivative(eos, u));
    };
    return boost::math::tools::newton_raphson_iterate(f, std::min(guess, umax), 0.0, umax, 52, iters);
}

std::vector<double> derived_upsilon_p(const EquationOfState& eos, int terms) {
    const double nu = eos.nu();
    std::vector<double> out(terms, 0.0);
    for (int j = 1; j <= terms; ++j) {
        double cj = 0.0;
        for (int k = 0; k <= j; ++k) {
            const double ups = k == 0 ? 1.0 : (k <= static_cast<int>(eos.upsilon_rho.size()) ? eos.upsilon_rho[k - 1] : 0.0);
            if (ups == 0.0) continue;
            double prod = 1.0;
            const double a = nu + 1.0 + k;
            for (int i = 0; i <= j - k; ++i) prod *= a + i;
            cj += ups / prod;
        }
        out[j - 1] = (nu + 1.0) * cj;
    }
    return out;
}

double h_rho(const EquationOfState& eos, double u_n, double w) {
    const double c2 = eos.c_light * eos.c_light;
    const double shifted = u_n + w / c2;
    const double lin = u_n > 0.0 ? eos.nu() * rho_over_u(eos, u_n) * (w / c2) : 0.0;
    return rho_newtonian(eos, shifted) - rho_newtonian(eos, u_n) - lin;
}

double rho_over_u(const EquationOfState& eos, double u_n) {
    return u_n > 0.0 ? eos.k_rho() * std::pow(u_n, eos.nu() - 1.0) : 0.0;
}

double neutron_pressure(double B, double c, double q) {
    if (q <= 0.0) return 0.0;
    auto f = [](double s) { return s * s * s * s / std::sqrt(1.0 + s * s); };
    return B * std::pow(c, 5) * boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, 0.0, q, 15, 1e-14);
}

double neutron_density(double B, double c, double q) {
    if (q <= 0.0) return 0.0;
    auto f = [](double s) { return std::sqrt(1.0 + s * s) * s * s; };
    return 3.0 * B * c * c * c * boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, 0.0, q, 15, 1e-14);
}

TabulatedEos neutron_star_eos(double B, double q_max, double c, int nodes) {
    if (!(B > 0.0)) fail(Status::domain, "B must be positive", "eos");
    if (!(q_max > 0.0) || nodes < 2) fail(Status::domain, "invalid table range", "eos");
    TabulatedEos t;
    t.a_fit = 1.0 / (5.0 * std::cbrt(B * B));
    t.q.push_back(0.0);
    t.rho.push_back(0.0);
    t.p.push_back(0.0);
    const double qmin = q_max * 1e-4;
    for (int i = 0; i < nodes - 1; ++i) {
        const double q = qmin * std::pow(q_max / qmin, static_cast<double>(i) / (nodes - 2));
        t.q.push_back(q);
        t.rho.push_back(neutron_density(B, c, q));
        t.p.push_back(neutron_pressure(B, c, q));
    }
    return t;
}

}  // namespace rotstar
