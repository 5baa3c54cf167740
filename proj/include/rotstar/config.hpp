#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rotstar/eos.hpp"
#include "rotstar/pn_solver.hpp"

namespace rotstar {

// Run configuration read from a strict JSON document: unknown keys and wrong
// types are config errors. Blocks and keys mirror the struct layout.
struct RunConfig {
    // eos
    std::optional<double> gamma;  // required by every command except lane-emden with an explicit nu
    double A_const = 1.0;
    std::vector<double> upsilon_rho;
    double series_radius = 0.5;

    // star
    double u_O = 1.0e-3;
    std::optional<double> Omega_O;
    std::optional<double> b;      // alternative to Omega_O; b = 0 if neither is given
    double c_light = 1.0;
    double G_grav = 1.0;
    double beta0 = 5.0e-3;
    double delta0 = 1.0e-2;

    // grid
    int n_in = 65;
    int n_ex = 49;
    double r_max = 50.0;          // outer edge of the far-field fit, in units of R0

    // solver
    double inner_tol = 1e-11;
    int inner_max = 80;
    double outer_tol = 1e-10;
    int outer_max = 40;
    int divergence_window = 3;
    double damping = 0.8;         // distorted Lane-Emden relaxation
    int ray_points = 24;
    int rays = 16;

    // verify
    std::vector<int> levels{33, 65, 129};
    double order_band = 0.2;      // |order - 2| allowed in refinement studies
    double flat_tol = 0.3;        // far-field order tolerance
    double fit_lo = 5.0;          // inner edge of the far-field fit, in units of R0
    double residual_drop = 2.0;   // a residual is discretization error if it falls by this factor per halving

    // output
    std::string directory = "run";
    std::vector<std::string> formats{"json", "columns", "binary"};

    // lane_emden
    std::optional<double> nu;
    // kerr
    double m_geom = 1.0;
    double a_spin = 0.0;
    // sweep
    std::vector<double> sweep_u_O{1e-3, 5e-4, 2.5e-4};
    int threads = 0;              // 0: one per run
    // export
    std::string source;           // directory holding binary dumps

    EquationOfState eos() const;  // fails if gamma is missing
    StarParams params() const;
    SolverOptions solver_options() const;
};

RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::string& path);

// Canonical JSON of the full configuration (defaults filled in) and its FNV-1a hash.
std::string canonical_json(const RunConfig& c);
std::string config_hash(const RunConfig& c);

// Grid for refinement level L: n_in = 32 * 2^L + 1, n_ex = 24 * 2^L + 1.
void apply_grid_level(RunConfig& c, int level);

}  // namespace rotstar
