#pragma once

#include <vector>

#include "rotstar/fields.hpp"

namespace rotstar {

// Gauss-Legendre rule mapped to [0,1] (cached per order).
struct GaussRule {
    std::vector<double> x, w;
};
const GaussRule& gauss_rule(int points);

// Constant of the n-dimensional fundamental solution, 1/((n-2)|S^{n-1}|).
double newton_constant(int n);
// Area of the unit sphere S^{k}.
double sphere_area(int k);

// Axisymmetric reduction of C_n |x-x'|^{2-n} d^n x' to the meridian plane:
// returns the weight per d(varpi') d(z') for target radius w, source radius wp and
// axial separation dz, including the measure varpi'^{n-2}. Log-singular at coincidence.
double ring_kernel(int n, double w, double dz, double wp);
// Same quantity by brute-force azimuthal Gauss-Legendre quadrature (test oracle).
double ring_kernel_quadrature(int n, double w, double dz, double wp, int points = 400);

// Dense z-translation-invariant table for a uniform N x N quarter-plane patch with
// unit spacing: entry (i, i', d) couples target (i, 0) to the bilinear hat at (i', d).
struct ConvTable {
    int N = 0;
    int dim = 0;
    std::vector<double> t;  // (i*N + ip)*(2N-1) + d
    double operator()(int i, int ip, int d) const {
        return t[(static_cast<std::size_t>(i) * N + ip) * (2 * N - 1) + d];
    }
};
const ConvTable& conv_table(int N, int dim);

// Potential on the patch nodes of a source given on the same patch (spacing h, even in z).
std::vector<double> convolve(const ConvTable& T, const std::vector<double>& src, double h);

// Product-integration weights of a single off-grid target against all hats of a patch
// whose nodes are listed in `cols` (flattened i*N+j, j >= 0; both z-reflections included).
std::vector<double> direct_weights(int dim, int N, double h, Point target, const std::vector<int>& cols);

// Integral of the bilinear interpolant of src over R^n (axisymmetric, even in z).
double patch_mass(int dim, int N, double h, const std::vector<double>& src);

// K^(n) of a compactly supported source (zero on the outer patch beyond r = 2 R0).
AxiField k_n(const AxiField& g, int dim);
// Globalized operator: compact part on the inner patch, exterior part via the
// Kelvin image on the outer patch; returns a field of decay index `dim`.
AxiField k_n_global(const AxiField& g, int dim);

struct LopReport {
    int support_nodes = 0;
    double rcond = 0.0;
};
// Solves Lap_3 W + coef W + g = 0 with W(O) = 0. `coef` must vanish outside a compact set.
AxiField l_op(const AxiField& g, const AxiField& coef, LopReport* report = nullptr);

// Independent backend: sparse finite-difference solve of -Lap_n u = g on the inner patch,
// Dirichlet data on the far edges taken from `boundary` (inner-patch values).
std::vector<double> k_n_fd(const AxiField& g, int dim, const std::vector<double>& boundary);

}  // namespace rotstar
