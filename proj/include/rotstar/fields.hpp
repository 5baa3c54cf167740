#pragma once

#include <array>
#include <functional>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

namespace rotstar {

// Two uniform square patches of side 2*R0 in the meridian quarter plane:
// "inner" in physical coordinates (varpi, z), "outer" in Kelvin coordinates
// p* = (R0/|p|)^2 p. Both are even-reflected across varpi = 0 and z = 0.
struct AxiGrid {
    int n_in = 65;
    int n_ex = 65;
    double R0 = 1.0;

    double h_in() const { return 2.0 * R0 / (n_in - 1); }
    double h_ex() const { return 2.0 * R0 / (n_ex - 1); }
    double x_in(int i) const { return i * h_in(); }
    double x_ex(int i) const { return i * h_ex(); }
    std::size_t size_in() const { return static_cast<std::size_t>(n_in) * n_in; }
    std::size_t size_ex() const { return static_cast<std::size_t>(n_ex) * n_ex; }
    std::size_t id_in(int i, int j) const { return static_cast<std::size_t>(i) * n_in + j; }
    std::size_t id_ex(int i, int j) const { return static_cast<std::size_t>(i) * n_ex + j; }
    bool operator==(const AxiGrid& o) const { return n_in == o.n_in && n_ex == o.n_ex && R0 == o.R0; }
};

struct Point {
    double w = 0.0;  // cylindrical radius varpi
    double z = 0.0;
};

Point kelvin_point(Point p, double R0);

// Cutoff: 1 on [0,1], 0 on [2,inf), C^3 septic smoothstep in between.
double cutoff(double t);
double cutoff_derivative(double t);

// Axisymmetric field, even in z. `in` holds Q on inner nodes; `ex` holds
// (r/R0)^{index-2} (Q - offset) on outer nodes, the origin image holding the limit.
struct AxiField {
    AxiGrid grid;
    int index = 3;
    double offset = 0.0;
    int parity_w = 1;  // +1 even / -1 odd under varpi -> -varpi (derivative fields)
    int parity_z = 1;
    std::vector<double> in;
    std::vector<double> ex;

    AxiField() = default;
    AxiField(const AxiGrid& g, int idx, double off = 0.0)
        : grid(g), index(idx), offset(off), in(g.size_in(), 0.0), ex(g.size_ex(), 0.0) {}
};

using FieldFn = std::function<double(double w, double z)>;

// Samples f on both patches; the outer origin image is filled from `limit`
// when finite, otherwise by cubic extrapolation along the outer z* axis.
AxiField sample_field(const AxiGrid& g, int index, const FieldFn& f, double offset = 0.0,
                      double limit = std::numeric_limits<double>::quiet_NaN());

void fill_origin_image(AxiField& f);

// Physical location of an outer node; origin image returns r = inf.
Point outer_node_point(const AxiGrid& g, int i, int j);

enum class Interp { bilinear, bicubic };
double eval(const AxiField& f, Point p, Interp mode = Interp::bicubic);
// Interpolates a raw patch array (even/odd reflections from the parities).
double interp_patch(const std::vector<double>& a, int n, double h, double x, double y, int pw, int pz,
                    Interp mode = Interp::bicubic);

struct CutoffSplit {
    AxiField compact;
    AxiField exterior;
};
CutoffSplit split_cutoff(const AxiField& f);

// Physical first and second derivatives at every node of both patches.
struct PatchJet {
    std::vector<double> v, d1, d3, d11, d33, d13;
};
struct FieldJet {
    PatchJet in, ex;
};
FieldJet jet(const AxiField& f);

enum class Axis { w, z };
AxiField derivative(const AxiField& f, Axis axis, int order);

// Axisymmetric n-Laplacian d_ww + (dim-2)/w d_w + d_zz applied at all nodes (physical values).
struct NodeValues {
    std::vector<double> in, ex;
};
NodeValues laplacian(const AxiField& f, int dim);

// Weighted-norm surrogates on nodes; holder uses node pairs closer than `unit`.
struct NormReport {
    double sup_compact = 0.0;
    double sup_exterior = 0.0;
    double holder_compact = 0.0;
    double holder_exterior = 0.0;
    double deriv_compact = 0.0;
    double deriv_exterior = 0.0;
    double total = 0.0;
    bool sampled = true;  // discrete surrogate, may under-report the continuum sup
};
NormReport weighted_norms(const AxiField& f, int l, double alpha, double unit = 1.0);

// Pointwise combinations (grids and indices must match).
AxiField combine(const AxiField& a, const AxiField& b, double ca, double cb);

// Sup over inner nodes with r <= R0 and outer nodes with r* < R0 (each node's owner patch).
double sup_owned(const AxiField& f);

void write_binary(const AxiField& f, const std::string& path);
AxiField read_binary(const std::string& path);
void write_columns(const AxiField& f, std::ostream& os);

}  // namespace rotstar
