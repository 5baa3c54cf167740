#include "rotstar/fields.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <ostream>

#include "rotstar/errors.hpp"

namespace rotstar {

Point kelvin_point(Point p, double R0) {
    const double r2 = p.w * p.w + p.z * p.z;
    if (r2 == 0.0) fail(Status::domain, "Kelvin map undefined at the origin", "fields");
    const double s = R0 * R0 / r2;
    return {p.w * s, p.z * s};
}

double cutoff(double t) {
    if (t <= 1.0) return 1.0;
    if (t >= 2.0) return 0.0;
    const double x = t - 1.0;
    const double x4 = x * x * x * x;
    return 1.0 - x4 * (35.0 - 84.0 * x + 70.0 * x * x - 20.0 * x * x * x);
}

double cutoff_derivative(double t) {
    if (t <= 1.0 || t >= 2.0) return 0.0;
    const double x = t - 1.0;
    const double x3 = x * x * x;
    return -140.0 * x3 * (1.0 - x) * (1.0 - x) * (1.0 - x);
}

Point outer_node_point(const AxiGrid& g, int i, int j) {
    if (i == 0 && j == 0) return {INFINITY, INFINITY};
    return kelvin_point({g.x_ex(i), g.x_ex(j)}, g.R0);
}

void fill_origin_image(AxiField& f) {
    const auto& g = f.grid;
    // q* has no linear term in r* for z-even data, so extrapolate along z*.
    f.ex[0] = 4.0 * f.ex[g.id_ex(0, 1)] - 6.0 * f.ex[g.id_ex(0, 2)] + 4.0 * f.ex[g.id_ex(0, 3)] -
              f.ex[g.id_ex(0, 4)];
}

AxiField sample_field(const AxiGrid& g, int index, const FieldFn& fn, double offset, double limit) {
    AxiField f(g, index, offset);
    for (int i = 0; i < g.n_in; ++i)
        for (int j = 0; j < g.n_in; ++j) f.in[g.id_in(i, j)] = fn(g.x_in(i), g.x_in(j));
    const int m = index - 2;
    for (int i = 0; i < g.n_ex; ++i)
        for (int j = 0; j < g.n_ex; ++j) {
            if (i == 0 && j == 0) continue;
            const Point p = outer_node_point(g, i, j);
            const double r = std::hypot(p.w, p.z);
            f.ex[g.id_ex(i, j)] = std::pow(r / g.R0, m) * (fn(p.w, p.z) - offset);
        }
    if (std::isfinite(limit))
        f.ex[0] = limit;
    else
        fill_origin_image(f);
    return f;
}

namespace {

inline double at(const std::vector<double>& a, int n, int i, int j, int pw, int pz) {
    double s = 1.0;
    if (i < 0) { i = -i; s *= pw; }
    if (j < 0) { j = -j; s *= pz; }
    return s * a[static_cast<std::size_t>(i) * n + j];
}

// Four-point Lagrange stencil start and weights for coordinate x (in cells).
inline int stencil(double x, int n, double w[4]) {
    int s = static_cast<int>(std::floor(x)) - 1;
    s = std::min(s, n - 4);
    const double t = x - s;
    w[0] = -(t - 1) * (t - 2) * (t - 3) / 6.0;
    w[1] = t * (t - 2) * (t - 3) / 2.0;
    w[2] = -t * (t - 1) * (t - 3) / 2.0;
    w[3] = t * (t - 1) * (t - 2) / 6.0;
    return s;
}

}  // namespace

double interp_patch(const std::vector<double>& a, int n, double h, double x, double y, int pw, int pz,
                    Interp mode) {
    const double sx = x / h, sy = y / h;
    if (mode == Interp::bilinear) {
        int i = std::min(static_cast<int>(std::floor(sx)), n - 2);
        int j = std::min(static_cast<int>(std::floor(sy)), n - 2);
        const double tx = sx - i, ty = sy - j;
        return (1 - tx) * (1 - ty) * at(a, n, i, j, pw, pz) + tx * (1 - ty) * at(a, n, i + 1, j, pw, pz) +
               (1 - tx) * ty * at(a, n, i, j + 1, pw, pz) + tx * ty * at(a, n, i + 1, j + 1, pw, pz);
    }
    double wx[4], wy[4];
    const int i0 = stencil(sx, n, wx), j0 = stencil(sy, n, wy);
    double acc = 0.0;
    for (int a_ = 0; a_ < 4; ++a_) {
        double row = 0.0;
        for (int b = 0; b < 4; ++b) row += wy[b] * at(a, n, i0 + a_, j0 + b, pw, pz);
        acc += wx[a_] * row;
    }
    return acc;
}

double eval(const AxiField& f, Point p, Interp mode) {
    const auto& g = f.grid;
    double sign = 1.0;
    if (p.z < 0) { p.z = -p.z; sign *= f.parity_z; }
    if (p.w < 0) { p.w = -p.w; sign *= f.parity_w; }
    const double r = std::hypot(p.w, p.z);
    if (r <= g.R0) return sign * interp_patch(f.in, g.n_in, g.h_in(), p.w, p.z, f.parity_w, f.parity_z, mode);
    const Point ps = kelvin_point(p, g.R0);
    const double q = interp_patch(f.ex, g.n_ex, g.h_ex(), ps.w, ps.z, f.parity_w, f.parity_z, mode);
    return sign * (f.offset + std::pow(g.R0 / r, f.index - 2) * q);
}

CutoffSplit split_cutoff(const AxiField& f) {
    const auto& g = f.grid;
    CutoffSplit out{AxiField(g, f.index, 0.0), AxiField(g, f.index, f.offset)};
    out.compact.parity_w = out.exterior.parity_w = f.parity_w;
    out.compact.parity_z = out.exterior.parity_z = f.parity_z;
    for (int i = 0; i < g.n_in; ++i)
        for (int j = 0; j < g.n_in; ++j) {
            const auto k = g.id_in(i, j);
            const double c = cutoff(std::hypot(g.x_in(i), g.x_in(j)) / g.R0);
            out.compact.in[k] = c * f.in[k];
            out.exterior.in[k] = f.in[k] - out.compact.in[k];
        }
    const int m = f.index - 2;
    for (int i = 0; i < g.n_ex; ++i)
        for (int j = 0; j < g.n_ex; ++j) {
            const auto k = g.id_ex(i, j);
            if (k == 0) {
                out.exterior.ex[0] = f.ex[0];
                continue;
            }
            const Point p = outer_node_point(g, i, j);
            const double r = std::hypot(p.w, p.z), s = std::pow(r / g.R0, m);
            const double c = cutoff(r / g.R0);
            const double q = f.offset + f.ex[k] / s;  // physical value
            out.compact.ex[k] = s * c * q;
            out.exterior.ex[k] = f.ex[k] - out.compact.ex[k];
        }
    return out;
}

namespace {

// 1D second-order derivatives along one index of a patch array.
// dir = 0 differentiates along i (varpi), dir = 1 along j (z).
std::vector<double> diff(const std::vector<double>& a, int n, double h, int dir, int order, int pw, int pz) {
    std::vector<double> out(a.size());
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const int k = dir == 0 ? i : j;
            auto v = [&](int d) { return dir == 0 ? at(a, n, i + d, j, pw, pz) : at(a, n, i, j + d, pw, pz); };
            double r;
            if (k <= n - 2) {
                r = order == 1 ? (v(1) - v(-1)) / (2 * h) : (v(1) - 2 * v(0) + v(-1)) / (h * h);
            } else {
                r = order == 1 ? (3 * v(0) - 4 * v(-1) + v(-2)) / (2 * h)
                               : (2 * v(0) - 5 * v(-1) + 4 * v(-2) - v(-3)) / (h * h);
            }
            out[static_cast<std::size_t>(i) * n + j] = r;
        }
    return out;
}

PatchJet patch_jet(const std::vector<double>& a, int n, double h, int pw, int pz) {
    PatchJet J;
    J.v = a;
    J.d1 = diff(a, n, h, 0, 1, pw, pz);
    J.d3 = diff(a, n, h, 1, 1, pw, pz);
    J.d11 = diff(a, n, h, 0, 2, pw, pz);
    J.d33 = diff(a, n, h, 1, 2, pw, pz);
    J.d13 = diff(J.d3, n, h, 0, 1, pw, -pz);
    return J;
}

}  // namespace

FieldJet jet(const AxiField& f) {
    const auto& g = f.grid;
    FieldJet out;
    out.in = patch_jet(f.in, g.n_in, g.h_in(), f.parity_w, f.parity_z);
    const PatchJet q = patch_jet(f.ex, g.n_ex, g.h_ex(), f.parity_w, f.parity_z);
    const std::size_t ne = g.size_ex();
    auto& E = out.ex;
    E.v.assign(ne, f.offset);
    E.d1.assign(ne, 0.0);
    E.d3.assign(ne, 0.0);
    E.d11.assign(ne, 0.0);
    E.d33.assign(ne, 0.0);
    E.d13.assign(ne, 0.0);
    const int m = f.index - 2;
    const double R0 = g.R0, R2 = R0 * R0;
    for (int i = 0; i < g.n_ex; ++i)
        for (int j = 0; j < g.n_ex; ++j) {
            const auto k = g.id_ex(i, j);
            if (k == 0) continue;  // infinity: value = offset, derivatives vanish
            const double ps[2] = {g.x_ex(i), g.x_ex(j)};
            const double rs2 = ps[0] * ps[0] + ps[1] * ps[1];
            // Q(p*) = offset + s q with s = (r*/R0)^m
            const double s = std::pow(std::sqrt(rs2) / R0, m);
            const double sk[2] = {m * s * ps[0] / rs2, m * s * ps[1] / rs2};
            double skl[2][2];
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b)
                    skl[a][b] = m * s * ((a == b ? 1.0 : 0.0) / rs2 + (m - 2) * ps[a] * ps[b] / (rs2 * rs2));
            const double qv = q.v[k], qk[2] = {q.d1[k], q.d3[k]};
            const double qkl[2][2] = {{q.d11[k], q.d13[k]}, {q.d13[k], q.d33[k]}};
            double Qk[2], Qkl[2][2];
            for (int a = 0; a < 2; ++a) Qk[a] = sk[a] * qv + s * qk[a];
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b)
                    Qkl[a][b] = skl[a][b] * qv + sk[a] * qk[b] + sk[b] * qk[a] + s * qkl[a][b];
            // chain rule through p* = R0^2 p / r^2
            const double p[2] = {ps[0] * R2 / rs2, ps[1] * R2 / rs2};
            const double r2 = p[0] * p[0] + p[1] * p[1], r4 = r2 * r2, r6 = r4 * r2;
            double Jm[2][2];
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b) Jm[a][b] = R2 * ((a == b ? 1.0 : 0.0) / r2 - 2 * p[a] * p[b] / r4);
            auto H = [&](int kk, int ii, int jj) {
                const double dki = kk == ii, dkj = kk == jj, dij = ii == jj;
                return R2 * (-2 * (dki * p[jj] + dkj * p[ii] + dij * p[kk]) / r4 + 8 * p[kk] * p[ii] * p[jj] / r6);
            };
            double Qi[2], Qij[2][2];
            for (int a = 0; a < 2; ++a) Qi[a] = Qk[0] * Jm[0][a] + Qk[1] * Jm[1][a];
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b) {
                    double acc = 0.0;
                    for (int kk = 0; kk < 2; ++kk) {
                        for (int ll = 0; ll < 2; ++ll) acc += Qkl[kk][ll] * Jm[kk][a] * Jm[ll][b];
                        acc += Qk[kk] * H(kk, a, b);
                    }
                    Qij[a][b] = acc;
                }
            E.v[k] = f.offset + s * qv;
            E.d1[k] = Qi[0];
            E.d3[k] = Qi[1];
            E.d11[k] = Qij[0][0];
            E.d33[k] = Qij[1][1];
            E.d13[k] = Qij[0][1];
        }
    return out;
}

AxiField derivative(const AxiField& f, Axis axis, int order) {
    if (order != 1 && order != 2) fail(Status::domain, "derivative order must be 1 or 2", "fields");
    const FieldJet J = jet(f);
    const auto& g = f.grid;
    AxiField out(g, f.index + order, 0.0);
    out.parity_w = f.parity_w * (axis == Axis::w && order == 1 ? -1 : 1);
    out.parity_z = f.parity_z * (axis == Axis::z && order == 1 ? -1 : 1);
    auto pick = [&](const PatchJet& P) -> const std::vector<double>& {
        if (axis == Axis::w) return order == 1 ? P.d1 : P.d11;
        return order == 1 ? P.d3 : P.d33;
    };
    out.in = pick(J.in);
    const auto& e = pick(J.ex);
    const int m = out.index - 2;
    for (int i = 0; i < g.n_ex; ++i)
        for (int j = 0; j < g.n_ex; ++j) {
            const auto k = g.id_ex(i, j);
            if (k == 0) continue;
            const Point p = outer_node_point(g, i, j);
            out.ex[k] = std::pow(std::hypot(p.w, p.z) / g.R0, m) * e[k];
        }
    fill_origin_image(out);
    return out;
}

NodeValues laplacian(const AxiField& f, int dim) {
    const FieldJet J = jet(f);
    const auto& g = f.grid;
    NodeValues out;
    out.in.resize(g.size_in());
    for (int i = 0; i < g.n_in; ++i)
        for (int j = 0; j < g.n_in; ++j) {
            const auto k = g.id_in(i, j);
            const double radial = i == 0 ? J.in.d11[k] : J.in.d1[k] / g.x_in(i);
            out.in[k] = J.in.d11[k] + (dim - 2) * radial + J.in.d33[k];
        }
    out.ex.assign(g.size_ex(), 0.0);
    for (int i = 0; i < g.n_ex; ++i)
        for (int j = 0; j < g.n_ex; ++j) {
            const auto k = g.id_ex(i, j);
            if (k == 0) continue;
            const Point p = outer_node_point(g, i, j);
            const double radial = i == 0 ? J.ex.d11[k] : J.ex.d1[k] / p.w;
            out.ex[k] = J.ex.d11[k] + (dim - 2) * radial + J.ex.d33[k];
        }
    return out;
}

NormReport weighted_norms(const AxiField& f, int l, double alpha, double unit) {
    if (!(alpha > 0.0 && alpha < 1.0)) fail(Status::domain, "Holder exponent must lie in (0,1)", "fields");
    const auto& g = f.grid;
    NormReport rep;
    const CutoffSplit sp = split_cutoff(f);
    // Exterior part measured on the decaying remainder Q - offset.
    auto holder = [&](const std::vector<double>& a, int n, double h) {
        const int win = std::max(1, std::min(6, static_cast<int>(unit / h)));
        double best = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int di = 0; di <= win; ++di)
                    for (int dj = -win; dj <= win; ++dj) {
                        if (di == 0 && dj <= 0) continue;
                        const int i2 = i + di, j2 = j + dj;
                        if (i2 >= n || j2 < 0 || j2 >= n) continue;
                        const double d = h * std::hypot(di, dj);
                        if (d > unit) continue;
                        const double diffv = std::abs(a[static_cast<std::size_t>(i) * n + j] -
                                                      a[static_cast<std::size_t>(i2) * n + j2]);
                        best = std::max(best, diffv / std::pow(d, alpha));
                    }
        return best;
    };
    for (double v : sp.compact.in) rep.sup_compact = std::max(rep.sup_compact, std::abs(v));
    for (double v : sp.exterior.ex) rep.sup_exterior = std::max(rep.sup_exterior, std::abs(v));
    rep.holder_compact = holder(sp.compact.in, g.n_in, g.h_in());
    rep.holder_exterior = holder(sp.exterior.ex, g.n_ex, g.h_ex());
    double a0 = rep.sup_compact + rep.holder_compact, ainf = rep.sup_exterior + rep.holder_exterior;
    if (l >= 1) {
        const PatchJet jc = patch_jet(sp.compact.in, g.n_in, g.h_in(), f.parity_w, f.parity_z);
        const PatchJet je = patch_jet(sp.exterior.ex, g.n_ex, g.h_ex(), f.parity_w, f.parity_z);
        for (std::size_t k = 0; k < jc.d1.size(); ++k)
            rep.deriv_compact = std::max(rep.deriv_compact, std::hypot(jc.d1[k], jc.d3[k]));
        for (std::size_t k = 0; k < je.d1.size(); ++k)
            rep.deriv_exterior = std::max(rep.deriv_exterior, std::hypot(je.d1[k], je.d3[k]));
        a0 += rep.deriv_compact;
        ainf += rep.deriv_exterior;
    }
    rep.total = std::max(a0, ainf);
    return rep;
}

AxiField combine(const AxiField& a, const AxiField& b, double ca, double cb) {
    if (!(a.grid == b.grid)) fail(Status::domain, "grid mismatch", "fields");
    if (a.index != b.index) fail(Status::domain, "decay index mismatch", "fields");
    AxiField out(a.grid, a.index, ca * a.offset + cb * b.offset);
    out.parity_w = a.parity_w;
    out.parity_z = a.parity_z;
    for (std::size_t k = 0; k < out.in.size(); ++k) out.in[k] = ca * a.in[k] + cb * b.in[k];
    for (std::size_t k = 0; k < out.ex.size(); ++k) out.ex[k] = ca * a.ex[k] + cb * b.ex[k];
    return out;
}

double sup_owned(const AxiField& f) {
    const auto& g = f.grid;
    double s = 0.0;
    for (int i = 0; i < g.n_in; ++i)
        for (int j = 0; j < g.n_in; ++j)
            if (std::hypot(g.x_in(i), g.x_in(j)) <= g.R0) s = std::max(s, std::abs(f.in[g.id_in(i, j)]));
    for (int i = 0; i < g.n_ex; ++i)
        for (int j = 0; j < g.n_ex; ++j) {
            const double rs = std::hypot(g.x_ex(i), g.x_ex(j));
            if (rs >= g.R0) continue;
            const double val = rs == 0.0 ? f.offset
                                         : f.offset + std::pow(rs / g.R0, f.index - 2) * f.ex[g.id_ex(i, j)];
            s = std::max(s, std::abs(val));
        }
    return s;
}

namespace {
constexpr char kMagic[4] = {'R', 'S', 'A', 'F'};
constexpr std::uint32_t kEndian = 0x01020304u;
constexpr std::int32_t kVersion = 1;
}  // namespace

void write_binary(const AxiField& f, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) fail(Status::io, "cannot open " + path, "fields");
    os.write(kMagic, 4);
    os.write(reinterpret_cast<const char*>(&kEndian), 4);
    const std::int32_t hdr[6] = {kVersion, f.grid.n_in, f.grid.n_ex, f.index, f.parity_w, f.parity_z};
    os.write(reinterpret_cast<const char*>(hdr), sizeof hdr);
    const double dh[2] = {f.grid.R0, f.offset};
    os.write(reinterpret_cast<const char*>(dh), sizeof dh);
    os.write(reinterpret_cast<const char*>(f.in.data()), static_cast<std::streamsize>(f.in.size() * 8));
    os.write(reinterpret_cast<const char*>(f.ex.data()), static_cast<std::streamsize>(f.ex.size() * 8));
    if (!os) fail(Status::io, "write failed for " + path, "fields");
}

AxiField read_binary(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) fail(Status::io, "cannot open " + path, "fields");
    char magic[4];
    std::uint32_t tag = 0;
    std::int32_t hdr[6];
    double dh[2];
    is.read(magic, 4);
    is.read(reinterpret_cast<char*>(&tag), 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0) fail(Status::io, "not a field dump: " + path, "fields");
    if (tag != kEndian) fail(Status::io, "endianness mismatch in " + path, "fields");
    is.read(reinterpret_cast<char*>(hdr), sizeof hdr);
    is.read(reinterpret_cast<char*>(dh), sizeof dh);
    if (!is || hdr[0] != kVersion || hdr[1] < 5 || hdr[2] < 5) fail(Status::io, "bad header in " + path, "fields");
    AxiGrid g{hdr[1], hdr[2], dh[0]};
    AxiField f(g, hdr[3], dh[1]);
    f.parity_w = hdr[4];
    f.parity_z = hdr[5];
    is.read(reinterpret_cast<char*>(f.in.data()), static_cast<std::streamsize>(f.in.size() * 8));
    is.read(reinterpret_cast<char*>(f.ex.data()), static_cast<std::streamsize>(f.ex.size() * 8));
    if (!is) fail(Status::io, "truncated payload in " + path, "fields");
    return f;
}

void write_columns(const AxiField& f, std::ostream& os) {
    const auto& g = f.grid;
    os << "# patch varpi z value\n";
    os.precision(17);
    for (int i = 0; i < g.n_in; ++i)
        for (int j = 0; j < g.n_in; ++j) os << "0 " << g.x_in(i) << ' ' << g.x_in(j) << ' ' << f.in[g.id_in(i, j)] << '\n';
    for (int i = 0; i < g.n_ex; ++i)
        for (int j = 0; j < g.n_ex; ++j) {
            if (i == 0 && j == 0) continue;
            const Point p = outer_node_point(g, i, j);
            const double r = std::hypot(p.w, p.z);
            os << "1 " << p.w << ' ' << p.z << ' '
               << f.offset + std::pow(g.R0 / r, f.index - 2) * f.ex[g.id_ex(i, j)] << '\n';
        }
}

}  // namespace rotstar
