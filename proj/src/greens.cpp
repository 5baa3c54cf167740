#include "rotstar/greens.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseLU>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/legendre.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <tuple>

#include "rotstar/errors.hpp"

namespace rotstar {

const GaussRule& gauss_rule(int points) {
    static std::mutex mu;
    static std::map<int, GaussRule> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(points);
    if (it != cache.end()) return it->second;
    GaussRule r;
    const auto zeros = boost::math::legendre_p_zeros<double>(points);
    auto add = [&](double x) {
        const double dp = boost::math::legendre_p_prime(points, x);
        r.x.push_back(0.5 * (x + 1.0));
        r.w.push_back(1.0 / ((1.0 - x * x) * dp * dp));
    };
    for (double z : zeros) {
        add(z);
        if (z != 0.0) add(-z);
    }
    return cache.emplace(points, std::move(r)).first->second;
}

double sphere_area(int k) {
    const double half = 0.5 * (k + 1);
    return 2.0 * std::pow(M_PI, half) / boost::math::tgamma(half);
}

double newton_constant(int n) { return 1.0 / ((n - 2) * sphere_area(n - 1)); }

namespace {

// Complete elliptic integrals from the complementary modulus kc (accurate as k -> 1).
inline void ellint_ke(double kc, double k2, double& K, double& E) {
    double a = 1.0, b = kc, sum = 0.5 * k2, pow2 = 0.5;
    for (int it = 0; it < 40; ++it) {
        const double c = 0.5 * (a - b);
        const double an = 0.5 * (a + b);
        b = std::sqrt(a * b);
        a = an;
        pow2 *= 2.0;
        sum += pow2 * c * c;
        if (std::abs(c) < 1e-17 * a) break;
    }
    K = M_PI / (2.0 * a);
    E = K * (1.0 - sum);
}

inline double ellint_k(double kc) {
    double a = 1.0, b = kc;
    for (int it = 0; it < 40; ++it) {
        const double an = 0.5 * (a + b);
        b = std::sqrt(a * b);
        a = an;
        if (std::abs(a - b) < 1e-16 * a) break;
    }
    return M_PI / (2.0 * a);
}

// I5 series coefficients: alpha^{-3/2} sum_j a_j s^{2j}, s = beta/alpha.
const std::vector<double>& i5_series() {
    static const std::vector<double> a = [] {
        std::vector<double> out;
        double c = 1.0;   // (3/2)_k / k!
        double dfo = 1.0; // (2j-1)!!
        double dfe = 2.0; // (2j+2)!!
        for (int k = 0; k <= 40; ++k) {
            if (k > 0) c *= (1.5 + k - 1) / k;
            if (k % 2 == 0) {
                const int j = k / 2;
                if (j > 0) {
                    dfo *= 2 * j - 1;
                    dfe *= 2 * j + 2;
                }
                out.push_back(c * M_PI * dfo / dfe);
            }
        }
        return out;
    }();
    return a;
}

}  // namespace

double ring_kernel(int n, double w, double dz, double wp) {
    const double dz2 = dz * dz;
    const double dm = (w - wp) * (w - wp) + dz2;  // alpha - beta
    const double dp = (w + wp) * (w + wp) + dz2;  // alpha + beta
    const double beta = 2.0 * w * wp;
    switch (n) {
        case 3: {
            if (beta == 0.0) return wp / (2.0 * std::sqrt(dp));
            const double kc = std::sqrt(dm / dp);
            return wp * ellint_k(kc) / (M_PI * std::sqrt(dp));
        }
        case 4: {
            if (beta == 0.0) return wp * wp / (M_PI * dp);
            return wp * wp * std::log1p(2.0 * beta / dm) / (2.0 * M_PI * beta);
        }
        case 5: {
            const double alpha = 0.5 * (dm + dp);
            const double s = beta / alpha;
            double i5;
            if (s < 0.25) {
                const auto& a = i5_series();
                const double s2 = s * s;
                double acc = 0.0, p = 1.0;
                for (double c : a) {
                    const double t = c * p;
                    acc += t;
                    if (t < 1e-18 * acc) break;
                    p *= s2;
                }
                i5 = acc / (alpha * std::sqrt(alpha));
            } else {
                double K, E;
                ellint_ke(std::sqrt(dm / dp), 2.0 * beta / dp, K, E);
                const double sp = std::sqrt(dp);
                i5 = 4.0 / (beta * beta) * (alpha * K / sp - sp * E);
            }
            return wp * wp * wp * i5 / (2.0 * M_PI);
        }
        default:
            fail(Status::domain, "dimension must be 3, 4 or 5", "greens");
    }
}

double ring_kernel_quadrature(int n, double w, double dz, double wp, int points) {
    const auto& g = gauss_rule(points);
    const double alpha = w * w + wp * wp + dz * dz, beta = 2.0 * w * wp;
    double acc = 0.0;
    for (std::size_t q = 0; q < g.x.size(); ++q) {
        const double psi = M_PI * g.x[q];
        const double d2 = alpha - beta * std::cos(psi);
        acc += g.w[q] * M_PI * std::pow(std::sin(psi), n - 3) * std::pow(d2, -0.5 * (n - 2));
    }
    return newton_constant(n) * sphere_area(n - 3) * std::pow(wp, n - 2) * acc;
}

namespace {

// Moments of the kernel against the four bilinear basis functions on the cell
// [a, a+h] x [c, c+h]; m[2*bw + bz], bw/bz = 0 for the lower-coordinate node.
void cell_moments(int n, double tw, double tz, double a, double c, double h, double m[4]) {
    m[0] = m[1] = m[2] = m[3] = 0.0;
    const double eps = 1e-9 * h;
    const bool corner_w = std::abs(tw - a) < eps || std::abs(tw - a - h) < eps;
    const bool corner_z = std::abs(tz - c) < eps || std::abs(tz - c - h) < eps;
    auto add = [&](double pw, double pz, double wt) {
        const double k = ring_kernel(n, tw, pz - tz, pw) * wt;
        const double xw = (pw - a) / h, xz = (pz - c) / h;
        m[0] += k * (1 - xw) * (1 - xz);
        m[1] += k * (1 - xw) * xz;
        m[2] += k * xw * (1 - xz);
        m[3] += k * xw * xz;
    };
    if (corner_w && corner_z) {
        // Duffy split into two triangles with apex at the target, graded in sqrt(u).
        const double sw = std::abs(tw - a) < eps ? a : a + h;
        const double sz = std::abs(tz - c) < eps ? c : c + h;
        const double ow = sw == a ? a + h : a, oz = sz == c ? c + h : c;
        const double Av[2][2] = {{ow, sz}, {sw, oz}};  // the two adjacent corners
        const auto& gs = gauss_rule(8);
        const auto& gv = gauss_rule(12);
        const int levels = 16;
        for (int t = 0; t < 2; ++t) {
            const double ax = Av[t][0] - sw, ay = Av[t][1] - sz;
            const double cx = ow - Av[t][0], cy = oz - Av[t][1];
            const double jac = std::abs(ax * cy - ay * cx);
            for (int lv = 0; lv <= levels; ++lv) {
                const double lo = lv == levels ? 0.0 : std::ldexp(1.0, -lv - 1);
                const double hi = std::ldexp(1.0, -lv);
                for (std::size_t qs = 0; qs < gs.x.size(); ++qs) {
                    const double sig = lo + (hi - lo) * gs.x[qs];
                    const double u = sig * sig;
                    const double wu = gs.w[qs] * (hi - lo) * 2.0 * sig * u * jac;
                    for (std::size_t qv = 0; qv < gv.x.size(); ++qv) {
                        const double v = gv.x[qv];
                        add(sw + u * (ax + v * cx), sz + u * (ay + v * cy), wu * gv.w[qv]);
                    }
                }
            }
        }
        return;
    }
    auto dist = [&](double px, double pz) {
        const double dx = std::max({a - px, 0.0, px - a - h});
        const double dy = std::max({c - pz, 0.0, pz - c - h});
        return std::hypot(dx, dy);
    };
    const double D = std::min(dist(tw, tz), dist(-tw, tz)) / h;
    int p;
    if (D <= 1.5) p = 12;
    else if (D <= 3.0) p = 8;
    else if (D <= 6.0) p = 6;
    else if (D <= 12.0) p = 5;
    else if (D <= 30.0) p = 4;
    else p = 3;
    const auto& g = gauss_rule(p);
    for (std::size_t i = 0; i < g.x.size(); ++i)
        for (std::size_t j = 0; j < g.x.size(); ++j)
            add(a + h * g.x[i], c + h * g.x[j], g.w[i] * g.w[j] * h * h);
}

}  // namespace

const ConvTable& conv_table(int N, int dim) {
    static std::mutex mu;
    static std::map<std::pair<int, int>, std::unique_ptr<ConvTable>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto key = std::make_pair(N, dim);
    auto it = cache.find(key);
    if (it != cache.end()) return *it->second;
    auto T = std::make_unique<ConvTable>();
    T->N = N;
    T->dim = dim;
    const int D = 2 * N - 1;
    T->t.assign(static_cast<std::size_t>(N) * N * D, 0.0);
    double m[4];
    for (int i = 0; i < N; ++i)
        for (int cw = 0; cw < N - 1; ++cw)
            for (int cz = -1; cz <= 2 * N - 2; ++cz) {
                cell_moments(dim, i, 0.0, cw, cz, 1.0, m);
                for (int bw = 0; bw < 2; ++bw)
                    for (int bz = 0; bz < 2; ++bz) {
                        const int d = cz + bz;
                        if (d < 0 || d >= D) continue;
                        T->t[(static_cast<std::size_t>(i) * N + cw + bw) * D + d] += m[2 * bw + bz];
                    }
            }
    return *cache.emplace(key, std::move(T)).first->second;
}

std::vector<double> convolve(const ConvTable& T, const std::vector<double>& src, double h) {
    const int N = T.N, D = 2 * N - 1;
    std::vector<double> out(static_cast<std::size_t>(N) * N, 0.0);
    std::vector<double> ge(D);
    for (int ip = 0; ip < N; ++ip) {
        int lo = D, hi = -1;
        for (int jj = 0; jj < D; ++jj) {
            ge[jj] = src[static_cast<std::size_t>(ip) * N + std::abs(jj - (N - 1))];
            if (ge[jj] != 0.0) {
                lo = std::min(lo, jj);
                hi = std::max(hi, jj);
            }
        }
        if (hi < 0) continue;
        for (int i = 0; i < N; ++i) {
            const double* t = &T.t[(static_cast<std::size_t>(i) * N + ip) * D];
            double* o = &out[static_cast<std::size_t>(i) * N];
            for (int j = 0; j < N; ++j) {
                // index |j - jj + N - 1|
                double acc = 0.0;
                const int split = std::min(hi, j + N - 1);
                for (int jj = lo; jj <= split; ++jj) acc += t[j + N - 1 - jj] * ge[jj];
                for (int jj = std::max(lo, j + N); jj <= hi; ++jj) acc += t[jj - j - N + 1] * ge[jj];
                o[j] += acc;
            }
        }
    }
    const double h2 = h * h;
    for (double& v : out) v *= h2;
    return out;
}

std::vector<double> direct_weights(int dim, int N, double h, Point target, const std::vector<int>& cols) {
    std::vector<char> mask(static_cast<std::size_t>(N) * N, 0);
    for (int c : cols) mask[c] = 1;
    std::vector<double> acc(static_cast<std::size_t>(N) * N, 0.0);
    auto node = [&](int i, int j) { return static_cast<std::size_t>(i) * N + std::abs(j); };
    double m[4];
    for (int cw = 0; cw < N - 1; ++cw)
        for (int cz = -(N - 1); cz < N - 1; ++cz) {
            if (!mask[node(cw, cz)] && !mask[node(cw + 1, cz)] && !mask[node(cw, cz + 1)] &&
                !mask[node(cw + 1, cz + 1)])
                continue;
            cell_moments(dim, target.w, target.z, cw * h, cz * h, h, m);
            for (int bw = 0; bw < 2; ++bw)
                for (int bz = 0; bz < 2; ++bz) acc[node(cw + bw, cz + bz)] += m[2 * bw + bz];
        }
    std::vector<double> out(cols.size());
    for (std::size_t k = 0; k < cols.size(); ++k) out[k] = acc[cols[k]];
    return out;
}

double patch_mass(int dim, int N, double h, const std::vector<double>& src) {
    const auto& g = gauss_rule(4);
    std::vector<double> mw(N, 0.0);
    for (int c = 0; c < N - 1; ++c)
        for (std::size_t q = 0; q < g.x.size(); ++q) {
            const double x = (c + g.x[q]) * h;
            const double wq = g.w[q] * h * std::pow(x, dim - 2);
            mw[c] += wq * (1 - g.x[q]);
            mw[c + 1] += wq * g.x[q];
        }
    double acc = 0.0;
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) acc += src[static_cast<std::size_t>(i) * N + j] * mw[i] * (j == 0 ? h : 2 * h);
    return acc * sphere_area(dim - 2);
}

namespace {

constexpr double kSplitLo = 0.85, kSplitHi = 1.2;  // in units of R0

double split_weight(double r, double R0) {
    return cutoff(1.0 + (r / R0 - kSplitLo) / (kSplitHi - kSplitLo));
}

// q0 (R0/r)^p psi(r), psi a smooth cutoff to r <= R0/2, with its exact n-dimensional
// potential u(r) = [r^{2-n} int_0^r m s^{n-1} ds + int_r^inf m s ds]/(n-2).
class RadialModel {
public:
    RadialModel() = default;
    RadialModel(int n, int p, double q0, double R0) : n_(n), p_(p), q0_(q0), R0_(R0), on_(true) {
        if (p >= 2) fail(Status::domain, "non-integrable singularity at the Kelvin origin", "greens");
        outer_ = integrate(0.0, 0.5 * R0, 1);
        mass_ = sphere_area(n - 1) * integrate(0.0, 0.5 * R0, n - 1);
    }
    bool active() const { return on_; }
    double source(double r) const { return on_ ? q0_ * std::pow(R0_ / r, p_) * psi(r) : 0.0; }
    double mass() const { return on_ ? mass_ : 0.0; }
    double potential(double r) const {
        if (!on_) return 0.0;
        const double rc = std::min(r, 0.5 * R0_);
        const double inner = r > 0.0 ? std::pow(r, 2 - n_) * integrate(0.0, rc, n_ - 1) : 0.0;
        const double outer = outer_ - integrate(0.0, rc, 1);
        return (inner + outer) / (n_ - 2);
    }

private:
    double psi(double r) const { return cutoff(4.0 * r / R0_); }
    // int_a^b m(s) s^k ds
    double integrate(double a, double b, int k) const {
        if (b <= a) return 0.0;
        auto f = [&](double s) { return s > 0.0 ? source(s) * std::pow(s, k) : 0.0; };
        return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 12, 1e-13);
    }
    int n_ = 3, p_ = 0;
    double q0_ = 0.0, R0_ = 1.0, outer_ = 0.0, mass_ = 0.0;
    bool on_ = false;
};

struct CrossOp {
    std::vector<int> rows, cols;
    std::vector<double> w;  // rows x cols at R0 = 1
};

// in -> ex: outer nodes whose image leaves the inner square, sourced by inner nodes r <= 1.2 R0.
// ex -> in: inner nodes whose image leaves the outer square, sourced by outer nodes r* <= R0/0.85.
const CrossOp& cross_op(int n_in, int n_ex, int dim, bool to_outer) {
    static std::mutex mu;
    static std::map<std::tuple<int, int, int, bool>, std::unique_ptr<CrossOp>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto key = std::make_tuple(n_in, n_ex, dim, to_outer);
    auto it = cache.find(key);
    if (it != cache.end()) return *it->second;
    auto op = std::make_unique<CrossOp>();
    const AxiGrid g{n_in, n_ex, 1.0};
    const int Nt = to_outer ? n_ex : n_in, Ns = to_outer ? n_in : n_ex;
    const double ht = to_outer ? g.h_ex() : g.h_in(), hs = to_outer ? g.h_in() : g.h_ex();
    const double rsrc = to_outer ? kSplitHi : 1.0 / kSplitLo;
    for (int i = 0; i < Ns; ++i)
        for (int j = 0; j < Ns; ++j)
            if (std::hypot(i * hs, j * hs) <= rsrc + 1e-12) op->cols.push_back(i * Ns + j);
    std::vector<Point> targets;
    for (int i = 0; i < Nt; ++i)
        for (int j = 0; j < Nt; ++j) {
            if (i == 0 && j == 0) continue;
            const Point q = kelvin_point({i * ht, j * ht}, 1.0);
            if (q.w > 2.0 || q.z > 2.0) {
                op->rows.push_back(i * Nt + j);
                targets.push_back(q);
            }
        }
    op->w.reserve(op->rows.size() * op->cols.size());
    for (const Point& q : targets) {
        const auto row = direct_weights(dim, Ns, hs, q, op->cols);
        op->w.insert(op->w.end(), row.begin(), row.end());
    }
    return *cache.emplace(key, std::move(op)).first->second;
}

double apply_row(const CrossOp& op, std::size_t r, const std::vector<double>& src) {
    const double* w = &op.w[r * op.cols.size()];
    double acc = 0.0;
    for (std::size_t c = 0; c < op.cols.size(); ++c) acc += w[c] * src[op.cols[c]];
    return acc;
}

}  // namespace

AxiField k_n_global(const AxiField& g, int n) {
    if (n < 3 || n > 5) fail(Status::domain, "dimension must be 3, 4 or 5", "greens");
    if (g.offset != 0.0) fail(Status::domain, "source must decay at infinity", "greens");
    const AxiGrid& G = g.grid;
    const double R0 = G.R0;
    const int mg = g.index - 2;
    if (mg <= n) {
        for (double v : g.ex)
            if (v != 0.0) fail(Status::domain, "source decays too slowly for a decaying potential", "greens");
    }

    std::vector<double> src_in(G.size_in()), src_ex(G.size_ex(), 0.0);
    for (int i = 0; i < G.n_in; ++i)
        for (int j = 0; j < G.n_in; ++j) {
            const auto k = G.id_in(i, j);
            src_in[k] = split_weight(std::hypot(G.x_in(i), G.x_in(j)), R0) * g.in[k];
        }
    for (int i = 0; i < G.n_ex; ++i)
        for (int j = 0; j < G.n_ex; ++j) {
            const auto k = G.id_ex(i, j);
            if (k == 0) continue;
            const double r = R0 * R0 / std::hypot(G.x_ex(i), G.x_ex(j));
            src_ex[k] = std::pow(r / R0, n + 2 - mg) * (1.0 - split_weight(r, R0)) * g.ex[k];
        }
    // Weaker decay (n < mg < n+2) leaves an integrable r*^{-p} singularity at the origin
    // image. Its leading radial part is subtracted and its potential added back exactly.
    const int p_sing = n + 2 - mg;
    RadialModel model;
    if (p_sing > 0 && g.ex[0] != 0.0) {
        model = RadialModel(n, p_sing, g.ex[0], R0);
        for (int i = 0; i < G.n_ex; ++i)
            for (int j = 0; j < G.n_ex; ++j) {
                const auto k = G.id_ex(i, j);
                if (k != 0) src_ex[k] -= model.source(std::hypot(G.x_ex(i), G.x_ex(j)));
            }
    }
    src_ex[0] = p_sing == 0 ? g.ex[0] : 0.0;

    const auto f_in = convolve(conv_table(G.n_in, n), src_in, G.h_in());
    auto f_out = convolve(conv_table(G.n_ex, n), src_ex, G.h_ex());
    if (model.active())
        for (int i = 0; i < G.n_ex; ++i)
            for (int j = 0; j < G.n_ex; ++j) f_out[G.id_ex(i, j)] += model.potential(std::hypot(G.x_ex(i), G.x_ex(j)));
    const double Cn = newton_constant(n);
    const double R2 = R0 * R0;

    AxiField out(G, n, 0.0);
    out.in = f_in;
    out.ex = f_out;

    // inner contribution on the outer patch
    {
        const auto& op = cross_op(G.n_in, G.n_ex, n, true);
        std::vector<double> direct(G.size_ex(), NAN);
        for (std::size_t r = 0; r < op.rows.size(); ++r) direct[op.rows[r]] = R2 * apply_row(op, r, src_in);
        for (int i = 0; i < G.n_ex; ++i)
            for (int j = 0; j < G.n_ex; ++j) {
                const auto k = G.id_ex(i, j);
                if (k == 0) {
                    out.ex[0] += Cn * std::pow(R0, 2 - n) * patch_mass(n, G.n_in, G.h_in(), src_in);
                    continue;
                }
                const Point p = outer_node_point(G, i, j);
                const double v = std::isnan(direct[k])
                                     ? interp_patch(f_in, G.n_in, G.h_in(), p.w, p.z, 1, 1)
                                     : direct[k];
                out.ex[k] += std::pow(std::hypot(p.w, p.z) / R0, n - 2) * v;
            }
    }
    // outer contribution on the inner patch
    {
        const auto& op = cross_op(G.n_in, G.n_ex, n, false);
        std::vector<double> direct(G.size_in(), NAN);
        for (std::size_t r = 0; r < op.rows.size(); ++r) {
            direct[op.rows[r]] = R2 * apply_row(op, r, src_ex);
            if (model.active()) {
                const int i = op.rows[r] / G.n_in, j = op.rows[r] % G.n_in;
                direct[op.rows[r]] += model.potential(R0 * R0 / std::hypot(G.x_in(i), G.x_in(j)));
            }
        }
        for (int i = 0; i < G.n_in; ++i)
            for (int j = 0; j < G.n_in; ++j) {
                const auto k = G.id_in(i, j);
                if (k == 0) {
                    out.in[0] += Cn * std::pow(R0, 2 - n) * (patch_mass(n, G.n_ex, G.h_ex(), src_ex) + model.mass());
                    continue;
                }
                const Point ps = kelvin_point({G.x_in(i), G.x_in(j)}, R0);
                const double v = std::isnan(direct[k])
                                     ? interp_patch(f_out, G.n_ex, G.h_ex(), ps.w, ps.z, 1, 1)
                                     : direct[k];
                out.in[k] += std::pow(std::hypot(ps.w, ps.z) / R0, n - 2) * v;
            }
    }
    return out;
}

AxiField k_n(const AxiField& g, int n) {
    const AxiGrid& G = g.grid;
    for (int i = 0; i < G.n_ex; ++i)
        for (int j = 0; j < G.n_ex; ++j)
            if (std::hypot(G.x_ex(i), G.x_ex(j)) < 0.5 * G.R0 && g.ex[G.id_ex(i, j)] != 0.0)
                fail(Status::domain, "source is not compactly supported in r <= 2 R0", "greens");
    return k_n_global(g, n);
}

AxiField l_op(const AxiField& g, const AxiField& coef, LopReport* report) {
    const AxiGrid& G = coef.grid;
    if (!(G == g.grid)) fail(Status::domain, "grid mismatch", "greens");
    const int N = G.n_in;
    const double h = G.h_in();
    std::vector<int> S;
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) {
            const auto k = G.id_in(i, j);
            if (coef.in[k] == 0.0) continue;
            if (std::hypot(G.x_in(i), G.x_in(j)) >= kSplitLo * G.R0)
                fail(Status::domain, "zeroth-order coefficient must be compactly supported", "greens");
            S.push_back(static_cast<int>(k));
        }
    const AxiField D = k_n_global(g, 3);
    AxiField cw(G, 7, 0.0);
    if (!S.empty()) {
        const auto& T = conv_table(N, 3);
        const int m = static_cast<int>(S.size());
        Eigen::MatrixXd M(m, m);
        Eigen::VectorXd rhs(m);
        const double h2 = h * h;
        for (int a = 0; a < m; ++a) {
            const int i = S[a] / N, j = S[a] % N;
            rhs[a] = D.in[S[a]] - D.in[0];
            for (int b = 0; b < m; ++b) {
                const int ip = S[b] / N, jp = S[b] % N;
                double tij = T(i, ip, std::abs(j - jp)) - T(0, ip, jp);
                if (jp > 0) tij += T(i, ip, j + jp) - T(0, ip, jp);
                M(a, b) = (a == b ? 1.0 : 0.0) - h2 * tij * coef.in[S[b]];
            }
        }
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(M);
        const double rc = lu.rcond();
        if (report) report->rcond = rc;
        if (!(rc > 1e-13)) {
            Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
            fail(Status::solver,
                 "Nystrom matrix is singular; smallest singular value " +
                     std::to_string(svd.singularValues()(m - 1)),
                 "l_op");
        }
        const Eigen::VectorXd W = lu.solve(rhs);
        for (int a = 0; a < m; ++a) cw.in[S[a]] = coef.in[S[a]] * W[a];
    }
    if (report) report->support_nodes = static_cast<int>(S.size());
    AxiField out = combine(k_n_global(cw, 3), D, 1.0, 1.0);
    const double v0 = out.in[0];
    for (double& v : out.in) v -= v0;
    out.offset = -v0;
    return out;
}

std::vector<double> k_n_fd(const AxiField& g, int dim, const std::vector<double>& boundary) {
    const AxiGrid& G = g.grid;
    const int N = G.n_in;
    const double h = G.h_in(), h2 = h * h;
    const int M = N - 1;  // unknowns i, j in [0, N-2]
    auto id = [&](int i, int j) { return i * M + j; };
    std::vector<Eigen::Triplet<double>> trip;
    Eigen::VectorXd rhs(M * M);
    for (int i = 0; i < M; ++i)
        for (int j = 0; j < M; ++j) {
            const int row = id(i, j);
            double b = g.in[G.id_in(i, j)];
            auto put = [&](int ii, int jj, double c) {
                if (ii == N - 1 || jj == N - 1)
                    b -= c * boundary[G.id_in(ii, jj)];
                else
                    trip.emplace_back(row, id(ii, jj), c);
            };
            // -(d_ww + (dim-2)/w d_w + d_zz) with even ghosts at the axes
            double cw_minus, cw_plus, cdiag;
            if (i == 0) {
                cw_plus = -2.0 * (dim - 1) / h2;
                cw_minus = 0.0;
                cdiag = 2.0 * (dim - 1) / h2;
            } else {
                const double w = i * h;
                cw_plus = -(1.0 / h2 + (dim - 2) / (2.0 * h * w));
                cw_minus = -(1.0 / h2 - (dim - 2) / (2.0 * h * w));
                cdiag = 2.0 / h2;
            }
            double cz_plus = -1.0 / h2, cz_minus = -1.0 / h2;
            cdiag += 2.0 / h2;
            if (j == 0) {
                cz_plus = -2.0 / h2;
                cz_minus = 0.0;
            }
            trip.emplace_back(row, row, cdiag);
            put(i + 1, j, cw_plus);
            if (i > 0) put(i - 1, j, cw_minus);
            put(i, j + 1, cz_plus);
            if (j > 0) put(i, j - 1, cz_minus);
            rhs[row] = b;
        }
    Eigen::SparseMatrix<double> A(M * M, M * M);
    A.setFromTriplets(trip.begin(), trip.end());
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(A);
    if (lu.info() != Eigen::Success) fail(Status::solver, "finite-difference factorization failed", "greens");
    const Eigen::VectorXd u = lu.solve(rhs);
    std::vector<double> out(G.size_in());
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j)
            out[G.id_in(i, j)] = (i == N - 1 || j == N - 1) ? boundary[G.id_in(i, j)] : u[id(i, j)];
    return out;
}

}  // namespace rotstar
