#pragma once

#include <cmath>

namespace rotstar {

// Value with first and second partial derivatives in (varpi, z), propagated
// through arithmetic by the chain rule. Index 1 is varpi, index 3 is z.
struct Jet {
    double v = 0.0, d1 = 0.0, d3 = 0.0, d11 = 0.0, d13 = 0.0, d33 = 0.0;

    static Jet constant(double c) { return {c, 0, 0, 0, 0, 0}; }
    static Jet varpi(double w) { return {w, 1, 0, 0, 0, 0}; }
    static Jet zcoord(double z) { return {z, 0, 1, 0, 0, 0}; }
};

// phi(a) given phi, phi', phi'' at a.v
inline Jet apply(const Jet& a, double f0, double f1, double f2) {
    return {f0,
            f1 * a.d1,
            f1 * a.d3,
            f2 * a.d1 * a.d1 + f1 * a.d11,
            f2 * a.d1 * a.d3 + f1 * a.d13,
            f2 * a.d3 * a.d3 + f1 * a.d33};
}

inline Jet operator+(const Jet& a, const Jet& b) {
    return {a.v + b.v, a.d1 + b.d1, a.d3 + b.d3, a.d11 + b.d11, a.d13 + b.d13, a.d33 + b.d33};
}
inline Jet operator-(const Jet& a, const Jet& b) {
    return {a.v - b.v, a.d1 - b.d1, a.d3 - b.d3, a.d11 - b.d11, a.d13 - b.d13, a.d33 - b.d33};
}
inline Jet operator-(const Jet& a) { return {-a.v, -a.d1, -a.d3, -a.d11, -a.d13, -a.d33}; }
inline Jet operator*(double c, const Jet& a) {
    return {c * a.v, c * a.d1, c * a.d3, c * a.d11, c * a.d13, c * a.d33};
}
inline Jet operator*(const Jet& a, double c) { return c * a; }
inline Jet operator+(const Jet& a, double c) { return {a.v + c, a.d1, a.d3, a.d11, a.d13, a.d33}; }
inline Jet operator+(double c, const Jet& a) { return a + c; }
inline Jet operator-(const Jet& a, double c) { return a + (-c); }
inline Jet operator-(double c, const Jet& a) { return (-a) + c; }
inline Jet operator*(const Jet& a, const Jet& b) {
    return {a.v * b.v,
            a.d1 * b.v + a.v * b.d1,
            a.d3 * b.v + a.v * b.d3,
            a.d11 * b.v + 2 * a.d1 * b.d1 + a.v * b.d11,
            a.d13 * b.v + a.d1 * b.d3 + a.d3 * b.d1 + a.v * b.d13,
            a.d33 * b.v + 2 * a.d3 * b.d3 + a.v * b.d33};
}
inline Jet inv(const Jet& a) {
    const double r = 1.0 / a.v;
    return apply(a, r, -r * r, 2 * r * r * r);
}
inline Jet operator/(const Jet& a, const Jet& b) { return a * inv(b); }
inline Jet operator/(const Jet& a, double c) { return (1.0 / c) * a; }
inline Jet exp(const Jet& a) {
    const double e = std::exp(a.v);
    return apply(a, e, e, e);
}
inline Jet log(const Jet& a) { return apply(a, std::log(a.v), 1.0 / a.v, -1.0 / (a.v * a.v)); }
inline Jet sq(const Jet& a) { return a * a; }

}  // namespace rotstar
