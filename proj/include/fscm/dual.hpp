#pragma once

#include <cmath>

#include "fscm/types.hpp"

namespace fscm {

/// First-order dual number over (r, z): carries a value and its gradient.
/// Closed-form singular fields are written once in Dual2 arithmetic, which
/// yields machine-accurate analytic gradients.
struct Dual2 {
    double v = 0, dr = 0, dz = 0;

    static Dual2 var_r(double r) { return {r, 1, 0}; }
    static Dual2 var_z(double z) { return {z, 0, 1}; }
    static Dual2 constant(double c) { return {c, 0, 0}; }
    Jet jet() const { return {v, dr, dz}; }
};

inline Dual2 operator+(Dual2 a, Dual2 b) { return {a.v + b.v, a.dr + b.dr, a.dz + b.dz}; }
inline Dual2 operator-(Dual2 a, Dual2 b) { return {a.v - b.v, a.dr - b.dr, a.dz - b.dz}; }
inline Dual2 operator-(Dual2 a) { return {-a.v, -a.dr, -a.dz}; }
inline Dual2 operator*(Dual2 a, Dual2 b) {
    return {a.v * b.v, a.dr * b.v + a.v * b.dr, a.dz * b.v + a.v * b.dz};
}
inline Dual2 operator/(Dual2 a, Dual2 b) {
    const double inv = 1.0 / b.v;
    const double q = a.v * inv;
    return {q, (a.dr - q * b.dr) * inv, (a.dz - q * b.dz) * inv};
}
inline Dual2 operator+(Dual2 a, double c) { return {a.v + c, a.dr, a.dz}; }
inline Dual2 operator+(double c, Dual2 a) { return a + c; }
inline Dual2 operator-(Dual2 a, double c) { return {a.v - c, a.dr, a.dz}; }
inline Dual2 operator-(double c, Dual2 a) { return {c - a.v, -a.dr, -a.dz}; }
inline Dual2 operator*(Dual2 a, double c) { return {a.v * c, a.dr * c, a.dz * c}; }
inline Dual2 operator*(double c, Dual2 a) { return a * c; }
inline Dual2 operator/(Dual2 a, double c) { return a * (1.0 / c); }
inline Dual2 operator/(double c, Dual2 a) { return Dual2::constant(c) / a; }

inline Dual2 sqrt(Dual2 a) {
    const double s = std::sqrt(a.v);
    const double d = 0.5 / s;
    return {s, d * a.dr, d * a.dz};
}
inline Dual2 pow(Dual2 a, double p) {
    const double s = std::pow(a.v, p);
    const double d = p * std::pow(a.v, p - 1.0);
    return {s, d * a.dr, d * a.dz};
}
inline Dual2 sin(Dual2 a) {
    return {std::sin(a.v), std::cos(a.v) * a.dr, std::cos(a.v) * a.dz};
}
inline Dual2 cos(Dual2 a) {
    return {std::cos(a.v), -std::sin(a.v) * a.dr, -std::sin(a.v) * a.dz};
}
inline Dual2 atan2(Dual2 y, Dual2 x) {
    const double den = x.v * x.v + y.v * y.v;
    return {std::atan2(y.v, x.v), (x.v * y.dr - y.v * x.dr) / den,
            (x.v * y.dz - y.v * x.dz) / den};
}

}  // namespace fscm
