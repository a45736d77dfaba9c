#pragma once

#include <complex>
#include <functional>
#include <stdexcept>
#include <string>

namespace fscm {

using Complex = std::complex<double>;

struct Vec2 {
    double r = 0.0;
    double z = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.r + b.r, a.z + b.z}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.r - b.r, a.z - b.z}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.r, s * a.z}; }
inline double dot(Vec2 a, Vec2 b) { return a.r * b.r + a.z * b.z; }
inline double cross(Vec2 a, Vec2 b) { return a.r * b.z - a.z * b.r; }
inline double norm(Vec2 a) { return std::sqrt(a.r * a.r + a.z * a.z); }

/// Scalar value with its (r,z) gradient.
struct Jet {
    double v = 0.0;
    double dr = 0.0;
    double dz = 0.0;
};

using RealField = std::function<double(Vec2)>;
using RealJetField = std::function<Jet(Vec2)>;
using ComplexField = std::function<Complex(Vec2)>;

struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace fscm
