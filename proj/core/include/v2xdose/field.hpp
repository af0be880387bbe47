#pragma once

#include <array>
#include <cmath>
#include <complex>

#include "v2xdose/geometry.hpp"

namespace v2xdose {

using Complex = std::complex<double>;

// Complex field vector (V/m, RMS phasor per Cartesian component).
struct FieldVector {
    std::array<Complex, 3> c{};

    FieldVector& operator+=(const FieldVector& o) {
        for (int i = 0; i < 3; ++i) c[i] += o.c[i];
        return *this;
    }
    FieldVector& operator*=(Complex s) {
        for (auto& v : c) v *= s;
        return *this;
    }
    double norm() const { return std::sqrt(std::norm(c[0]) + std::norm(c[1]) + std::norm(c[2])); }
    // Projection on a real direction (no conjugation).
    Complex along(const Vec3& u) const { return c[0] * u.x + c[1] * u.y + c[2] * u.z; }
    Vec3 real_part() const { return {c[0].real(), c[1].real(), c[2].real()}; }
};

inline FieldVector operator*(Complex s, const Vec3& u) { return {{s * u.x, s * u.y, s * u.z}}; }
inline FieldVector operator+(FieldVector a, const FieldVector& b) { return a += b; }
inline FieldVector operator*(FieldVector a, Complex s) { return a *= s; }

}  // namespace v2xdose
