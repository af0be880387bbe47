#pragma once

#include <cmath>
#include <complex>

#include "v2xdose/fresnel.hpp"
#include "v2xdose/utd.hpp"

namespace v2xdose::testing {

// Exact total field of a unit plane wave incident from angle phi_p on a PEC
// wedge of exterior angle n*pi (eigenfunction series, e^{+jwt}). Soft: E along
// the edge; hard: H along the edge.
inline Complex wedge_series(double n, double k_rho, double phi, double phi_p, bool soft, int terms = 600) {
    Complex sum{0.0, 0.0};
    for (int m = soft ? 1 : 0; m < terms; ++m) {
        const double nu = m / n;
        const double eps_m = m == 0 ? 1.0 : 2.0;
        const Complex jnu = std::polar(1.0, nu * kPi / 2.0);
        const double bessel = std::cyl_bessel_j(nu, k_rho);
        const double ang = soft ? std::cos(nu * (phi - phi_p)) - std::cos(nu * (phi + phi_p))
                                : std::cos(nu * (phi - phi_p)) + std::cos(nu * (phi + phi_p));
        sum += eps_m * jnu * bessel * ang;
    }
    return sum / n;
}

// Half-plane along +x with its edge on the z axis, face 0 normal +y.
inline Wedge half_plane() {
    Wedge w;
    w.start = {0, 0, -50};
    w.end = {0, 0, 50};
    w.direction = {0, 0, 1};
    w.length = 100.0;
    w.face0_tangent = {1, 0, 0};
    w.face0_normal = {0, 1, 0};
    w.n = 2.0;
    return w;
}

// Geometrical optics plus UTD for a unit plane wave from phi_p at (rho, phi),
// E along the edge (soft). Uses the library's diffraction dyadic.
inline Complex half_plane_utd_soft(double k, double rho, double phi, double phi_p) {
    const Complex j{0.0, 1.0};
    Complex total{0.0, 0.0};
    if (phi < kPi + phi_p) total += std::exp(j * k * rho * std::cos(phi - phi_p));
    if (phi < kPi - phi_p) total -= std::exp(j * k * rho * std::cos(phi + phi_p));

    const Wedge w = half_plane();
    const Material pec{"metal", MaterialKind::PerfectConductor};
    const Vec3 s_in{-std::cos(phi_p), -std::sin(phi_p), 0.0};
    const Vec3 s_out{std::cos(phi), std::sin(phi), 0.0};
    const double s_prime = 1e12;
    const double f = k * kSpeedOfLight / (2.0 * kPi);
    const auto d = utd_diffraction(w, pec, pec, f, s_in, s_out, s_prime, rho);
    if (!d) return total;
    const FieldVector e_edge = Complex{1.0, 0.0} * Vec3{0, 0, 1};
    const FieldVector ed = diffract_field(e_edge, w.direction, s_in, s_out, d->d);
    const double spread = std::sqrt(s_prime / (rho * (rho + s_prime)));
    return total + ed.c[2] * spread * std::exp(-j * k * rho);
}

}  // namespace v2xdose::testing
