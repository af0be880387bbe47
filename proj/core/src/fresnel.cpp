#include "v2xdose/fresnel.hpp"

#include <cmath>

namespace v2xdose {

Complex pec_reflection(Polarization pol) { return pol == Polarization::TE ? Complex{-1.0, 0.0} : Complex{1.0, 0.0}; }

Complex fresnel_reflection(Complex eps, double theta_i, Polarization pol) {
    const double c = std::cos(theta_i);
    const double s = std::sin(theta_i);
    const Complex root = std::sqrt(eps - s * s);
    if (pol == Polarization::TE) return (c - root) / (c + root);
    return (eps * c - root) / (eps * c + root);
}

Complex slab_reflection(Complex eps, double theta_i, Polarization pol, double thickness, double k0) {
    const double s = std::sin(theta_i);
    const Complex r = fresnel_reflection(eps, theta_i, pol);
    const Complex delta = k0 * thickness * std::sqrt(eps - s * s);
    const Complex phase = std::exp(Complex{0.0, -2.0} * delta);
    return r * (1.0 - phase) / (1.0 - r * r * phase);
}

Complex fresnel_reflection(const Material& m, double frequency_hz, double theta_i, Polarization pol) {
    switch (m.kind) {
        case MaterialKind::PerfectConductor:
            return pec_reflection(pol);
        case MaterialKind::OneLayerDielectric: {
            const double k0 = 2.0 * kPi * frequency_hz / kSpeedOfLight;
            return slab_reflection(complex_permittivity(m, frequency_hz), theta_i, pol, m.thickness, k0);
        }
        case MaterialKind::DielectricHalfSpace:
        case MaterialKind::Biophysical:
            break;
    }
    return fresnel_reflection(complex_permittivity(m, frequency_hz), theta_i, pol);
}

FieldVector reflect_field(const FieldVector& e, const Vec3& d_in, const Vec3& n, Complex r_te, Complex r_tm) {
    const Vec3 d_out = reflect(d_in, n);
    Vec3 s = cross(d_in, n);
    double len = norm(s);
    if (len < 1e-9) {
        // Normal incidence: any transverse axis works since R_TM = -R_TE there.
        const Vec3 helper = std::abs(d_in.x) < 0.9 ? Vec3{1.0, 0.0, 0.0} : Vec3{0.0, 1.0, 0.0};
        s = cross(d_in, helper);
        len = norm(s);
    }
    s = s / len;
    const Vec3 p_in = cross(s, d_in);
    const Vec3 p_out = cross(s, d_out);
    return (r_te * e.along(s)) * s + (r_tm * e.along(p_in)) * p_out;
}

}  // namespace v2xdose
