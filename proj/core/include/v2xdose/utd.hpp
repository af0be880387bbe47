#pragma once

#include <optional>

#include "v2xdose/field.hpp"
#include "v2xdose/scene.hpp"

namespace v2xdose {

// Fresnel integrals C(u) = int_0^u cos(pi t^2/2) dt and S(u) likewise with sin.
struct FresnelCS {
    double c = 0.0;
    double s = 0.0;
};
FresnelCS fresnel_integrals(double u);

// UTD transition function F(X) = 2j sqrt(X) e^{jX} int_{sqrt X}^inf e^{-j t^2} dt, X >= 0.
Complex utd_transition(double x);

struct WedgeCoefficients {
    Complex soft;  // E parallel to the edge (beta direction)
    Complex hard;  // E along phi
};

// Face reflection coefficients plugged into the Luebbers form. For a perfect
// conductor: soft = -1, hard = +1 on both faces.
struct FaceReflection {
    Complex soft{-1.0, 0.0};
    Complex hard{1.0, 0.0};
};

// Heuristic UTD wedge coefficient (Kouyoumjian-Pathak with Luebbers' face
// reflection factors). Angles in radians measured from face 0, exterior
// wedge angle n*pi, L the distance parameter.
WedgeCoefficients wedge_coefficients(double n, double phi, double phi_prime, double beta0, double L, double k,
                                     const FaceReflection& face0, const FaceReflection& facen);

struct EdgeDiffraction {
    WedgeCoefficients d;
    double phi = 0.0;
    double phi_prime = 0.0;
    double beta0 = 0.0;
};

// Diffraction at point `q` on `wedge` for a ray arriving along `s_in` (unit,
// toward the edge) and leaving along `s_out` (unit). `s_prime`/`s` are the
// source and observation distances from q. Rejects directions off the Keller
// cone (tolerance 1e-3 rad) or inside the wedge.
std::optional<EdgeDiffraction> utd_diffraction(const Wedge& wedge, const Material& face0, const Material& facen,
                                               double frequency_hz, const Vec3& s_in, const Vec3& s_out,
                                               double s_prime, double s);

// Diffracted field just after the edge (before spreading and phase along s):
// applies the dyadic -b'b D_s - f'f D_h to the incident field `e`.
FieldVector diffract_field(const FieldVector& e, const Vec3& edge_dir, const Vec3& s_in, const Vec3& s_out,
                           const WedgeCoefficients& d);

}  // namespace v2xdose
