#pragma once

#include "v2xdose/field.hpp"
#include "v2xdose/scene.hpp"

namespace v2xdose {

// TE: E perpendicular to the plane of incidence. TM: E in the plane of incidence.
enum class Polarization { TE, TM };

// Sign convention: the reflected TE field is R_TE times the incident TE
// component along s = d_in x n; the reflected TM field is R_TM times the
// incident component along s x d_in, re-expressed along s x d_out.  With this
// convention a perfect conductor gives R_TE = -1 and R_TM = +1.
Complex pec_reflection(Polarization pol);

// Dielectric half-space with complex relative permittivity `eps`;
// theta_i measured from the surface normal, 0 <= theta_i < pi/2.
Complex fresnel_reflection(Complex eps, double theta_i, Polarization pol);

// Single lossy slab of thickness `thickness` in free space, multiple internal
// reflections summed in closed form.
Complex slab_reflection(Complex eps, double theta_i, Polarization pol, double thickness, double k0);

// Dispatches on the material kind (PEC, DHS, OLD).
Complex fresnel_reflection(const Material& m, double frequency_hz, double theta_i, Polarization pol);

// Applies a specular reflection to a field vector travelling along d_in off a
// surface with unit normal n. `r_te`/`r_tm` come from fresnel_reflection.
FieldVector reflect_field(const FieldVector& e, const Vec3& d_in, const Vec3& n, Complex r_te, Complex r_tm);

}  // namespace v2xdose
