#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "v2xdose/geometry.hpp"
#include "v2xdose/scene.hpp"

namespace v2xdose {

struct ScatterParams {
    bool enabled = true;
    double S = 0.45;       // fraction of field amplitude scattered
    double K_xpol = 0.4;   // cross-polarized fraction of scattered power
    int alpha_R = 4;       // lobe exponent
    double tile_size = 2.0;  // m

    // Throws ValidationError.
    void validate() const;
};

struct ScatterTile {
    Vec3 center;
    Vec3 normal;
    double area = 0.0;  // m^2
    std::size_t surface = 0;
};

struct ScatteredField {
    double co_pol = 0.0;     // V/m
    double cross_pol = 0.0;  // V/m
    double total() const;    // sqrt(co^2 + cross^2)
};

// Hemispherical integral of ((1 + cos psi)/2)^alpha over the front half-space,
// psi measured from the specular direction at incidence angle theta_i.
// Tabulated once per alpha and interpolated.
double lobe_normalization(int alpha, double theta_i);

// Directive-lobe scattered field at distance r_s from a tile. `incident_dir`
// is the propagation direction of the incident ray (toward the tile),
// `incident_field` its RMS magnitude at the tile.
ScatteredField directive_scatter_field(const ScatterTile& tile, const Vec3& incident_dir, double incident_field,
                                       const Vec3& scatter_dir, double r_s, const ScatterParams& p);

// sqrt(1 - S^2). Throws DomainError outside [0, 1].
double specular_attenuation(double S);

// Length of segment a-b inside the union of the volumes.
double foliage_depth(const Vec3& a, const Vec3& b, std::span<const FoliageVolume> foliage);

// Weissberger excess loss in dB; f in GHz. Depths above 400 m are clamped
// with a warning on stderr. Throws DomainError for f <= 0 or depth < 0.
double weissberger_loss(double f_ghz, double depth_m);

// Cuts every building_wall surface into tile_size x tile_size tiles (clipped
// to the polygon) with centers jittered from `seed`.
std::vector<ScatterTile> tile_walls(const Scene& scene, double tile_size, std::uint64_t seed);

}  // namespace v2xdose
