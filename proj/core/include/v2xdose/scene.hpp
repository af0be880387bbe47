#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "v2xdose/geometry.hpp"
#include "v2xdose/uniform_grid.hpp"

namespace v2xdose {

inline constexpr double kVacuumPermittivity = 8.854187817e-12;  // F/m
inline constexpr double kSpeedOfLight = 299792458.0;             // m/s
inline constexpr double kDefaultFrequencyHz = 5.9e9;
inline constexpr double kDefaultSlabThickness = 0.3;  // m, OLD materials

enum class MaterialKind {
    DielectricHalfSpace,  // DHS
    OneLayerDielectric,   // OLD: slab of finite thickness
    PerfectConductor,     // PEC
    Biophysical,          // foliage; attenuates through volumes, never reflects
};

struct Material {
    std::string name;
    MaterialKind kind = MaterialKind::DielectricHalfSpace;
    double conductivity = 0.0;      // S/m
    double rel_permittivity = 1.0;  // real part of relative permittivity
    double thickness = 0.0;         // m, OLD only
};

// eps_r - j*sigma/(2*pi*f*eps0). Throws DomainError for PEC or f <= 0.
std::complex<double> complex_permittivity(const Material& m, double frequency_hz);

enum class SurfaceTag { BuildingWall, Terrain, Pavement, VehiclePart, Other };

std::string_view to_string(SurfaceTag tag);
std::string_view to_string(MaterialKind kind);

// Planar convex polygon (triangle or quad). Vertices wind counter-clockwise
// seen from the side the normal points to.
struct Surface {
    std::array<Vec3, 4> vertices{};
    int vertex_count = 0;
    Vec3 normal;
    double plane_offset = 0.0;  // dot(normal, p) for any p on the plane
    std::size_t material = 0;
    SurfaceTag tag = SurfaceTag::Other;
    int solid = -1;  // index of the box this face came from, -1 for loose polygons

    std::span<const Vec3> polygon() const { return {vertices.data(), static_cast<std::size_t>(vertex_count)}; }
    double area() const;
    Aabb bounds() const;
    // Point assumed on the plane; inclusive of the boundary within `tol`.
    bool contains(const Vec3& p, double tol = 1e-9) const;
    // Parametric hit distance along `dir` in (t_min, t_max], if any.
    std::optional<double> intersect(const Vec3& origin, const Vec3& dir, double t_min, double t_max) const;
};

struct SolidBox {
    Aabb bounds;
    std::size_t material = 0;
    SurfaceTag tag = SurfaceTag::Other;
};

struct FoliageVolume {
    enum class Shape { Cylinder, Box };
    Shape shape = Shape::Cylinder;
    double center_x = 0.0;
    double center_y = 0.0;
    double radius = 0.0;
    double z_min = 0.0;
    double z_max = 0.0;
    Aabb box;  // Shape::Box only

    static FoliageVolume cylinder(double cx, double cy, double radius, double z_min, double z_max);
    static FoliageVolume make_box(const Vec3& lo, const Vec3& hi);

    // Parameter interval [t0, t1] within [0, 1] of the segment a->b inside the volume.
    std::optional<std::pair<double, double>> clip(const Vec3& a, const Vec3& b) const;
    bool contains(const Vec3& p) const;
};

// A straight diffracting edge shared by two planar faces. Angles around the
// edge are measured from face 0 through the exterior region; face n sits at
// angle n*pi.
struct Wedge {
    Vec3 start;
    Vec3 end;
    Vec3 direction;  // unit, start -> end
    double length = 0.0;
    Vec3 face0_tangent;  // unit, in face 0, perpendicular to the edge, pointing away from it
    Vec3 face0_normal;   // unit, outward normal of face 0
    double n = 1.5;      // exterior angle / pi
    std::size_t face0_material = 0;
    std::size_t facen_material = 0;
    bool on_vehicle = false;

    Vec3 facen_tangent() const;
    // Angle in [0, 2*pi) of the component of `v` perpendicular to the edge.
    double angle_of(const Vec3& v) const;
};

struct Hit {
    std::size_t surface = 0;
    Vec3 point;
    double distance = 0.0;
};

struct PolygonSpec {
    std::vector<Vec3> vertices;
    std::string material;
    SurfaceTag tag = SurfaceTag::Other;
};

struct BoxSpec {
    Vec3 lo;
    Vec3 hi;
    std::string material;
    SurfaceTag tag = SurfaceTag::Other;
};

// Unvalidated scene content, as read from a scene file or assembled in code.
struct SceneDescription {
    double frequency_hz = kDefaultFrequencyHz;
    std::vector<Material> materials;
    std::vector<PolygonSpec> polygons;
    std::vector<BoxSpec> boxes;
    std::vector<FoliageVolume> foliage;
};

class Scene {
  public:
    // Validates `desc`, expands boxes into six faces, derives diffracting edges
    // and builds the acceleration grid. Throws ValidationError.
    static Scene build(const SceneDescription& desc);

    double frequency_hz() const { return frequency_hz_; }
    double wavelength() const { return kSpeedOfLight / frequency_hz_; }
    double wavenumber() const { return 2.0 * kPi / wavelength(); }

    std::span<const Material> materials() const { return materials_; }
    std::span<const Surface> surfaces() const { return surfaces_; }
    std::span<const SolidBox> boxes() const { return boxes_; }
    std::span<const FoliageVolume> foliage() const { return foliage_; }
    std::span<const Wedge> wedges() const { return wedges_; }
    const Material& material_of(const Surface& s) const { return materials_[s.material]; }
    std::optional<std::size_t> find_material(std::string_view name) const;
    const Aabb& bounds() const { return bounds_; }

    // Nearest hit with distance in (1e-9, t_max]; ties resolved by lowest surface index.
    std::optional<Hit> ray_intersect(const Vec3& origin, const Vec3& dir,
                                     double t_max = std::numeric_limits<double>::infinity()) const;
    // True when any surface crosses the open segment (a, b) shortened by `eps` at both ends.
    bool segment_blocked(const Vec3& a, const Vec3& b, double eps = 1e-6) const;
    bool inside_solid(const Vec3& p, double tol = 1e-9) const;

    friend bool operator==(const Scene& a, const Scene& b);

  private:
    Scene() = default;

    double frequency_hz_ = kDefaultFrequencyHz;
    std::vector<Material> materials_;
    std::vector<Surface> surfaces_;
    std::vector<SolidBox> boxes_;
    std::vector<FoliageVolume> foliage_;
    std::vector<Wedge> wedges_;
    Aabb bounds_;
    UniformGrid grid_;
};

// Scene file I/O (format documented in docs/scene_format.md).
SceneDescription parse_scene_text(std::string_view text, std::string_view source_name = "<scene>");
Scene load_scene(const std::filesystem::path& path);

}  // namespace v2xdose
