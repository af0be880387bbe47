#include "v2xdose/scene.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "v2xdose/errors.hpp"

namespace v2xdose {

std::complex<double> complex_permittivity(const Material& m, double frequency_hz) {
    if (m.kind == MaterialKind::PerfectConductor) {
        throw DomainError("complex_permittivity: material '" + m.name + "' is PEC");
    }
    if (!(frequency_hz > 0.0)) throw DomainError("complex_permittivity: frequency must be positive");
    const double loss = m.conductivity / (2.0 * kPi * frequency_hz * kVacuumPermittivity);
    return {m.rel_permittivity, -loss};
}

std::string_view to_string(SurfaceTag tag) {
    switch (tag) {
        case SurfaceTag::BuildingWall: return "building_wall";
        case SurfaceTag::Terrain: return "terrain";
        case SurfaceTag::Pavement: return "pavement";
        case SurfaceTag::VehiclePart: return "vehicle_part";
        case SurfaceTag::Other: return "other";
    }
    return "other";
}

std::string_view to_string(MaterialKind kind) {
    switch (kind) {
        case MaterialKind::DielectricHalfSpace: return "DHS";
        case MaterialKind::OneLayerDielectric: return "OLD";
        case MaterialKind::PerfectConductor: return "PEC";
        case MaterialKind::Biophysical: return "BIOPHYSICAL";
    }
    return "DHS";
}

// --- Surface ---------------------------------------------------------------

double Surface::area() const {
    Vec3 acc;
    for (int i = 1; i + 1 < vertex_count; ++i) acc += cross(vertices[i] - vertices[0], vertices[i + 1] - vertices[0]);
    return 0.5 * norm(acc);
}

Aabb Surface::bounds() const {
    Aabb b;
    for (const auto& v : polygon()) b.expand(v);
    return b;
}

bool Surface::contains(const Vec3& p, double tol) const {
    for (int i = 0; i < vertex_count; ++i) {
        const Vec3& a = vertices[i];
        const Vec3& b = vertices[(i + 1) % vertex_count];
        const Vec3 edge = b - a;
        // Signed distance of p from the edge line, inside is positive.
        const double s = dot(cross(edge, p - a), normal) / norm(edge);
        if (s < -tol) return false;
    }
    return true;
}

std::optional<double> Surface::intersect(const Vec3& origin, const Vec3& dir, double t_min, double t_max) const {
    const double denom = dot(normal, dir);
    if (std::abs(denom) < 1e-12) return std::nullopt;
    const double t = (plane_offset - dot(normal, origin)) / denom;
    if (!(t > t_min) || t > t_max) return std::nullopt;
    if (!contains(origin + dir * t)) return std::nullopt;
    return t;
}

// --- FoliageVolume ------------------------------------------------------------

FoliageVolume FoliageVolume::cylinder(double cx, double cy, double radius, double z_min, double z_max) {
    FoliageVolume f;
    f.shape = Shape::Cylinder;
    f.center_x = cx;
    f.center_y = cy;
    f.radius = radius;
    f.z_min = z_min;
    f.z_max = z_max;
    f.box.expand(Vec3{cx - radius, cy - radius, z_min});
    f.box.expand(Vec3{cx + radius, cy + radius, z_max});
    return f;
}

FoliageVolume FoliageVolume::make_box(const Vec3& lo, const Vec3& hi) {
    FoliageVolume f;
    f.shape = Shape::Box;
    f.box.expand(lo);
    f.box.expand(hi);
    f.z_min = f.box.lo.z;
    f.z_max = f.box.hi.z;
    return f;
}

namespace {

// Slab clip of the parametric segment a + t*(b-a), t in [0,1], against [lo, hi] on one axis.
bool clip_axis(double a, double d, double lo, double hi, double& t0, double& t1) {
    if (d == 0.0) return a >= lo && a <= hi;
    double ta = (lo - a) / d;
    double tb = (hi - a) / d;
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    return t0 <= t1;
}

}  // namespace

std::optional<std::pair<double, double>> FoliageVolume::clip(const Vec3& a, const Vec3& b) const {
    const Vec3 d = b - a;
    double t0 = 0.0;
    double t1 = 1.0;
    if (shape == Shape::Box) {
        for (int ax = 0; ax < 3; ++ax) {
            if (!clip_axis(a[ax], d[ax], box.lo[ax], box.hi[ax], t0, t1)) return std::nullopt;
        }
    } else {
        if (!clip_axis(a.z, d.z, z_min, z_max, t0, t1)) return std::nullopt;
        const double ox = a.x - center_x;
        const double oy = a.y - center_y;
        const double qa = d.x * d.x + d.y * d.y;
        const double qb = 2.0 * (ox * d.x + oy * d.y);
        const double qc = ox * ox + oy * oy - radius * radius;
        if (qa == 0.0) {
            if (qc > 0.0) return std::nullopt;
        } else {
            const double disc = qb * qb - 4.0 * qa * qc;
            if (disc < 0.0) return std::nullopt;
            const double sq = std::sqrt(disc);
            t0 = std::max(t0, (-qb - sq) / (2.0 * qa));
            t1 = std::min(t1, (-qb + sq) / (2.0 * qa));
        }
    }
    if (t0 >= t1) return std::nullopt;
    return std::pair{t0, t1};
}

bool FoliageVolume::contains(const Vec3& p) const {
    if (shape == Shape::Box) return box.contains(p);
    if (p.z < z_min || p.z > z_max) return false;
    return std::hypot(p.x - center_x, p.y - center_y) <= radius;
}

// --- Wedge ------------------------------------------------------------------

Vec3 Wedge::facen_tangent() const {
    return std::cos(n * kPi) * face0_tangent + std::sin(n * kPi) * face0_normal;
}

double Wedge::angle_of(const Vec3& v) const {
    double phi = std::atan2(dot(v, face0_normal), dot(v, face0_tangent));
    if (phi < 0.0) phi += 2.0 * kPi;
    return phi;
}

// --- Scene construction -----------------------------------------------------------

namespace {

std::string describe(const Vec3& v) {
    std::ostringstream os;
    os << '(' << v.x << ", " << v.y << ", " << v.z << ')';
    return os.str();
}

Surface make_surface(std::span<const Vec3> verts, std::size_t material, SurfaceTag tag, const std::string& label) {
    if (verts.size() != 3 && verts.size() != 4) {
        throw ValidationError(label + ": polygon must have 3 or 4 vertices, got " + std::to_string(verts.size()));
    }
    Surface s;
    s.vertex_count = static_cast<int>(verts.size());
    std::copy(verts.begin(), verts.end(), s.vertices.begin());
    Vec3 n;
    for (int i = 1; i + 1 < s.vertex_count; ++i) n += cross(verts[i] - verts[0], verts[i + 1] - verts[0]);
    const double twice_area = norm(n);
    double max_edge = 0.0;
    for (int i = 0; i < s.vertex_count; ++i) {
        max_edge = std::max(max_edge, distance(verts[i], verts[(i + 1) % s.vertex_count]));
    }
    if (!(twice_area > 1e-9 * std::max(1.0, max_edge * max_edge))) {
        throw ValidationError(label + ": degenerate polygon starting at " + describe(verts[0]));
    }
    s.normal = n / twice_area;
    s.plane_offset = dot(s.normal, verts[0]);
    for (int i = 0; i < s.vertex_count; ++i) {
        if (std::abs(dot(s.normal, verts[i]) - s.plane_offset) > 1e-6) {
            throw ValidationError(label + ": vertices not coplanar (vertex " + describe(verts[i]) + ")");
        }
        const Vec3 e0 = verts[(i + 1) % s.vertex_count] - verts[i];
        const Vec3 e1 = verts[(i + 2) % s.vertex_count] - verts[(i + 1) % s.vertex_count];
        if (dot(cross(e0, e1), s.normal) < -1e-12 * norm(e0) * norm(e1)) {
            throw ValidationError(label + ": polygon is not convex");
        }
    }
    s.material = material;
    s.tag = tag;
    return s;
}

// Face of an axis-aligned box with outward normal `axis_sign * e_axis`.
std::array<Vec3, 4> box_face(const Aabb& b, int axis, int sign) {
    const int u = (axis + 1) % 3;
    const int v = (axis + 2) % 3;
    auto corner = [&](double cu, double cv) {
        double c[3];
        c[axis] = sign > 0 ? b.hi[axis] : b.lo[axis];
        c[u] = cu;
        c[v] = cv;
        return Vec3{c[0], c[1], c[2]};
    };
    std::array<Vec3, 4> q{corner(b.lo[u], b.lo[v]), corner(b.hi[u], b.lo[v]), corner(b.hi[u], b.hi[v]),
                          corner(b.lo[u], b.hi[v])};
    // (e_u x e_v) = e_axis, so this order faces +axis; reverse for -axis.
    if (sign < 0) std::swap(q[1], q[3]);
    return q;
}

Vec3 unit_axis(int axis, double sign) {
    Vec3 v;
    if (axis == 0) v.x = sign;
    if (axis == 1) v.y = sign;
    if (axis == 2) v.z = sign;
    return v;
}

// Edges along `axis` of box `b`, at the corner selected by signs of the other two axes.
Wedge box_edge(const Aabb& b, int axis, int sign_b, int sign_c, std::size_t material, bool vehicle) {
    const int ab = (axis + 1) % 3;
    const int ac = (axis + 2) % 3;
    double p[3];
    p[ab] = sign_b > 0 ? b.hi[ab] : b.lo[ab];
    p[ac] = sign_c > 0 ? b.hi[ac] : b.lo[ac];
    p[axis] = b.lo[axis];
    const Vec3 start{p[0], p[1], p[2]};
    p[axis] = b.hi[axis];
    const Vec3 end{p[0], p[1], p[2]};

    Wedge w;
    w.start = start;
    w.end = end;
    w.length = distance(start, end);
    w.direction = (end - start) / w.length;
    // Face 0 has outward normal sign_b * e_b and extends from the edge along -sign_c * e_c.
    w.face0_normal = unit_axis(ab, sign_b);
    w.face0_tangent = unit_axis(ac, -sign_c);
    w.n = 1.5;
    w.face0_material = material;
    w.facen_material = material;
    w.on_vehicle = vehicle;
    return w;
}

}  // namespace

Scene Scene::build(const SceneDescription& desc) {
    if (!(desc.frequency_hz > 0.0)) throw ValidationError("scene: frequency must be positive");
    Scene scene;
    scene.frequency_hz_ = desc.frequency_hz;

    for (const auto& m : desc.materials) {
        const std::string label = "material '" + m.name + "'";
        if (m.name.empty()) throw ValidationError("material with empty name");
        if (std::any_of(scene.materials_.begin(), scene.materials_.end(),
                        [&](const Material& o) { return o.name == m.name; })) {
            throw ValidationError(label + ": defined twice");
        }
        if (m.kind == MaterialKind::PerfectConductor) {
            if (m.conductivity != 0.0 || m.rel_permittivity != 1.0 || m.thickness != 0.0) {
                throw ValidationError(label + ": PEC carries no dielectric parameters");
            }
        } else {
            if (!(m.conductivity >= 0.0)) throw ValidationError(label + ": conductivity must be >= 0");
            if (!(m.rel_permittivity >= 1.0)) throw ValidationError(label + ": relative permittivity must be >= 1");
            if (m.kind == MaterialKind::OneLayerDielectric && !(m.thickness > 0.0)) {
                throw ValidationError(label + ": OLD material requires thickness > 0");
            }
        }
        scene.materials_.push_back(m);
    }

    auto resolve = [&](const std::string& name, const std::string& owner) {
        auto idx = scene.find_material(name);
        if (!idx) throw ValidationError(owner + ": undefined material '" + name + "'");
        if (scene.materials_[*idx].kind == MaterialKind::Biophysical) {
            throw ValidationError(owner + ": biophysical material '" + name + "' cannot be used on a surface");
        }
        return *idx;
    };

    for (std::size_t i = 0; i < desc.polygons.size(); ++i) {
        const auto& p = desc.polygons[i];
        const std::string label = "surface #" + std::to_string(i);
        scene.surfaces_.push_back(make_surface(p.vertices, resolve(p.material, label), p.tag, label));
    }

    for (std::size_t i = 0; i < desc.boxes.size(); ++i) {
        const auto& bx = desc.boxes[i];
        const std::string label = "box #" + std::to_string(i);
        const std::size_t mat = resolve(bx.material, label);
        Aabb b;
        b.expand(bx.lo);
        b.expand(bx.hi);
        const Vec3 ext = b.hi - b.lo;
        if (!(ext.x > 0.0 && ext.y > 0.0 && ext.z > 0.0)) {
            throw ValidationError(label + ": degenerate box at " + describe(bx.lo));
        }
        const int box_index = static_cast<int>(scene.boxes_.size());
        scene.boxes_.push_back({b, mat, bx.tag});
        for (int axis = 0; axis < 3; ++axis) {
            for (int sign : {-1, 1}) {
                const auto q = box_face(b, axis, sign);
                Surface s = make_surface(q, mat, bx.tag, label);
                s.solid = box_index;
                scene.surfaces_.push_back(s);
            }
        }
        if (bx.tag == SurfaceTag::BuildingWall) {
            for (int sx : {-1, 1})
                for (int sy : {-1, 1}) scene.wedges_.push_back(box_edge(b, 2, sx, sy, mat, false));
        }
        if (bx.tag == SurfaceTag::BuildingWall || bx.tag == SurfaceTag::VehiclePart) {
            const bool vehicle = bx.tag == SurfaceTag::VehiclePart;
            // Roof edges: along x at y = lo/hi, and along y at x = lo/hi, all at z = hi.
            // For axis x: b-axis is y, c-axis is z.  For axis y: b-axis is z, c-axis is x.
            for (int sy : {-1, 1}) scene.wedges_.push_back(box_edge(b, 0, sy, 1, mat, vehicle));
            for (int sx : {-1, 1}) scene.wedges_.push_back(box_edge(b, 1, 1, sx, mat, vehicle));
        }
    }

    for (std::size_t i = 0; i < desc.foliage.size(); ++i) {
        const auto& f = desc.foliage[i];
        const std::string label = "foliage #" + std::to_string(i);
        if (f.shape == FoliageVolume::Shape::Cylinder && !(f.radius > 0.0)) {
            throw ValidationError(label + ": radius must be positive");
        }
        if (!(f.z_max > f.z_min)) throw ValidationError(label + ": z_max must exceed z_min");
        if (f.shape == FoliageVolume::Shape::Box) {
            const Vec3 ext = f.box.hi - f.box.lo;
            if (!(ext.x > 0.0 && ext.y > 0.0)) throw ValidationError(label + ": degenerate box");
        }
        scene.foliage_.push_back(f);
    }

    std::vector<Aabb> item_bounds;
    item_bounds.reserve(scene.surfaces_.size());
    for (const auto& s : scene.surfaces_) {
        item_bounds.push_back(s.bounds());
        scene.bounds_.expand(item_bounds.back());
    }
    scene.grid_ = UniformGrid(item_bounds, 32);
    return scene;
}

std::optional<std::size_t> Scene::find_material(std::string_view name) const {
    for (std::size_t i = 0; i < materials_.size(); ++i) {
        if (materials_[i].name == name) return i;
    }
    return std::nullopt;
}

std::optional<Hit> Scene::ray_intersect(const Vec3& origin, const Vec3& dir, double t_max) const {
    constexpr double kMinDistance = 1e-9;
    double best_t = std::numeric_limits<double>::infinity();
    std::size_t best_idx = 0;
    bool found = false;
    grid_.traverse(origin, dir, 0.0, t_max, [&](std::span<const std::uint32_t> items, double, double t_exit) {
        for (const std::uint32_t i : items) {
            const auto t = surfaces_[i].intersect(origin, dir, kMinDistance, t_max);
            if (!t) continue;
            if (*t < best_t || (*t == best_t && i < best_idx)) {
                best_t = *t;
                best_idx = i;
                found = true;
            }
        }
        return !(found && best_t <= t_exit);
    });
    if (!found) return std::nullopt;
    return Hit{best_idx, origin + dir * best_t, best_t};
}

bool Scene::segment_blocked(const Vec3& a, const Vec3& b, double eps) const {
    const Vec3 d = b - a;
    const double len = norm(d);
    if (len <= 2.0 * eps) return false;
    const Vec3 dir = d / len;
    bool blocked = false;
    grid_.traverse(a, dir, eps, len - eps, [&](std::span<const std::uint32_t> items, double, double) {
        for (const std::uint32_t i : items) {
            if (surfaces_[i].intersect(a, dir, eps, len - eps)) {
                blocked = true;
                return false;
            }
        }
        return true;
    });
    return blocked;
}

bool Scene::inside_solid(const Vec3& p, double tol) const {
    return std::any_of(boxes_.begin(), boxes_.end(),
                       [&](const SolidBox& b) { return b.bounds.strictly_contains(p, tol); });
}

namespace {

bool same(const Vec3& a, const Vec3& b) { return a == b; }

bool same(const Aabb& a, const Aabb& b) { return same(a.lo, b.lo) && same(a.hi, b.hi); }

}  // namespace

bool operator==(const Scene& a, const Scene& b) {
    if (a.frequency_hz_ != b.frequency_hz_) return false;
    if (!std::equal(a.materials_.begin(), a.materials_.end(), b.materials_.begin(), b.materials_.end(),
                    [](const Material& x, const Material& y) {
                        return x.name == y.name && x.kind == y.kind && x.conductivity == y.conductivity &&
                               x.rel_permittivity == y.rel_permittivity && x.thickness == y.thickness;
                    })) {
        return false;
    }
    if (!std::equal(a.surfaces_.begin(), a.surfaces_.end(), b.surfaces_.begin(), b.surfaces_.end(),
                    [](const Surface& x, const Surface& y) {
                        return x.vertices == y.vertices && x.vertex_count == y.vertex_count &&
                               same(x.normal, y.normal) && x.material == y.material && x.tag == y.tag &&
                               x.solid == y.solid;
                    })) {
        return false;
    }
    if (!std::equal(a.boxes_.begin(), a.boxes_.end(), b.boxes_.begin(), b.boxes_.end(),
                    [](const SolidBox& x, const SolidBox& y) {
                        return same(x.bounds, y.bounds) && x.material == y.material && x.tag == y.tag;
                    })) {
        return false;
    }
    if (!std::equal(a.foliage_.begin(), a.foliage_.end(), b.foliage_.begin(), b.foliage_.end(),
                    [](const FoliageVolume& x, const FoliageVolume& y) {
                        return x.shape == y.shape && x.center_x == y.center_x && x.center_y == y.center_y &&
                               x.radius == y.radius && x.z_min == y.z_min && x.z_max == y.z_max &&
                               same(x.box, y.box);
                    })) {
        return false;
    }
    return a.wedges_.size() == b.wedges_.size();
}

}  // namespace v2xdose
