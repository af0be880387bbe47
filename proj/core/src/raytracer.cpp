#include "v2xdose/raytracer.hpp"

#include <algorithm>
#include <cmath>

#include "v2xdose/errors.hpp"
#include "v2xdose/fresnel.hpp"
#include "v2xdose/parallel.hpp"
#include "v2xdose/utd.hpp"

namespace v2xdose {

namespace {

constexpr std::size_t kRaysPerChunk = 2048;
constexpr double kOcclusionEps = 1e-6;
constexpr double kPolygonTol = 1e-7;

double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

Vec3 any_perpendicular(const Vec3& d) {
    const Vec3 helper = std::abs(d.z) < 0.9 ? Vec3{0.0, 0.0, 1.0} : Vec3{1.0, 0.0, 0.0};
    return normalized(cross(d, helper));
}

// Unit vector of increasing polar angle about `axis`, seen along direction d.
Vec3 theta_hat(const Vec3& d, const Vec3& axis) {
    const Vec3 t = d * dot(d, axis) - axis;
    const double n = norm(t);
    return n < 1e-12 ? any_perpendicular(d) : t / n;
}

// Far distance of the slab interval of a ray against a box; 0 when missed.
double exit_distance(const Aabb& b, const Vec3& o, const Vec3& d) {
    double t0 = 0.0;
    double t1 = 1e300;
    for (int a = 0; a < 3; ++a) {
        if (d[a] == 0.0) {
            if (o[a] < b.lo[a] || o[a] > b.hi[a]) return 0.0;
            continue;
        }
        double ta = (b.lo[a] - o[a]) / d[a];
        double tb = (b.hi[a] - o[a]) / d[a];
        if (ta > tb) std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
        if (t0 > t1) return 0.0;
    }
    return t1;
}

// Closest points between segments p1-q1 and p2-q2; returns squared distance.
double segment_segment(const Vec3& p1, const Vec3& q1, const Vec3& p2, const Vec3& q2, double& s, double& t) {
    const Vec3 d1 = q1 - p1;
    const Vec3 d2 = q2 - p2;
    const Vec3 r = p1 - p2;
    const double a = dot(d1, d1);
    const double e = dot(d2, d2);
    const double f = dot(d2, r);
    if (a <= 1e-24 && e <= 1e-24) {
        s = t = 0.0;
    } else if (a <= 1e-24) {
        s = 0.0;
        t = clamp01(f / e);
    } else {
        const double c = dot(d1, r);
        if (e <= 1e-24) {
            t = 0.0;
            s = clamp01(-c / a);
        } else {
            const double b = dot(d1, d2);
            const double denom = a * e - b * b;
            s = denom > 0.0 ? clamp01((b * f - c * e) / denom) : 0.0;
            t = (b * s + f) / e;
            if (t < 0.0) {
                t = 0.0;
                s = clamp01(-c / a);
            } else if (t > 1.0) {
                t = 1.0;
                s = clamp01((b - c) / a);
            }
        }
    }
    const Vec3 diff = (p1 + d1 * s) - (p2 + d2 * t);
    return dot(diff, diff);
}

// Receivers bucketed by height band, then by a uniform xy grid.
class ReceiverIndex {
  public:
    explicit ReceiverIndex(std::span<const Vec3> rx) : rx_(rx) {
        for (const Vec3& p : rx) bounds_.expand(p);
        std::vector<std::uint32_t> order(rx.size());
        for (std::uint32_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](auto a, auto b) { return rx[a].z < rx[b].z; });
        std::size_t i = 0;
        while (i < order.size()) {
            std::size_t j = i + 1;
            while (j < order.size() && rx[order[j]].z - rx[order[j - 1]].z < 0.25) ++j;
            build_layer({order.data() + i, j - i});
            i = j;
        }
    }

    const Aabb& bounds() const { return bounds_; }

    // Calls f(rx) for every receiver within rate * (d0 + distance along the
    // segment) of segment a-b. A receiver may be reported more than once.
    template <class F>
    void query(const Vec3& a, const Vec3& b, double d0, double rate, F&& f) const {
        const Vec3 d = b - a;
        const double len = norm(d);
        if (len <= 0.0) return;
        const double r_max = rate * (d0 + len) + 1e-9;
        for (const Layer& layer : layers_) {
            double t0 = 0.0;
            double t1 = 1.0;
            const double zlo = layer.z_lo - r_max;
            const double zhi = layer.z_hi + r_max;
            if (std::abs(d.z) < 1e-15) {
                if (a.z < zlo || a.z > zhi) continue;
            } else {
                double ta = (zlo - a.z) / d.z;
                double tb = (zhi - a.z) / d.z;
                if (ta > tb) std::swap(ta, tb);
                t0 = std::max(t0, ta);
                t1 = std::min(t1, tb);
                if (t0 > t1) continue;
            }
            const double span_xy = std::hypot(d.x, d.y) * (t1 - t0);
            const int pieces = std::clamp(static_cast<int>(std::ceil(span_xy / (2.0 * layer.cell))), 1, 100000);
            for (int k = 0; k < pieces; ++k) {
                const double ta = t0 + (t1 - t0) * k / pieces;
                const double tb = t0 + (t1 - t0) * (k + 1) / pieces;
                const Vec3 pa = a + d * ta;
                const Vec3 pb = a + d * tb;
                const double xlo = std::min(pa.x, pb.x) - r_max;
                const double xhi = std::max(pa.x, pb.x) + r_max;
                const double ylo = std::min(pa.y, pb.y) - r_max;
                const double yhi = std::max(pa.y, pb.y) + r_max;
                if (xhi < layer.x_min || xlo > layer.x_max || yhi < layer.y_min || ylo > layer.y_max) continue;
                const int ix0 = layer.cell_x(xlo);
                const int ix1 = layer.cell_x(xhi);
                const int iy0 = layer.cell_y(ylo);
                const int iy1 = layer.cell_y(yhi);
                for (int iy = iy0; iy <= iy1; ++iy) {
                    for (int ix = ix0; ix <= ix1; ++ix) {
                        const std::size_t c = static_cast<std::size_t>(iy) * layer.nx + ix;
                        for (std::uint32_t q = layer.start[c]; q < layer.start[c + 1]; ++q) {
                            const std::uint32_t id = layer.items[q];
                            double t = 0.0;
                            const double dist = point_segment_distance(rx_[id], a, b, &t);
                            if (dist <= rate * (d0 + t * len)) f(id);
                        }
                    }
                }
            }
        }
    }

  private:
    struct Layer {
        double z_lo = 0.0;
        double z_hi = 0.0;
        double x0 = 0.0;
        double y0 = 0.0;
        double x_min = 0.0;
        double x_max = 0.0;
        double y_min = 0.0;
        double y_max = 0.0;
        double cell = 1.0;
        int nx = 1;
        int ny = 1;
        std::vector<std::uint32_t> start;
        std::vector<std::uint32_t> items;

        // Clamped cell index.
        int cell_x(double x) const { return std::clamp(static_cast<int>(std::floor((x - x0) / cell)), 0, nx - 1); }
        int cell_y(double y) const { return std::clamp(static_cast<int>(std::floor((y - y0) / cell)), 0, ny - 1); }
    };

    void build_layer(std::span<const std::uint32_t> ids) {
        Layer L;
        Aabb box;
        for (auto id : ids) box.expand(rx_[id]);
        L.z_lo = box.lo.z;
        L.z_hi = box.hi.z;
        const double ex = box.hi.x - box.lo.x;
        const double ey = box.hi.y - box.lo.y;
        const double extent = std::max(ex, ey);
        L.cell = std::max(0.5, extent / std::sqrt(static_cast<double>(ids.size())));
        if (ex > 0.0 && ey > 0.0) L.cell = std::max(0.5, std::sqrt(ex * ey / static_cast<double>(ids.size())));
        L.x0 = L.x_min = box.lo.x;
        L.y0 = L.y_min = box.lo.y;
        L.x_max = box.hi.x;
        L.y_max = box.hi.y;
        L.nx = static_cast<int>(std::floor(ex / L.cell)) + 1;
        L.ny = static_cast<int>(std::floor(ey / L.cell)) + 1;
        std::vector<std::uint32_t> count(static_cast<std::size_t>(L.nx) * L.ny + 1, 0);
        auto cell_of = [&](std::uint32_t id) {
            return static_cast<std::size_t>(L.cell_y(rx_[id].y)) * L.nx + L.cell_x(rx_[id].x);
        };
        for (auto id : ids) ++count[cell_of(id) + 1];
        for (std::size_t c = 1; c < count.size(); ++c) count[c] += count[c - 1];
        L.start = count;
        L.items.resize(ids.size());
        for (auto id : ids) L.items[count[cell_of(id)]++] = id;
        layers_.push_back(std::move(L));
    }

    std::span<const Vec3> rx_;
    Aabb bounds_;
    std::vector<Layer> layers_;
};

// Icosahedron vertices and faces.
void icosahedron(std::vector<Vec3>& v, std::vector<std::array<int, 3>>& f) {
    const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
    v.clear();
    for (double a : {-1.0, 1.0}) {
        for (double b : {-phi, phi}) {
            v.push_back({0.0, a, b});
            v.push_back({a, b, 0.0});
            v.push_back({b, 0.0, a});
        }
    }
    f.clear();
    const auto edge = [&](int i, int j) { return std::abs(distance(v[i], v[j]) - 2.0) < 1e-9; };
    const int n = static_cast<int>(v.size());
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            for (int k = j + 1; k < n; ++k)
                if (edge(i, j) && edge(j, k) && edge(i, k)) f.push_back({i, j, k});
}

Vec3 lattice_point(const Vec3& a, const Vec3& b, const Vec3& c, int i, int j, int n) {
    return normalized(a + (b - a) * (static_cast<double>(i) / n) + (c - a) * (static_cast<double>(j) / n));
}

double angle_between(const Vec3& a, const Vec3& b) { return std::atan2(norm(cross(a, b)), dot(a, b)); }

void check_order(const PathKey& key) {
    if (key.reflections > kMaxReflectionOrder) throw DomainError("path key exceeds the maximum reflection order");
}

// images[0] = tx, images[k+1] = images[k] mirrored in surface k of the key.
void image_chain(const PathKey& key, const Vec3& tx, const Scene& scene, std::array<Vec3, kMaxReflectionOrder + 1>& images) {
    images[0] = tx;
    const auto surfaces = scene.surfaces();
    for (int k = 0; k < key.reflections; ++k) {
        const Surface& s = surfaces[key.surfaces[k]];
        images[k + 1] = mirror_point(images[k], s.vertices[0], s.normal);
    }
}

// Reflection points from the far end `target` back toward the transmitter.
bool backtrack(const PathKey& key, const Scene& scene, const std::array<Vec3, kMaxReflectionOrder + 1>& images,
               const Vec3& target, std::array<Vec3, kMaxReflectionOrder>& pts) {
    const auto surfaces = scene.surfaces();
    Vec3 cur = target;
    for (int k = key.reflections - 1; k >= 0; --k) {
        if (key.surfaces[k] >= surfaces.size()) return false;
        if (k > 0 && key.surfaces[k] == key.surfaces[k - 1]) return false;
        const Surface& s = surfaces[key.surfaces[k]];
        const double a = dot(s.normal, cur) - s.plane_offset;
        const double b = dot(s.normal, images[k + 1]) - s.plane_offset;
        if (!((a > 1e-9 && b < -1e-9) || (a < -1e-9 && b > 1e-9))) return false;
        const Vec3 p = cur + (images[k + 1] - cur) * (a / (a - b));
        if (!s.contains(p, kPolygonTol)) return false;
        pts[k] = p;
        cur = p;
    }
    return true;
}

bool same_side(const Surface& s, const Vec3& p, const Vec3& q) {
    const double a = dot(s.normal, p) - s.plane_offset;
    const double b = dot(s.normal, q) - s.plane_offset;
    return (a > 1e-9 && b > 1e-9) || (a < -1e-9 && b < -1e-9);
}

bool chain_clear(const std::vector<Vec3>& pts, const Scene& scene) {
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        if (distance(pts[i], pts[i + 1]) < 1e-9) return false;
    }
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        if (scene.segment_blocked(pts[i], pts[i + 1], kOcclusionEps)) return false;
    }
    return true;
}

void finish(PropagationPath& path) {
    path.total_length = 0.0;
    for (std::size_t i = 0; i + 1 < path.points.size(); ++i) path.total_length += distance(path.points[i], path.points[i + 1]);
    path.delay = path.total_length / kSpeedOfLight;
}

double foliage_factor(const std::vector<Vec3>& pts, const Scene& scene) {
    if (scene.foliage().empty()) return 1.0;
    double depth = 0.0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) depth += foliage_depth(pts[i], pts[i + 1], scene.foliage());
    if (depth <= 0.0) return 1.0;
    return std::pow(10.0, -weissberger_loss(scene.frequency_hz() * 1e-9, depth) / 20.0);
}

FieldVector launch_field(const Transmitter& tx, const Vec3& dir, double spread, double phase_length, double k) {
    const double amp = std::sqrt(30.0 * tx.input_power_w * tx.gain_toward(dir)) / spread;
    return (amp * std::exp(Complex{0.0, -k * phase_length})) * theta_hat(dir, tx.axis());
}

FieldVector apply_reflection(const FieldVector& e, const Vec3& d_in, const Surface& s, const Scene& scene,
                             const ScatterParams& sp) {
    const double c = std::min(1.0, std::abs(dot(d_in, s.normal)));
    const double theta_i = std::min(std::acos(c), kPi / 2.0 - 1e-12);
    const Material& m = scene.material_of(s);
    Complex r_te = fresnel_reflection(m, scene.frequency_hz(), theta_i, Polarization::TE);
    Complex r_tm = fresnel_reflection(m, scene.frequency_hz(), theta_i, Polarization::TM);
    if (sp.enabled && s.tag == SurfaceTag::BuildingWall) {
        const double att = specular_attenuation(sp.S);
        r_te *= att;
        r_tm *= att;
    }
    return reflect_field(e, d_in, s.normal, r_te, r_tm);
}

// Scattered field at rx from a tile illuminated directly by tx (no foliage).
FieldVector tile_field(const ScatterTile& tile, const Transmitter& tx, const Vec3& rx, const ScatterParams& sp,
                       double k) {
    const Vec3 to_tile = tile.center - tx.position;
    const double d1 = norm(to_tile);
    const Vec3 d_in = to_tile / d1;
    const Vec3 out = rx - tile.center;
    const double d2 = norm(out);
    const Vec3 d_s = out / d2;
    const double e_inc = std::sqrt(30.0 * tx.input_power_w * tx.gain_toward(d_in)) / d1;
    const ScatteredField sf = directive_scatter_field(tile, d_in, e_inc, d_s, d2, sp);
    if (sf.co_pol == 0.0 && sf.cross_pol == 0.0) return {};
    // Co-polar reference: incident polarization mirrored as by a conductor.
    const Vec3 p_in = theta_hat(d_in, tx.axis());
    FieldVector mirrored = reflect_field(Complex{1.0, 0.0} * p_in, d_in, tile.normal, {-1.0, 0.0}, {1.0, 0.0});
    Vec3 co = mirrored.real_part();
    co = co - d_s * dot(co, d_s);
    co = norm(co) < 1e-9 ? any_perpendicular(d_s) : normalized(co);
    const Vec3 xp = cross(d_s, co);
    const Complex phase = std::exp(Complex{0.0, -k * (d1 + d2)});
    return (phase * sf.co_pol) * co + (phase * sf.cross_pol) * xp;
}

struct PathCollector {
    const Scene& scene;
    const Transmitter& tx;
    const TraceParams& params;
    const FieldOptions& options;
    std::span<const std::uint32_t> lit_tiles;  // tiles with a clear line to tx

    template <class F>
    void run(const Vec3& rx, std::span<const PathKey> keys, std::span<const PathKey> edges, F&& f) const {
        for (const PathKey& key : keys) {
            if (auto p = exact_path_correction(key, tx.position, rx, scene)) {
                p->field = path_field(*p, tx, scene, options);
                f(*p);
            }
        }
        for (const PathKey& key : edges) {
            if (auto p = exact_path_correction(key, tx.position, rx, scene)) {
                p->field = path_field(*p, tx, scene, options);
                f(*p);
            }
        }
        if (!options.scatter.enabled || options.scatter.S == 0.0) return;
        const double k = scene.wavenumber();
        for (const std::uint32_t ti : lit_tiles) {
            const ScatterTile& tile = options.tiles[ti];
            if (dot(rx - tile.center, tile.normal) <= 1e-9) continue;
            if (scene.segment_blocked(tile.center, rx, kOcclusionEps)) continue;
            PropagationPath p;
            p.interactions = {{InteractionKind::Emit, 0}, {InteractionKind::Scatter, ti}, {InteractionKind::Receive, 0}};
            p.points = {tx.position, tile.center, rx};
            finish(p);
            p.field = tile_field(tile, tx, rx, options.scatter, k) * foliage_factor(p.points, scene);
            f(p);
        }
    }
};

std::vector<std::uint32_t> lit_tiles(const Scene& scene, const Vec3& tx, const FieldOptions& options) {
    std::vector<std::uint32_t> out;
    if (!options.scatter.enabled || options.scatter.S == 0.0) return out;
    for (std::uint32_t i = 0; i < options.tiles.size(); ++i) {
        const ScatterTile& t = options.tiles[i];
        if (dot(tx - t.center, t.normal) <= 1e-9) continue;
        if (scene.segment_blocked(tx, t.center, kOcclusionEps)) continue;
        out.push_back(i);
    }
    return out;
}

}  // namespace

// --- parameters --------------------------------------------------------------------

void TraceParams::validate() const {
    if (!(ray_spacing_deg > 0.0 && ray_spacing_deg <= 30.0)) throw ValidationError("trace.ray_spacing_deg must be in (0, 30]");
    if (max_reflections < 0 || max_reflections > kMaxReflectionOrder) {
        throw ValidationError("trace.max_reflections must be in [0, " + std::to_string(kMaxReflectionOrder) + "]");
    }
    if (max_diffractions < 0 || max_diffractions > 1) throw ValidationError("trace.max_diffractions must be 0 or 1");
    if (max_transmissions != 0) throw ValidationError("trace.max_transmissions: transmission is not modelled, must be 0");
    if (max_reflections_before_diffraction < 0 || max_reflections_before_diffraction > max_reflections) {
        throw ValidationError("trace.max_reflections_before_diffraction must be in [0, max_reflections]");
    }
    if (!std::isfinite(rx_threshold_dbm)) throw ValidationError("trace.rx_threshold_dBm must be finite");
    if (!(capture_safety >= 1.0)) throw ValidationError("trace.capture_safety must be >= 1");
}

double TraceParams::capture_rate() const { return std::tan(ray_spacing_deg * kPi / 360.0) * capture_safety; }

PathKey PathKey::reflected(std::span<const std::uint32_t> seq) {
    if (seq.size() > kMaxReflectionOrder) throw DomainError("too many reflections for a path key");
    PathKey k;
    k.reflections = static_cast<std::uint8_t>(seq.size());
    std::copy(seq.begin(), seq.end(), k.surfaces.begin());
    return k;
}

bool PropagationPath::has(InteractionKind k) const {
    return std::any_of(interactions.begin(), interactions.end(), [k](const Interaction& i) { return i.kind == k; });
}

// --- launch --------------------------------------------------------------------

double icosphere_max_spacing(int n) {
    std::vector<Vec3> v;
    std::vector<std::array<int, 3>> f;
    icosahedron(v, f);
    const Vec3 &a = v[f[0][0]], &b = v[f[0][1]], &c = v[f[0][2]];
    double worst = 0.0;
    for (int i = 0; i <= n; ++i) {
        for (int j = 0; i + j <= n; ++j) {
            const Vec3 p = lattice_point(a, b, c, i, j, n);
            if (i + j < n) {
                const Vec3 pi = lattice_point(a, b, c, i + 1, j, n);
                const Vec3 pj = lattice_point(a, b, c, i, j + 1, n);
                worst = std::max({worst, angle_between(p, pi), angle_between(p, pj), angle_between(pi, pj)});
            }
        }
    }
    return worst;
}

int icosphere_frequency(double spacing_deg) {
    if (!(spacing_deg > 0.0)) throw DomainError("ray spacing must be positive");
    const double target = spacing_deg * kPi / 180.0;
    int n = std::max(1, static_cast<int>(std::ceil(63.4349488 / spacing_deg)));
    for (int guard = 0; guard < 64; ++guard) {
        const double s = icosphere_max_spacing(n);
        if (s <= target) return n;
        n = std::max(n + 1, static_cast<int>(std::ceil(n * s / target)));
    }
    throw DomainError("could not reach the requested ray spacing");
}

std::vector<Vec3> launch_directions(double spacing_deg) {
    const int n = icosphere_frequency(spacing_deg);
    std::vector<Vec3> v;
    std::vector<std::array<int, 3>> f;
    icosahedron(v, f);
    std::vector<Vec3> out;
    out.reserve(10 * static_cast<std::size_t>(n) * n + 2);
    for (const Vec3& p : v) out.push_back(normalized(p));
    std::vector<std::pair<int, int>> edges;
    for (const auto& face : f) {
        for (int e = 0; e < 3; ++e) {
            int a = face[e];
            int b = face[(e + 1) % 3];
            if (a > b) std::swap(a, b);
            edges.emplace_back(a, b);
        }
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    for (const auto& [a, b] : edges) {
        for (int m = 1; m < n; ++m) out.push_back(normalized(v[a] + (v[b] - v[a]) * (static_cast<double>(m) / n)));
    }
    for (const auto& face : f) {
        for (int i = 1; i < n; ++i)
            for (int j = 1; i + j < n; ++j) out.push_back(lattice_point(v[face[0]], v[face[1]], v[face[2]], i, j, n));
    }
    return out;
}

CandidateSet launch_rays(const Scene& scene, const Transmitter& tx, std::span<const Vec3> receivers,
                         const TraceParams& params, int threads) {
    params.validate();
    const std::vector<Vec3> dirs = launch_directions(params.ray_spacing_deg);
    const double rate = params.capture_rate();
    const ReceiverIndex index(receivers);

    struct EdgeRef {
        std::uint32_t id;
        Aabb box;
    };
    std::vector<EdgeRef> wedges;
    if (params.max_diffractions > 0) {
        const auto all = scene.wedges();
        for (std::uint32_t i = 0; i < all.size(); ++i) {
            if (all[i].on_vehicle && !params.vehicle_edges) continue;
            Aabb b;
            b.expand(all[i].start);
            b.expand(all[i].end);
            wedges.push_back({i, b});
        }
    }

    Aabb world = scene.bounds();
    if (!index.bounds().empty()) world.expand(index.bounds());
    world.expand(tx.position);
    const double diag = world.empty() ? 0.0 : distance(world.lo, world.hi);

    struct Chunk {
        std::vector<std::pair<std::uint32_t, PathKey>> hits;
        std::vector<PathKey> edges;
    };
    const std::size_t chunks = (dirs.size() + kRaysPerChunk - 1) / kRaysPerChunk;
    std::vector<Chunk> results(chunks);
    const auto wedge_list = scene.wedges();

    parallel_for(chunks, threads, [&](std::size_t c) {
        Chunk& out = results[c];
        const std::size_t end = std::min(dirs.size(), (c + 1) * kRaysPerChunk);
        for (std::size_t r = c * kRaysPerChunk; r < end; ++r) {
            Vec3 origin = tx.position;
            Vec3 dir = dirs[r];
            double d0 = 0.0;
            PathKey key;
            for (;;) {
                const auto hit = scene.ray_intersect(origin, dir);
                double t_end = 0.0;
                if (hit) {
                    t_end = hit->distance;
                } else {
                    // Only the part of an escaping ray near the scene or receivers matters.
                    const double margin = 1.0 + rate * (d0 + diag + distance(origin, world.lo) + distance(origin, world.hi));
                    Aabb grown = world;
                    grown.lo -= Vec3{margin, margin, margin};
                    grown.hi += Vec3{margin, margin, margin};
                    t_end = exit_distance(grown, origin, dir);
                }
                if (t_end > 0.0) {
                    const Vec3 b = origin + dir * t_end;
                    index.query(origin, b, d0, rate, [&](std::uint32_t id) { out.hits.emplace_back(id, key); });
                    if (!wedges.empty() && key.reflections <= params.max_reflections_before_diffraction) {
                        const double r_max = rate * (d0 + t_end);
                        Aabb seg;
                        seg.expand(origin);
                        seg.expand(b);
                        for (const EdgeRef& w : wedges) {
                            if (w.box.lo.x > seg.hi.x + r_max || w.box.hi.x < seg.lo.x - r_max ||
                                w.box.lo.y > seg.hi.y + r_max || w.box.hi.y < seg.lo.y - r_max ||
                                w.box.lo.z > seg.hi.z + r_max || w.box.hi.z < seg.lo.z - r_max) {
                                continue;
                            }
                            double s = 0.0;
                            double t = 0.0;
                            const Wedge& wg = wedge_list[w.id];
                            const double d2 = segment_segment(origin, b, wg.start, wg.end, s, t);
                            const double r = rate * (d0 + s * t_end);
                            if (d2 <= r * r) {
                                PathKey ek = key;
                                ek.wedge = static_cast<std::int32_t>(w.id);
                                out.edges.push_back(ek);
                            }
                        }
                    }
                }
                if (!hit || key.reflections >= params.max_reflections) break;
                key.surfaces[key.reflections++] = static_cast<std::uint32_t>(hit->surface);
                d0 += hit->distance;
                origin = hit->point;
                dir = reflect(dir, scene.surfaces()[hit->surface].normal);
            }
        }
        std::sort(out.hits.begin(), out.hits.end());
        out.hits.erase(std::unique(out.hits.begin(), out.hits.end()), out.hits.end());
        std::sort(out.edges.begin(), out.edges.end());
        out.edges.erase(std::unique(out.edges.begin(), out.edges.end()), out.edges.end());
    });

    CandidateSet set;
    set.ray_count = dirs.size();
    set.per_receiver.resize(receivers.size());
    for (const Chunk& ch : results) {
        for (const auto& [id, key] : ch.hits) set.per_receiver[id].push_back(key);
        set.edge_candidates.insert(set.edge_candidates.end(), ch.edges.begin(), ch.edges.end());
    }
    for (auto& v : set.per_receiver) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
    }
    std::sort(set.edge_candidates.begin(), set.edge_candidates.end());
    set.edge_candidates.erase(std::unique(set.edge_candidates.begin(), set.edge_candidates.end()),
                              set.edge_candidates.end());
    return set;
}

// --- exact path correction ---------------------------------------------------------

std::optional<PropagationPath> exact_path_correction(const PathKey& key, const Vec3& tx, const Vec3& rx,
                                                     const Scene& scene) {
    check_order(key);
    const auto surfaces = scene.surfaces();
    std::array<Vec3, kMaxReflectionOrder + 1> images;
    for (int k = 0; k < key.reflections; ++k) {
        if (key.surfaces[k] >= surfaces.size()) return std::nullopt;
    }
    image_chain(key, tx, scene, images);
    const Vec3& last_image = images[key.reflections];

    Vec3 target = rx;
    const Wedge* wedge = nullptr;
    if (key.wedge >= 0) {
        if (static_cast<std::size_t>(key.wedge) >= scene.wedges().size()) return std::nullopt;
        wedge = &scene.wedges()[key.wedge];
        // Fermat point on the edge line, in closed form.
        const Vec3& e = wedge->direction;
        const double t1 = dot(last_image - wedge->start, e);
        const double t2 = dot(rx - wedge->start, e);
        const double r1 = norm(last_image - wedge->start - e * t1);
        const double r2 = norm(rx - wedge->start - e * t2);
        if (r1 < 1e-9 || r2 < 1e-9) return std::nullopt;
        const double t = t1 + (t2 - t1) * r1 / (r1 + r2);
        if (t < 1e-9 || t > wedge->length - 1e-9) return std::nullopt;
        target = wedge->start + e * t;
    }

    std::array<Vec3, kMaxReflectionOrder> pts;
    if (!backtrack(key, scene, images, target, pts)) return std::nullopt;

    PropagationPath path;
    path.points.reserve(key.reflections + 3);
    path.interactions.push_back({InteractionKind::Emit, 0});
    path.points.push_back(tx);
    for (int k = 0; k < key.reflections; ++k) {
        path.interactions.push_back({InteractionKind::Reflect, key.surfaces[k]});
        path.points.push_back(pts[k]);
    }
    if (wedge) {
        path.interactions.push_back({InteractionKind::Diffract, static_cast<std::uint32_t>(key.wedge)});
        path.points.push_back(target);
    }
    path.interactions.push_back({InteractionKind::Receive, 0});
    path.points.push_back(rx);

    for (int k = 0; k < key.reflections; ++k) {
        if (!same_side(surfaces[key.surfaces[k]], path.points[k], path.points[k + 2])) return std::nullopt;
    }
    if (wedge) {
        const Vec3& q = target;
        const Vec3& src = path.points[path.points.size() - 3];
        const double limit = wedge->n * kPi + 1e-9;
        if (wedge->angle_of(src - q) > limit || wedge->angle_of(rx - q) > limit) return std::nullopt;
    }
    if (!chain_clear(path.points, scene)) return std::nullopt;
    finish(path);
    return path;
}

std::optional<PropagationPath> scatter_path(std::uint32_t tile_index, const ScatterTile& tile, const Vec3& tx,
                                            const Vec3& rx, const Scene& scene) {
    if (dot(tx - tile.center, tile.normal) <= 1e-9 || dot(rx - tile.center, tile.normal) <= 1e-9) return std::nullopt;
    if (scene.segment_blocked(tx, tile.center, kOcclusionEps) || scene.segment_blocked(tile.center, rx, kOcclusionEps)) {
        return std::nullopt;
    }
    PropagationPath p;
    p.interactions = {{InteractionKind::Emit, 0}, {InteractionKind::Scatter, tile_index}, {InteractionKind::Receive, 0}};
    p.points = {tx, tile.center, rx};
    finish(p);
    return p;
}

// --- fields --------------------------------------------------------------------

FieldVector path_field(const PropagationPath& path, const Transmitter& tx, const Scene& scene,
                       const FieldOptions& options) {
    const auto& pts = path.points;
    if (pts.size() < 2) return {};
    const double k = scene.wavenumber();
    const double foliage = foliage_factor(pts, scene);

    if (path.has(InteractionKind::Scatter)) {
        const std::uint32_t ti = path.interactions[1].index;
        if (ti >= options.tiles.size()) throw DomainError("scatter path references an unknown tile");
        return tile_field(options.tiles[ti], tx, pts.back(), options.scatter, k) * foliage;
    }

    const Vec3 d0 = normalized(pts[1] - pts[0]);
    const auto surfaces = scene.surfaces();
    const bool diffracted = path.has(InteractionKind::Diffract);
    const std::size_t n_before = diffracted ? pts.size() - 2 : pts.size() - 1;  // segments up to the edge
    double s_prime = 0.0;
    for (std::size_t i = 0; i < n_before; ++i) s_prime += distance(pts[i], pts[i + 1]);

    FieldVector e = launch_field(tx, d0, s_prime, s_prime, k);
    for (std::size_t i = 1; i < path.interactions.size(); ++i) {
        const Interaction& in = path.interactions[i];
        if (in.kind != InteractionKind::Reflect) continue;
        const Vec3 d_in = normalized(pts[i] - pts[i - 1]);
        e = apply_reflection(e, d_in, surfaces[in.index], scene, options.scatter);
    }
    if (diffracted) {
        const std::size_t qi = pts.size() - 2;
        const Wedge& w = scene.wedges()[path.interactions[qi].index];
        const Vec3 s_in = normalized(pts[qi] - pts[qi - 1]);
        const double s = distance(pts[qi], pts.back());
        const Vec3 s_out = (pts.back() - pts[qi]) / s;
        const auto ed = utd_diffraction(w, scene.materials()[w.face0_material], scene.materials()[w.facen_material],
                                        scene.frequency_hz(), s_in, s_out, s_prime, s);
        if (!ed) return {};
        const double spread = std::sqrt(s_prime / (s * (s + s_prime)));
        e = diffract_field(e, w.direction, s_in, s_out, ed->d) * (spread * std::exp(Complex{0.0, -k * s}));
    }
    return e * foliage;
}

double received_power_dbm(double e_rms, double wavelength) {
    const double watts = e_rms * e_rms * wavelength * wavelength / (4.0 * kPi * kFreeSpaceImpedance);
    return 10.0 * std::log10(watts * 1000.0);
}

ReceiverField total_field(std::span<const PropagationPath> paths, double wavelength, double threshold_dbm,
                          bool coherent) {
    ReceiverField out;
    out.path_count = static_cast<std::uint32_t>(paths.size());
    if (coherent) {
        FieldVector sum;
        for (const auto& p : paths) sum += p.field;
        out.e_rms = sum.norm();
    } else {
        double power = 0.0;
        for (const auto& p : paths) power += p.field.norm() * p.field.norm();
        out.e_rms = std::sqrt(power);
    }
    out.p_dbm = received_power_dbm(out.e_rms, wavelength);
    out.discarded = !(out.p_dbm >= threshold_dbm);
    if (out.discarded) {
        out.e_rms = 0.0;
        out.p_dbm = -std::numeric_limits<double>::infinity();
    }
    return out;
}

std::vector<PropagationPath> receiver_paths(const Scene& scene, const Transmitter& tx, const Vec3& rx,
                                            std::span<const PathKey> keys, std::span<const PathKey> edge_candidates,
                                            const TraceParams& params, const FieldOptions& options) {
    const auto lit = lit_tiles(scene, tx.position, options);
    const PathCollector collect{scene, tx, params, options, lit};
    std::vector<PropagationPath> out;
    collect.run(rx, keys, edge_candidates, [&](PropagationPath& p) { out.push_back(std::move(p)); });
    return out;
}

std::vector<ReceiverField> trace_transmitter(const Scene& scene, const Transmitter& tx,
                                             std::span<const Vec3> receivers, const TraceParams& params,
                                             const FieldOptions& options, int threads) {
    const CandidateSet cands = launch_rays(scene, tx, receivers, params, threads);
    const auto lit = lit_tiles(scene, tx.position, options);
    const PathCollector collect{scene, tx, params, options, lit};
    const double wavelength = scene.wavelength();
    std::vector<ReceiverField> fields(receivers.size());
    parallel_for(receivers.size(), threads, [&](std::size_t i) {
        FieldVector sum;
        double power = 0.0;
        std::uint32_t count = 0;
        collect.run(receivers[i], cands.per_receiver[i], cands.edge_candidates, [&](const PropagationPath& p) {
            sum += p.field;
            power += p.field.norm() * p.field.norm();
            ++count;
        });
        ReceiverField f;
        f.path_count = count;
        f.e_rms = params.coherent ? sum.norm() : std::sqrt(power);
        f.p_dbm = received_power_dbm(f.e_rms, wavelength);
        f.discarded = !(f.p_dbm >= params.rx_threshold_dbm);
        if (f.discarded) {
            f.e_rms = 0.0;
            f.p_dbm = -std::numeric_limits<double>::infinity();
        }
        fields[i] = f;
    });
    return fields;
}

std::vector<ReceiverField> combine_transmitters(std::span<const std::vector<ReceiverField>> grids, double wavelength,
                                                double threshold_dbm) {
    if (grids.empty()) return {};
    std::vector<ReceiverField> out(grids[0].size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        double power = 0.0;
        std::uint32_t count = 0;
        for (const auto& g : grids) {
            if (g.size() != out.size()) throw DomainError("transmitter grids differ in size");
            power += g[i].e_rms * g[i].e_rms;
            count += g[i].path_count;
        }
        ReceiverField f;
        f.e_rms = std::sqrt(power);
        f.path_count = count;
        f.p_dbm = received_power_dbm(f.e_rms, wavelength);
        f.discarded = !(f.p_dbm >= threshold_dbm);
        if (f.discarded) {
            f.e_rms = 0.0;
            f.p_dbm = -std::numeric_limits<double>::infinity();
        }
        out[i] = f;
    }
    return out;
}

}  // namespace v2xdose
