#include "v2xdose/scattering.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <utility>

#include "v2xdose/errors.hpp"

namespace v2xdose {

namespace {

constexpr double kTableStepDeg = 0.25;

// Gauss-Legendre nodes/weights on [0, 1].
void gauss_legendre(int m, std::vector<double>& x, std::vector<double>& w) {
    x.resize(m);
    w.resize(m);
    for (int i = 0; i < m; ++i) {
        double z = std::cos(kPi * (i + 0.75) / (m + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0;
            double p1 = z;
            for (int j = 2; j <= m; ++j) {
                const double p2 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p0) / j;
                p0 = p1;
                p1 = p2;
            }
            dp = m * (z * p1 - p0) / (z * z - 1.0);
            const double dz = p1 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-15) break;
        }
        x[i] = 0.5 * (1.0 - z);
        w[i] = 1.0 / ((1.0 - z * z) * dp * dp);
    }
}

// The lobe is a polynomial of degree alpha in (mu, sqrt(1-mu^2) cos phi), so
// these rules integrate it exactly up to rounding.
double lobe_integral(int alpha, double theta_i) {
    const int m_mu = alpha / 2 + 4;
    const int m_phi = 2 * alpha + 4;
    std::vector<double> mu;
    std::vector<double> wmu;
    gauss_legendre(m_mu, mu, wmu);
    const double st = std::sin(theta_i);
    const double ct = std::cos(theta_i);
    double total = 0.0;
    for (int i = 0; i < m_mu; ++i) {
        const double sm = std::sqrt(1.0 - mu[i] * mu[i]);
        double ring = 0.0;
        for (int j = 0; j < m_phi; ++j) {
            const double phi = 2.0 * kPi * (j + 0.5) / m_phi;
            // Specular direction (st, 0, ct); scatter direction (sm cos phi, sm sin phi, mu).
            const double cos_psi = st * sm * std::cos(phi) + ct * mu[i];
            ring += std::pow(0.5 * (1.0 + cos_psi), alpha);
        }
        total += wmu[i] * ring * (2.0 * kPi / m_phi);
    }
    return total;
}

const std::vector<double>& lobe_table(int alpha) {
    static std::mutex mu;
    static std::map<int, std::unique_ptr<std::vector<double>>> cache;
    const std::lock_guard lock(mu);
    auto& slot = cache[alpha];
    if (!slot) {
        const int n = static_cast<int>(std::lround(90.0 / kTableStepDeg)) + 1;
        auto table = std::make_unique<std::vector<double>>(n);
        for (int i = 0; i < n; ++i) (*table)[i] = lobe_integral(alpha, i * kTableStepDeg * kPi / 180.0);
        slot = std::move(table);
    }
    return *slot;
}

// Uniform double in [0, 1) from the top 53 bits.
double unit_double(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

using Poly2 = std::vector<std::pair<double, double>>;

Poly2 clip_half(const Poly2& in, int axis, double bound, bool keep_above) {
    Poly2 out;
    const auto inside = [&](const std::pair<double, double>& p) {
        const double v = axis == 0 ? p.first : p.second;
        return keep_above ? v >= bound : v <= bound;
    };
    for (std::size_t i = 0; i < in.size(); ++i) {
        const auto& a = in[i];
        const auto& b = in[(i + 1) % in.size()];
        const bool ia = inside(a);
        const bool ib = inside(b);
        if (ia) out.push_back(a);
        if (ia != ib) {
            const double va = axis == 0 ? a.first : a.second;
            const double vb = axis == 0 ? b.first : b.second;
            const double t = (bound - va) / (vb - va);
            out.emplace_back(a.first + t * (b.first - a.first), a.second + t * (b.second - a.second));
        }
    }
    return out;
}

// Signed area and centroid of a simple polygon.
std::pair<double, std::pair<double, double>> area_centroid(const Poly2& p) {
    double a = 0.0;
    double cx = 0.0;
    double cy = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const auto& [x0, y0] = p[i];
        const auto& [x1, y1] = p[(i + 1) % p.size()];
        const double c = x0 * y1 - x1 * y0;
        a += c;
        cx += (x0 + x1) * c;
        cy += (y0 + y1) * c;
    }
    a *= 0.5;
    if (std::abs(a) < 1e-12) return {0.0, {0.0, 0.0}};
    return {a, {cx / (6.0 * a), cy / (6.0 * a)}};
}

bool inside_convex(const Poly2& p, double x, double y) {
    for (std::size_t i = 0; i < p.size(); ++i) {
        const auto& [x0, y0] = p[i];
        const auto& [x1, y1] = p[(i + 1) % p.size()];
        if ((x1 - x0) * (y - y0) - (y1 - y0) * (x - x0) < 0.0) return false;
    }
    return true;
}

}  // namespace

void ScatterParams::validate() const {
    if (!(S >= 0.0 && S <= 1.0)) throw ValidationError("scatter.S must be in [0, 1]");
    if (!(K_xpol >= 0.0 && K_xpol <= 1.0)) throw ValidationError("scatter.K_xpol must be in [0, 1]");
    if (alpha_R < 1 || alpha_R > 64) throw ValidationError("scatter.alpha_R must be an integer in [1, 64]");
    if (!(tile_size > 0.0)) throw ValidationError("scatter.tile_size must be positive");
}

double ScatteredField::total() const { return std::hypot(co_pol, cross_pol); }

double lobe_normalization(int alpha, double theta_i) {
    if (alpha < 1) throw DomainError("lobe exponent must be >= 1");
    const auto& table = lobe_table(alpha);
    const double pos = std::clamp(theta_i * 180.0 / kPi, 0.0, 90.0) / kTableStepDeg;
    const auto i = std::min(static_cast<std::size_t>(pos), table.size() - 2);
    const double f = pos - static_cast<double>(i);
    return table[i] * (1.0 - f) + table[i + 1] * f;
}

ScatteredField directive_scatter_field(const ScatterTile& tile, const Vec3& incident_dir, double incident_field,
                                       const Vec3& scatter_dir, double r_s, const ScatterParams& p) {
    if (!(r_s > 0.0)) throw DomainError("scatter distance must be positive");
    const double cos_i = -dot(incident_dir, tile.normal);
    const double cos_s = dot(scatter_dir, tile.normal);
    if (cos_i <= 0.0 || cos_s <= 0.0 || p.S == 0.0) return {};
    const double theta_i = std::acos(std::min(cos_i, 1.0));
    const Vec3 specular = reflect(incident_dir, tile.normal);
    const double cos_psi = std::clamp(dot(scatter_dir, specular), -1.0, 1.0);
    const double lobe = std::pow(0.5 * (1.0 + cos_psi), p.alpha_R);
    const double power = p.S * p.S * incident_field * incident_field * tile.area * cos_i /
                         (lobe_normalization(p.alpha_R, theta_i) * r_s * r_s) * lobe;
    return {std::sqrt((1.0 - p.K_xpol) * power), std::sqrt(p.K_xpol * power)};
}

double specular_attenuation(double S) {
    if (!(S >= 0.0 && S <= 1.0)) throw DomainError("scattering factor must be in [0, 1]");
    return std::sqrt(1.0 - S * S);
}

double foliage_depth(const Vec3& a, const Vec3& b, std::span<const FoliageVolume> foliage) {
    std::vector<std::pair<double, double>> spans;
    for (const auto& v : foliage) {
        if (auto c = v.clip(a, b)) spans.push_back(*c);
    }
    if (spans.empty()) return 0.0;
    std::sort(spans.begin(), spans.end());
    double total = 0.0;
    double lo = spans[0].first;
    double hi = spans[0].second;
    for (std::size_t i = 1; i < spans.size(); ++i) {
        if (spans[i].first > hi) {
            total += hi - lo;
            lo = spans[i].first;
            hi = spans[i].second;
        } else {
            hi = std::max(hi, spans[i].second);
        }
    }
    total += hi - lo;
    return total * distance(a, b);
}

double weissberger_loss(double f_ghz, double depth_m) {
    if (!(f_ghz > 0.0)) throw DomainError("weissberger_loss: frequency must be positive");
    if (!(depth_m >= 0.0)) throw DomainError("weissberger_loss: depth must be non-negative");
    if (depth_m > 400.0) {
        static std::atomic<bool> warned{false};
        if (!warned.exchange(true)) {
            std::cerr << "warning: foliage depth " << depth_m << " m exceeds the 400 m model range; clamped\n";
        }
        depth_m = 400.0;
    }
    const double ff = std::pow(f_ghz, 0.284);
    if (depth_m <= 14.0) return 0.45 * ff * depth_m;
    return 1.33 * ff * std::pow(depth_m, 0.588);
}

std::vector<ScatterTile> tile_walls(const Scene& scene, double tile_size, std::uint64_t seed) {
    if (!(tile_size > 0.0)) throw DomainError("tile size must be positive");
    std::vector<ScatterTile> tiles;
    const auto surfaces = scene.surfaces();
    for (std::size_t si = 0; si < surfaces.size(); ++si) {
        const Surface& s = surfaces[si];
        if (s.tag != SurfaceTag::BuildingWall) continue;
        std::mt19937_64 rng(seed ^ (0x9e3779b97f4a7c15ULL * (si + 1)));
        const Vec3 origin = s.vertices[0];
        const Vec3 u = normalized(s.vertices[1] - s.vertices[0]);
        const Vec3 w = cross(s.normal, u);
        Poly2 poly;
        double umin = 1e300, umax = -1e300, wmin = 1e300, wmax = -1e300;
        for (const Vec3& v : s.polygon()) {
            const double pu = dot(v - origin, u);
            const double pw = dot(v - origin, w);
            poly.emplace_back(pu, pw);
            umin = std::min(umin, pu);
            umax = std::max(umax, pu);
            wmin = std::min(wmin, pw);
            wmax = std::max(wmax, pw);
        }
        const int nu = std::max(1, static_cast<int>(std::ceil((umax - umin) / tile_size - 1e-9)));
        const int nw = std::max(1, static_cast<int>(std::ceil((wmax - wmin) / tile_size - 1e-9)));
        for (int j = 0; j < nw; ++j) {
            for (int i = 0; i < nu; ++i) {
                const double u0 = umin + i * tile_size;
                const double w0 = wmin + j * tile_size;
                Poly2 cell = clip_half(poly, 0, u0, true);
                cell = clip_half(cell, 0, u0 + tile_size, false);
                cell = clip_half(cell, 1, w0, true);
                cell = clip_half(cell, 1, w0 + tile_size, false);
                const double ju = unit_double(rng) - 0.5;
                const double jw = unit_double(rng) - 0.5;
                if (cell.size() < 3) continue;
                const auto [area, c] = area_centroid(cell);
                if (area < 1e-9) continue;
                double cu = c.first + 0.5 * tile_size * 0.5 * ju;
                double cw = c.second + 0.5 * tile_size * 0.5 * jw;
                if (!inside_convex(cell, cu, cw)) {
                    cu = c.first;
                    cw = c.second;
                }
                tiles.push_back({origin + u * cu + w * cw, s.normal, area, si});
            }
        }
    }
    return tiles;
}

}  // namespace v2xdose
