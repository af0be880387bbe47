#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "test_support.hpp"
#include "v2xdose/errors.hpp"
#include "v2xdose/scattering.hpp"

namespace v2xdose {
namespace {

ScatterTile unit_tile() { return {{0, 0, 0}, {0, 0, 1}, 4.0, 0}; }

Vec3 incident(double theta) { return {std::sin(theta), 0.0, -std::cos(theta)}; }

// Scattered power over the front hemisphere, 200 x 50 midpoint grid in (theta, phi).
double hemisphere_power(const ScatterTile& tile, const Vec3& in, double e_inc, const ScatterParams& p, double r) {
    const int nt = 200;
    const int np = 50;
    double sum = 0.0;
    for (int i = 0; i < nt; ++i) {
        const double th = (i + 0.5) * (kPi / 2) / nt;
        for (int j = 0; j < np; ++j) {
            const double ph = (j + 0.5) * 2.0 * kPi / np;
            const Vec3 d{std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th)};
            const double e = directive_scatter_field(tile, in, e_inc, d, r, p).total();
            sum += e * e * r * r * std::sin(th);
        }
    }
    return sum * (kPi / 2 / nt) * (2.0 * kPi / np);
}

TEST(DirectiveScatter, ZeroRoughnessScattersNothing) {
    ScatterParams p;
    p.S = 0.0;
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g;
    for (int i = 0; i < 100; ++i) {
        Vec3 d = normalized(Vec3{g(rng), g(rng), g(rng)});
        d.z = std::abs(d.z);
        EXPECT_EQ(directive_scatter_field(unit_tile(), incident(0.5), 1.0, d, 5.0, p).total(), 0.0);
    }
}

TEST(DirectiveScatter, LobePeaksAtSpecular) {
    const ScatterParams p;
    const Vec3 in = incident(0.6);
    const Vec3 spec = reflect(in, {0, 0, 1});
    const double peak = directive_scatter_field(unit_tile(), in, 1.0, spec, 5.0, p).total();
    std::mt19937_64 rng(4);
    std::normal_distribution<double> g;
    for (int i = 0; i < 1000; ++i) {
        Vec3 d = normalized(Vec3{g(rng), g(rng), g(rng)});
        d.z = std::abs(d.z);
        EXPECT_LE(directive_scatter_field(unit_tile(), in, 1.0, d, 5.0, p).total(), peak * (1.0 + 1e-12));
    }
    // At the peak the lobe factor is ((1 + 1) / 2)^alpha = 1.
    const double cos_i = std::cos(0.6);
    const double want = std::sqrt(p.S * p.S * 4.0 * cos_i / (lobe_normalization(p.alpha_R, 0.6) * 25.0));
    EXPECT_NEAR(peak, want, 1e-12);
}

TEST(DirectiveScatter, HemisphereIntegralIsSquaredRoughness) {
    // 10^4 directions; scattered power / (S^2 * intercepted power) = 1.
    const ScatterTile tile = unit_tile();
    for (int alpha : {1, 2, 4, 8}) {
        for (double deg : {0.0, 20.0, 45.0, 70.0, 85.0}) {
            ScatterParams p;
            p.alpha_R = alpha;
            const double th = deg * kPi / 180.0;
            const double e_inc = 1.7;
            const double intercepted = e_inc * e_inc * tile.area * std::cos(th);
            const double ratio = hemisphere_power(tile, incident(th), e_inc, p, 12.0) / (p.S * p.S * intercepted);
            EXPECT_NEAR(ratio, 1.0, 0.01) << "alpha " << alpha << " theta " << deg;
        }
    }
}

TEST(DirectiveScatter, PolarizationSplitConservesPower) {
    ScatterParams p;
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> k(0.0, 1.0);
    std::normal_distribution<double> g;
    for (int i = 0; i < 200; ++i) {
        p.K_xpol = k(rng);
        Vec3 d = normalized(Vec3{g(rng), g(rng), g(rng)});
        d.z = std::abs(d.z);
        const auto f = directive_scatter_field(unit_tile(), incident(0.4), 2.0, d, 7.0, p);
        EXPECT_NEAR(f.co_pol * f.co_pol + f.cross_pol * f.cross_pol, f.total() * f.total(), 1e-15);
        ScatterParams none = p;
        none.K_xpol = 0.0;
        EXPECT_NEAR(f.total(), directive_scatter_field(unit_tile(), incident(0.4), 2.0, d, 7.0, none).co_pol,
                    1e-12);
    }
}

TEST(DirectiveScatter, NothingBehindTheTile) {
    const ScatterParams p;
    EXPECT_EQ(directive_scatter_field(unit_tile(), incident(0.3), 1.0, {0, 0, -1}, 3.0, p).total(), 0.0);
    EXPECT_EQ(directive_scatter_field(unit_tile(), {0, 0, 1}, 1.0, {0, 0, 1}, 3.0, p).total(), 0.0);
}

TEST(SpecularAttenuation, Examples) {
    EXPECT_EQ(specular_attenuation(0.0), 1.0);
    EXPECT_EQ(specular_attenuation(1.0), 0.0);
    EXPECT_NEAR(specular_attenuation(0.45), 0.8930, 5e-5);
    EXPECT_NEAR(specular_attenuation(0.45), std::sqrt(1.0 - 0.2025), 1e-15);
    EXPECT_THROW(specular_attenuation(1.2), DomainError);
    for (double s = 0.0; s <= 1.0; s += 0.01) {
        const double a = specular_attenuation(s);
        EXPECT_NEAR(a * a + s * s, 1.0, 1e-15);
    }
}

TEST(FoliageDepth, Examples) {
    const std::vector<FoliageVolume> cyl{FoliageVolume::cylinder(0, 0, 2, 0, 10)};
    EXPECT_EQ(foliage_depth({10, 10, 1}, {20, 10, 1}, cyl), 0.0);
    EXPECT_NEAR(foliage_depth({-10, 0, 3}, {10, 0, 3}, cyl), 4.0, 1e-12);
    EXPECT_NEAR(foliage_depth({-10, 0, 3}, {0, 0, 3}, cyl), 2.0, 1e-12);
}

TEST(FoliageDepth, OverlappingBoxesMatchMonteCarlo) {
    const std::vector<FoliageVolume> boxes{FoliageVolume::make_box({0, 0, 0}, {6, 4, 5}),
                                           FoliageVolume::make_box({4, 1, 1}, {10, 6, 4}),
                                           FoliageVolume::cylinder(8, 3, 1.5, 0, 6)};
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_real_distribution<double> x(-3.0, 13.0);
    std::uniform_real_distribution<double> z(0.0, 5.0);
    int nonzero = 0;
    for (int trial = 0; trial < 20; ++trial) {
        const Vec3 a{x(rng), -2.0, z(rng)};
        const Vec3 b{x(rng), 8.0, z(rng)};
        const int n = 10000;
        int inside = 0;
        for (int i = 0; i < n; ++i) {
            const Vec3 p = a + (b - a) * ((i + u(rng)) / n);
            bool hit = false;
            for (const auto& v : boxes) hit = hit || v.contains(p);
            inside += hit ? 1 : 0;
        }
        const double mc = distance(a, b) * inside / n;
        const double got = foliage_depth(a, b, boxes);
        EXPECT_NEAR(got, mc, std::max(0.01 * mc, 0.02)) << trial;
        nonzero += got > 0.5 ? 1 : 0;
    }
    EXPECT_GT(nonzero, 5);
}

TEST(Weissberger, Examples) {
    EXPECT_EQ(weissberger_loss(5.9, 0.0), 0.0);
    EXPECT_NEAR(weissberger_loss(5.9, 14.0), 0.45 * std::pow(5.9, 0.284) * 14.0, 1e-12);
    EXPECT_NEAR(weissberger_loss(5.9, 14.0), 10.43, 0.01);
    EXPECT_NEAR(weissberger_loss(5.9, 100.0), 1.33 * std::pow(5.9, 0.284) * std::pow(100.0, 0.588), 1e-12);
    EXPECT_NEAR(weissberger_loss(5.9, 100.0), 33.0, 0.05);
    EXPECT_THROW(weissberger_loss(0.0, 1.0), DomainError);
    EXPECT_THROW(weissberger_loss(5.9, -1.0), DomainError);
}

TEST(Weissberger, BranchNearlyContinuous) {
    const double below = weissberger_loss(5.9, std::nextafter(14.0, 0.0));
    const double above = weissberger_loss(5.9, std::nextafter(14.0, 100.0));
    EXPECT_LE(std::abs(above - below), 0.1);
}

TEST(Weissberger, MonotoneInDepthAndFrequency) {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> f(0.23, 95.0);
    std::uniform_real_distribution<double> d(0.0, 400.0);
    for (int i = 0; i < 1000; ++i) {
        double f1 = f(rng), f2 = f(rng), d1 = d(rng), d2 = d(rng);
        if (f1 > f2) std::swap(f1, f2);
        if (d1 > d2) std::swap(d1, d2);
        EXPECT_LE(weissberger_loss(f1, d1), weissberger_loss(f1, d2));
        EXPECT_LE(weissberger_loss(f1, d1), weissberger_loss(f2, d1));
    }
}

TEST(Weissberger, ClampsBeyondModelRange) {
    EXPECT_EQ(weissberger_loss(5.9, 1000.0), weissberger_loss(5.9, 400.0));
}

TEST(TileWalls, TilesCoverEveryBuildingWall) {
    const Scene s = load_scene(testing::data_dir() / "intersection.scene");
    const auto tiles = tile_walls(s, 2.0, 99);
    std::vector<double> area(s.surfaces().size(), 0.0);
    for (const auto& t : tiles) {
        const Surface& f = s.surfaces()[t.surface];
        ASSERT_EQ(f.tag, SurfaceTag::BuildingWall);
        EXPECT_NEAR(dot(f.normal, t.center) - f.plane_offset, 0.0, 1e-9);
        EXPECT_TRUE(f.contains(t.center, 1e-9));
        EXPECT_LE(t.area, 4.0 + 1e-9);
        area[t.surface] += t.area;
    }
    for (std::size_t i = 0; i < area.size(); ++i) {
        const Surface& f = s.surfaces()[i];
        // Roofs and floors are not walls.
        const bool wall = f.tag == SurfaceTag::BuildingWall && std::abs(f.normal.z) < 0.5;
        if (wall) EXPECT_NEAR(area[i], f.area(), 1e-6 * f.area());
    }
    const auto again = tile_walls(s, 2.0, 99);
    ASSERT_EQ(again.size(), tiles.size());
    for (std::size_t i = 0; i < tiles.size(); ++i) EXPECT_EQ(again[i].center, tiles[i].center);
    const auto other = tile_walls(s, 2.0, 100);
    EXPECT_NE(other[0].center, tiles[0].center);
}

TEST(ScatterParams, Validation) {
    ScatterParams p;
    EXPECT_NO_THROW(p.validate());
    p.S = 1.5;
    EXPECT_THROW(p.validate(), ValidationError);
    p = {};
    p.K_xpol = -0.1;
    EXPECT_THROW(p.validate(), ValidationError);
    p = {};
    p.tile_size = 0.0;
    EXPECT_THROW(p.validate(), ValidationError);
}

}  // namespace
}  // namespace v2xdose
