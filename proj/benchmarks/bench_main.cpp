#include <benchmark/benchmark.h>

#include <filesystem>
#include <random>
#include <vector>

#include "v2xdose/fresnel.hpp"
#include "v2xdose/raytracer.hpp"
#include "v2xdose/scattering.hpp"
#include "v2xdose/scene.hpp"

using namespace v2xdose;

namespace {

const Scene& bundled() {
    static const Scene s = load_scene(std::filesystem::path(V2XDOSE_BENCH_DATA_DIR) / "intersection.scene");
    return s;
}

std::vector<Vec3> receivers(double spacing) {
    std::vector<Vec3> out;
    for (double y = 0.0; y <= 90.0; y += spacing)
        for (double x = 0.0; x <= 84.0; x += spacing)
            if (!bundled().inside_solid({x, y, 1.5})) out.push_back({x, y, 1.5});
    return out;
}

void BM_RayIntersect(benchmark::State& state) {
    const Scene& s = bundled();
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g;
    std::vector<Vec3> dirs(4096);
    for (auto& d : dirs) d = normalized(Vec3{g(rng), g(rng), g(rng)});
    const Vec3 origin{40.5, 22.5, 1.7};
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(s.ray_intersect(origin, dirs[i++ & 4095]));
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_RayIntersect);

void BM_SlabReflection(benchmark::State& state) {
    const Complex eps = complex_permittivity({"concrete", MaterialKind::OneLayerDielectric, 0.12, 5.31, 0.3}, 5.9e9);
    const double k0 = 2.0 * kPi * 5.9e9 / kSpeedOfLight;
    double theta = 0.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(slab_reflection(eps, theta, Polarization::TM, 0.3, k0));
        theta = theta > 1.5 ? 0.0 : theta + 1e-3;
    }
}
BENCHMARK(BM_SlabReflection);

void BM_LaunchRays(benchmark::State& state) {
    const auto rx = receivers(3.0);
    const Transmitter tx = Transmitter::v2v("blue", 40.5, 22.5);
    TraceParams p;
    p.ray_spacing_deg = static_cast<double>(state.range(0)) / 10.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(launch_rays(bundled(), tx, rx, p, 1));
    }
}
BENCHMARK(BM_LaunchRays)->Arg(20)->Arg(10)->Arg(5)->Unit(benchmark::kMillisecond);

void BM_TraceTransmitter(benchmark::State& state) {
    const auto rx = receivers(6.0);
    const Transmitter tx = Transmitter::v2v("blue", 40.5, 22.5);
    TraceParams p;
    p.ray_spacing_deg = 1.0;
    const auto tiles = tile_walls(bundled(), 2.0, 1);
    FieldOptions o;
    o.tiles = tiles;
    for (auto _ : state) {
        benchmark::DoNotOptimize(trace_transmitter(bundled(), tx, rx, p, o, 1));
    }
}
BENCHMARK(BM_TraceTransmitter)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
