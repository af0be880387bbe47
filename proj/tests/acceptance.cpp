// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "half_plane.hpp"
#include "json.hpp"
#include "test_support.hpp"
#include "v2xdose/analysis.hpp"
#include "v2xdose/commands.hpp"
#include "v2xdose/dosimetry.hpp"
#include "v2xdose/grid_io.hpp"
#include "v2xdose/raytracer.hpp"
#include "v2xdose/scattering.hpp"

using namespace v2xdose;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void check(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << " [failed: " << what << "]";
        }
    }
};

std::string fmt(double v, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

Transmitter dipole_tx(const Vec3& p) {
    Transmitter t;
    t.id = "tx";
    t.position = p;
    t.input_power_w = dbm_to_watts(33.0);
    t.peak_gain_dbi = 0.0;
    return t;
}

TraceParams params(double spacing, int reflections) {
    TraceParams p;
    p.ray_spacing_deg = spacing;
    p.max_reflections = reflections;
    return p;
}

void criterion1(Outcome& o) {
    const auto duke = *find_builtin("Duke");
    const auto ella = *find_builtin("Ella");
    const auto nina = *find_builtin("Nina");
    const double d = wbsar(9.0, duke);
    const double e = wbsar(4.3, ella);
    const double n = wbsar(1.9, nina);
    o.check(std::abs(d / 4.9e-4 - 1.0) <= 0.02, "Duke");
    o.check(std::abs(e / 1.2e-4 - 1.0) <= 0.05, "Ella");
    o.check(std::abs(n / 0.4e-5 - 1.0) <= 0.12, "Nina");
    o.detail << "Duke " << fmt(d) << ", Ella " << fmt(e) << ", Nina " << fmt(n) << " W/kg";
}

void criterion2(Outcome& o) {
    const Scene s = testing::empty_scene();
    const Transmitter tx = dipole_tx({0, 0, 1.7});
    std::vector<Vec3> rx;
    for (int i = 0; i < 50; ++i) {
        const double d = 1.0 + 99.0 * i / 49.0;
        rx.push_back({d * std::cos(0.7 * i), d * std::sin(0.7 * i), 1.7});
    }
    const auto f = trace_transmitter(s, tx, rx, params(0.5, 6), {});
    const double p = tx.input_power_w;
    double worst_rms = 0.0, worst_peak = 0.0, ed_min = 1e300, ed_max = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        const double d = distance(rx[i], tx.position);
        worst_rms = std::max(worst_rms, std::abs(f[i].e_rms / (std::sqrt(30.0 * p) / d) - 1.0));
        worst_peak = std::max(worst_peak, std::abs(std::sqrt(2.0) * f[i].e_rms / (std::sqrt(60.0 * p) / d) - 1.0));
        ed_min = std::min(ed_min, f[i].e_rms * d);
        ed_max = std::max(ed_max, f[i].e_rms * d);
    }
    o.check(worst_rms <= 1e-3, "E_rms vs sqrt(30P)/d");
    o.check(worst_peak <= 1e-3, "peak vs sqrt(60P)/d");
    o.check(ed_max / ed_min - 1.0 <= 1e-3, "E*d constant");
    o.detail << "max rel err " << fmt(worst_rms, 3) << " (RMS), " << fmt(worst_peak, 3) << " (peak = sqrt2 RMS), E*d spread "
             << fmt(ed_max / ed_min - 1.0, 3);
}

void criterion3(Outcome& o) {
    const Scene s = testing::pec_ground();
    const Transmitter tx = dipole_tx({0, 0, 1.7});
    const double k = s.wavenumber();
    std::vector<Vec3> rx;
    for (int i = 0; i < 50; ++i) rx.push_back({2.0 + 2.0 * i, 0.0, 1.7});
    const auto f = trace_transmitter(s, tx, rx, params(0.5, 6), {});
    auto dipole = [&](const Vec3& src, const Vec3& obs) {
        const Vec3 d = obs - src;
        const double r = norm(d);
        const Vec3 u = d / r;
        const Vec3 theta = normalized(dot(u, Vec3{0, 0, 1}) * u - Vec3{0, 0, 1});
        return std::polar(std::sqrt(30.0 * tx.input_power_w * tx.gain_toward(u)) / r, -k * r) * theta;
    };
    double worst = 0.0;
    int compared = 0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        const FieldVector direct = dipole(tx.position, rx[i]);
        const double want = (direct + dipole({0, 0, -1.7}, rx[i])).norm();
        if (want < 1e-2 * direct.norm()) continue;
        ++compared;
        worst = std::max(worst, std::abs(f[i].e_rms / want - 1.0));
    }
    o.check(worst <= 0.01, "1% bound");
    o.check(compared >= 45, "too many nulls excluded");
    o.detail << compared << " ranges, max rel err " << fmt(worst, 3);
}

void criterion4(Outcome& o) {
    const Scene s = testing::scene_from(
        "[materials]\nasphalt DHS 0 5.72\nconcrete OLD 0.12 5.31 0.3\n[surfaces]\n"
        "pavement asphalt -10 0 0  60 0 0  60 20 0  -10 20 0\n"
        "other concrete -10 0 0  -10 0 15  60 0 15  60 0 0\n"
        "other concrete -10 20 0  60 20 0  60 20 15  -10 20 15\n"
        "other concrete 60 0 0  60 0 15  60 20 15  60 20 0\n");
    const Transmitter tx = dipole_tx({5, 8, 1.7});
    std::vector<Vec3> rx;
    for (int i = 0; i < 10; ++i) rx.push_back({6.0 + 5.0 * i, 2.5 + 1.6 * i, 1.5});
    const auto fine = launch_rays(s, tx, rx, params(0.2, 4));
    const auto rough = launch_rays(s, tx, rx, params(1.0, 4));
    auto image_length = [&](const PathKey& key, const Vec3& r) {
        Vec3 img = tx.position;
        for (auto idx : key.reflection_surfaces()) {
            const Surface& f = s.surfaces()[idx];
            img = img - 2.0 * (dot(f.normal, img) - f.plane_offset) * f.normal;
        }
        return distance(img, r);
    };
    double worst = 0.0;
    std::size_t paths = 0, shared = 0, mismatched = 0;
    for (std::size_t r = 0; r < rx.size(); ++r) {
        std::map<PathKey, PropagationPath> fine_paths;
        for (const auto& key : fine.per_receiver[r]) {
            if (key.wedge >= 0) continue;
            if (auto p = exact_path_correction(key, tx.position, rx[r], s)) {
                worst = std::max(worst, std::abs(p->total_length - image_length(key, rx[r])));
                fine_paths.emplace(key, *p);
                ++paths;
            }
        }
        for (const auto& key : rough.per_receiver[r]) {
            if (key.wedge >= 0) continue;
            auto p = exact_path_correction(key, tx.position, rx[r], s);
            if (!p) continue;
            worst = std::max(worst, std::abs(p->total_length - image_length(key, rx[r])));
            ++paths;
            auto it = fine_paths.find(key);
            if (it == fine_paths.end() || it->second.points != p->points || it->second.total_length != p->total_length) {
                ++mismatched;
            } else {
                ++shared;
            }
        }
    }
    o.check(worst <= 1e-6, "length vs image construction");
    o.check(mismatched == 0, "0.2 vs 1.0 deg corrected paths differ");
    o.check(shared > 0, "no shared sequences");
    o.detail << paths << " specular paths, max length error " << fmt(worst, 3) << " m, " << shared
             << " sequences identical at 0.2 and 1.0 deg";
}

void criterion5(Outcome& o) {
    const ScatterTile tile{{0, 0, 0}, {0, 0, 1}, 4.0, 0};
    double worst = 0.0;
    for (int alpha : {1, 2, 4, 8}) {
        for (double deg : {0.0, 30.0, 60.0, 80.0}) {
            ScatterParams p;
            p.alpha_R = alpha;
            const double th = deg * kPi / 180.0;
            const Vec3 in{std::sin(th), 0.0, -std::cos(th)};
            const int nt = 200, np = 50;
            double sum = 0.0;
            for (int i = 0; i < nt; ++i) {
                const double t = (i + 0.5) * (kPi / 2) / nt;
                for (int j = 0; j < np; ++j) {
                    const double ph = (j + 0.5) * 2.0 * kPi / np;
                    const Vec3 d{std::sin(t) * std::cos(ph), std::sin(t) * std::sin(ph), std::cos(t)};
                    const double e = directive_scatter_field(tile, in, 1.0, d, 10.0, p).total();
                    sum += e * e * 100.0 * std::sin(t);
                }
            }
            sum *= (kPi / 2 / nt) * (2.0 * kPi / np);
            worst = std::max(worst, std::abs(sum / (p.S * p.S * tile.area * std::cos(th)) - 1.0));
        }
    }
    const double a = specular_attenuation(0.45);
    o.check(worst <= 0.01, "hemisphere fraction");
    o.check(std::lround(a * 1e4) == 8930, "specular_attenuation(0.45)");
    o.detail << "max quadrature deviation " << fmt(worst, 3) << ", specular_attenuation(0.45) = " << fmt(a, 6);
}

void criterion6(Outcome& o) {
    const double l14 = weissberger_loss(5.9, 14.0);
    const double jump = std::abs(weissberger_loss(5.9, std::nextafter(14.0, 100.0)) -
                                 weissberger_loss(5.9, std::nextafter(14.0, 0.0)));
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> f(0.23, 95.0), d(0.0, 400.0);
    int violations = 0;
    for (int i = 0; i < 1000; ++i) {
        double f1 = f(rng), f2 = f(rng), d1 = d(rng), d2 = d(rng);
        if (f1 > f2) std::swap(f1, f2);
        if (d1 > d2) std::swap(d1, d2);
        if (weissberger_loss(f1, d1) > weissberger_loss(f1, d2)) ++violations;
        if (weissberger_loss(f1, d1) > weissberger_loss(f2, d1)) ++violations;
    }
    o.check(std::abs(l14 - 10.43) <= 0.01, "L(5.9 GHz, 14 m)");
    o.check(jump <= 0.1, "branch jump");
    o.check(violations == 0, "monotonicity");
    o.detail << "L(14 m) = " << fmt(l14, 5) << " dB, jump " << fmt(jump, 3) << " dB, " << violations
             << " monotonicity violations in 1000 pairs";
}

void criterion7(Outcome& o) {
    const double lambda = kSpeedOfLight / 5.9e9;
    const double k = 2.0 * kPi / lambda;
    const double rho = 10.0 * lambda;
    double worst = 0.0, jump = 0.0;
    for (double incidence : {30.0, 60.0, 90.0}) {
        const double pp = incidence * kPi / 180.0;
        for (int i = 0; i < 20; ++i) {
            const double phi = (5.0 + i * 350.0 / 19.0) * kPi / 180.0;
            const Complex exact = testing::wedge_series(2.0, k * rho, phi, pp, true);
            worst = std::max(worst, std::abs(testing::half_plane_utd_soft(k, rho, phi, pp) - exact) / std::abs(exact));
        }
        const double sb = kPi + pp;
        const double lit = std::abs(testing::half_plane_utd_soft(k, rho, sb - 1e-9, pp));
        const double dark = std::abs(testing::half_plane_utd_soft(k, rho, sb + 1e-9, pp));
        jump = std::max(jump, std::abs(lit - dark) / lit);
    }
    o.check(worst <= 0.10, "series comparison");
    o.check(jump < 0.02, "shadow boundary");
    o.detail << "max rel err " << fmt(worst, 3) << " at 20 angles x 3 incidences, shadow-boundary jump " << fmt(jump, 3);
}

double reference_percentile(std::vector<double> v, double p) {
    std::sort(v.begin(), v.end());
    const double h = p * static_cast<double>(v.size() - 1);
    const std::size_t i = static_cast<std::size_t>(h);
    if (i + 1 >= v.size()) return v.back();
    return v[i] + (h - static_cast<double>(i)) * (v[i + 1] - v[i]);
}

double reference_skewness(const std::vector<double>& v) {
    const double n = static_cast<double>(v.size());
    double sum = 0.0;
    for (double x : v) sum += x;
    const double mean = sum / n;
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    const double sd = std::sqrt(ss / (n - 1.0));
    if (sd == 0.0) return 0.0;
    double acc = 0.0;
    for (double x : v) {
        const double z = (x - mean) / sd;
        acc += z * z * z;
    }
    return n / ((n - 1.0) * (n - 2.0)) * acc;
}

void criterion8(Outcome& o) {
    std::mt19937_64 rng(8);
    std::uniform_int_distribution<int> size(3, 5000);
    std::lognormal_distribution<double> ln(-9.0, 1.2);
    int mismatches = 0;
    for (int set = 0; set < 100; ++set) {
        std::vector<double> v(size(rng));
        for (auto& x : v) x = ln(rng);
        const StatSummary s = summarize(v);
        const bool same = s.min == *std::min_element(v.begin(), v.end()) &&
                          s.max == *std::max_element(v.begin(), v.end()) && s.p25 == reference_percentile(v, 0.25) &&
                          s.median == reference_percentile(v, 0.5) && s.p75 == reference_percentile(v, 0.75) &&
                          s.p99 == reference_percentile(v, 0.99) && s.skewness == reference_skewness(v);
        mismatches += same ? 0 : 1;
    }
    std::uniform_real_distribution<double> u(0.0, 10.0);
    double worst_sym = 0.0;
    for (int set = 0; set < 100; ++set) {
        std::vector<double> v;
        for (int i = 0; i < 300; ++i) {
            const double a = u(rng);
            v.push_back(a);
            v.push_back(-a);
        }
        std::shuffle(v.begin(), v.end(), rng);
        worst_sym = std::max(worst_sym, std::abs(summarize(v).skewness));
    }
    o.check(mismatches == 0, "oracle mismatch");
    o.check(worst_sym < 1e-12, "symmetric skewness");
    o.detail << mismatches << " of 100 sets differ, max |skew| on symmetric sets " << fmt(worst_sym, 3);
}

struct ScenarioRun {
    fs::path dir;
    double seconds = 0.0;
};

void criterion9(Outcome& o, const fs::path& work) {
    std::vector<ScenarioRun> runs;
    double slowest = 0.0;
    for (int k = 1; k <= 3; ++k) {
        RunConfig cfg = load_run_config(scenario_config_path(testing::data_dir(), k));
        cfg.trace.ray_spacing_deg = 0.5;
        ScenarioRun r;
        r.dir = work / ("scenario" + std::to_string(k));
        const auto t0 = std::chrono::steady_clock::now();
        cmd_simulate(cfg, r.dir, {0, nullptr});
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        slowest = std::max(slowest, r.seconds);
        runs.push_back(r);
    }
    const auto humans = builtin_models();
    const DlimResult d = cmd_dlim(runs[0].dir, humans, {}, runs[0].dir);
    std::vector<fs::path> dirs;
    for (const auto& r : runs) dirs.push_back(r.dir);
    cmd_report(dirs, runs[0].dir / "dlim.json", humans, work);
    const json report = json::parse(read_text_file(work / "report.json"));

    // p99[m][s], median[m][s] over the region of interest.
    std::map<std::string, std::vector<double>> p99, median;
    bool skew_positive = true;
    for (const auto& run : report["runs"]) {
        for (const auto& m : run["models"]) {
            const auto& s = m["summary"];
            p99[m["name"]].push_back(s["p99"].get<double>());
            median[m["name"]].push_back(s["median"].get<double>());
            skew_positive = skew_positive && s["skewness"].get<double>() > 0.0;
        }
    }

    bool monotone = true;
    double worst_ratio = 0.0;
    for (const auto& h : humans) {
        const auto& p = p99[h.name];
        monotone = monotone && p[0] < p[1] && p[1] < p[2];
        worst_ratio = std::max(worst_ratio, median[h.name][1] / median[h.name][0]);
    }
    double nina_factor = 1e300;
    for (int s = 0; s < 3; ++s) {
        nina_factor = std::min({nina_factor, p99["Duke"][s] / p99["Nina"][s], p99["Ella"][s] / p99["Nina"][s]});
    }

    // (d) over every sample of every grid, not just the region of interest.
    double max_sar = 0.0, all_skew_min = 1e300;
    for (const auto& r : runs) {
        const RunManifest m = read_manifest(r.dir);
        for (const auto& h : humans) {
            std::vector<double> values;
            for (const auto& v : wbsar_grid(load_layer_for(r.dir, m, h), h)) {
                if (v) values.push_back(*v);
            }
            max_sar = std::max(max_sar, *std::max_element(values.begin(), values.end()));
            all_skew_min = std::min(all_skew_min, summarize(values).skewness);
        }
    }
    const double margin = 10.0 * std::log10(0.08 / max_sar);

    o.check(monotone, "(a) p99 increases 1 -> 2 -> 3");
    o.check(worst_ratio <= 2.0, "(b) median ratio");
    o.check(nina_factor >= 5.0, "(c) Nina vs adults");
    o.check(max_sar < 0.08 && margin >= 20.0, "(d) limit margin");
    o.check(skew_positive && all_skew_min > 0.0, "(e) positive skewness");
    o.check(slowest <= 600.0, "runtime");
    o.detail << "d_lim " << fmt(d.dlim, 4) << " m; p99 Duke " << fmt(p99["Duke"][0], 3) << "/" << fmt(p99["Duke"][1], 3)
             << "/" << fmt(p99["Duke"][2], 3) << ", Ella " << fmt(p99["Ella"][0], 3) << "/" << fmt(p99["Ella"][1], 3)
             << "/" << fmt(p99["Ella"][2], 3) << ", Nina " << fmt(p99["Nina"][0], 3) << "/" << fmt(p99["Nina"][1], 3)
             << "/" << fmt(p99["Nina"][2], 3) << " W/kg; median ratio 2/1 <= " << fmt(worst_ratio, 3)
             << "; Nina >= " << fmt(nina_factor, 3) << "x below adults; max wbSAR " << fmt(max_sar, 3) << " W/kg (margin "
             << fmt(margin, 3) << " dB); scenario 3 took " << fmt(runs[2].seconds, 3) << " s";
}

void criterion10(Outcome& o, const fs::path& work) {
    const RunConfig cfg = load_run_config(scenario_config_path(testing::data_dir(), 1));
    cmd_simulate(cfg, work / "t1", {1, nullptr});
    cmd_simulate(cfg, work / "t8", {8, nullptr});
    int identical = 0;
    for (double h : cfg.grid.heights) {
        const std::string name = field_file_name(h);
        const bool same = read_text_file(work / "t1" / name) == read_text_file(work / "t8" / name);
        o.check(same, name);
        identical += same ? 1 : 0;
    }
    o.detail << identical << " of " << cfg.grid.heights.size() << " field grids byte-identical (1 vs 8 workers, "
             << fmt(cfg.trace.ray_spacing_deg, 2) << " deg)";
}

}  // namespace

int main() {
    testing::TempDir work("acceptance");
    const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria{
        {"wbSAR regression", criterion1},
        {"free-space law", criterion2},
        {"two-ray oracle", criterion3},
        {"image exactness", criterion4},
        {"scattering normalization", criterion5},
        {"Weissberger foliage loss", criterion6},
        {"diffraction sanity", criterion7},
        {"statistics oracle", criterion8},
        {"scenario structure", [&](Outcome& o) { criterion9(o, work.path()); }},
        {"determinism", [&](Outcome& o) { criterion10(o, work.path()); }},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            criteria[i].second(o);
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail << " [exception: " << e.what() << "]";
        }
        const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        failures += o.pass ? 0 : 1;
        std::printf("%s %zu %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                    o.detail.str().c_str(), s);
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
