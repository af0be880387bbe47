#include "v2xdose/commands.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "json.hpp"
#include "v2xdose/checksum.hpp"
#include "v2xdose/dosimetry.hpp"
#include "v2xdose/errors.hpp"
#include "v2xdose/grid_io.hpp"
#include "v2xdose/raytracer.hpp"
#include "v2xdose/scattering.hpp"

#ifndef V2XDOSE_VERSION
#define V2XDOSE_VERSION "0.0.0"
#endif

namespace v2xdose {

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

void say(const CommandContext& ctx, const std::string& msg) {
    if (ctx.log) *ctx.log << msg << '\n' << std::flush;
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json summary_json(const StatSummary& s) {
    return {{"count", s.count}, {"min", s.min},       {"p25", s.p25},   {"median", s.median},
            {"p75", s.p75},     {"p99", s.p99},       {"max", s.max},   {"mean", s.mean},
            {"skewness", s.skewness}};
}

json verdict_json(const ComplianceVerdict& v, const ExposureLimit& limit) {
    return {{"limit_W_per_kg", limit.wb_limit}, {"max", v.max}, {"margin_dB", number_or_null(v.margin_db)},
            {"pass", v.pass}};
}

json roi_json(const Roi& roi) {
    json centers = json::array();
    for (const Vec3& c : roi.centers) centers.push_back({c.x, c.y});
    return {{"center_tx", roi.center_tx}, {"d_lim_m", roi.d_lim},       {"x", {roi.x_min, roi.x_max}},
            {"y", {roi.y_min, roi.y_max}}, {"side_m", roi.side()}, {"centers", centers}};
}

std::vector<double> present(const std::vector<std::optional<double>>& v) {
    std::vector<double> out;
    for (const auto& x : v) {
        if (x) out.push_back(*x);
    }
    return out;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace

std::string engine_version() { return V2XDOSE_VERSION; }

SimulationResult simulate_fields(const Scene& scene, const RunConfig& cfg, const CommandContext& ctx) {
    const GridPoints grid = generate_grid(cfg.grid, scene);
    std::vector<Vec3> positions;
    positions.reserve(grid.points.size());
    for (const auto& r : grid.points) positions.push_back(r.position);

    FieldOptions options;
    options.scatter = cfg.scatter;
    std::vector<ScatterTile> tiles;
    if (cfg.scatter.enabled && cfg.scatter.S > 0.0) tiles = tile_walls(scene, cfg.scatter.tile_size, cfg.seed);
    options.tiles = tiles;

    SimulationResult result;
    result.removed_points = grid.removed.size();
    std::vector<std::vector<ReceiverField>> per_tx;
    for (const auto& t : cfg.transmitters) {
        Transmitter tx = t;
        tx.frequency_hz = scene.frequency_hz();
        say(ctx, "tracing " + tx.id + " over " + std::to_string(positions.size()) + " receivers");
        per_tx.push_back(trace_transmitter(scene, tx, positions, cfg.trace, options, ctx.threads));
    }
    result.ray_count = launch_directions(cfg.trace.ray_spacing_deg).size();
    const auto combined = combine_transmitters(per_tx, scene.wavelength(), cfg.trace.rx_threshold_dbm);

    result.layers.resize(cfg.grid.heights.size());
    for (std::size_t l = 0; l < cfg.grid.heights.size(); ++l) result.layers[l].height = cfg.grid.heights[l];
    for (std::size_t i = 0; i < grid.points.size(); ++i) {
        const auto& f = combined[i];
        FieldSample s;
        s.position = grid.points[i].position;
        s.e_rms = f.e_rms;
        s.p_dbm = f.p_dbm;
        s.path_count = f.path_count;
        s.discarded = f.discarded;
        result.layers[grid.points[i].layer].samples.push_back(s);
    }
    return result;
}

SimulationResult cmd_simulate(const RunConfig& cfg, const fs::path& out_dir, const CommandContext& ctx) {
    validate_run_config(cfg);
    const Scene scene = load_scene(cfg.scene);
    SimulationResult result = simulate_fields(scene, cfg, ctx);
    fs::create_directories(out_dir);

    json layers = json::array();
    for (const auto& layer : result.layers) {
        const std::string name = field_file_name(layer.height);
        write_field_csv(out_dir / name, layer);
        std::size_t discarded = 0;
        for (const auto& s : layer.samples) discarded += s.discarded ? 1 : 0;
        layers.push_back({{"height_m", layer.height},
                          {"file", name},
                          {"points", layer.samples.size()},
                          {"discarded", discarded}});
    }
    json txs = json::array();
    const Transmitter& ref = cfg.reference_transmitter();
    for (const auto& t : cfg.transmitters) {
        txs.push_back({{"id", t.id},
                       {"kind", t.kind == TransmitterKind::RSU ? "RSU" : "V2V"},
                       {"position", {t.position.x, t.position.y, t.position.z}},
                       {"power_dBm", watts_to_dbm(t.input_power_w)},
                       {"peak_gain_dBi", t.peak_gain_dbi},
                       {"tilt_deg", t.tilt_deg},
                       {"azimuth_deg", t.azimuth_deg},
                       {"reference", &t == &ref}});
    }
    json manifest = {{"engine", "v2xdose"},
                     {"engine_version", engine_version()},
                     {"config_hash", config_hash(cfg)},
                     {"scene", {{"file", cfg.scene.filename().string()}, {"checksum", file_checksum(cfg.scene)}}},
                     {"frequency_hz", scene.frequency_hz()},
                     {"transmitter_count", cfg.transmitters.size()},
                     {"transmitters", txs},
                     {"ray_count_per_transmitter", result.ray_count},
                     {"removed_points", result.removed_points},
                     {"layers", layers}};
    write_text_file(out_dir / "manifest.json", dump(manifest));
    say(ctx, "wrote " + std::to_string(result.layers.size()) + " field grids to " + out_dir.string());
    return result;
}

const ManifestTransmitter& RunManifest::reference() const {
    for (const auto& t : transmitters) {
        if (t.reference) return t;
    }
    if (transmitters.empty()) throw ConfigError("manifest lists no transmitters");
    return transmitters.front();
}

std::vector<Vec3> RunManifest::vehicle_positions() const {
    std::vector<Vec3> out;
    for (const auto& t : transmitters) {
        if (t.kind == "V2V") out.push_back(t.position);
    }
    return out;
}

RunManifest read_manifest(const fs::path& run_dir) {
    const fs::path path = run_dir / "manifest.json";
    if (!fs::exists(path)) {
        throw ConfigError("missing input: " + path.string() + " (run 'simulate' first; needs manifest.json and field_z*.csv)");
    }
    json j;
    try {
        j = json::parse(read_text_file(path));
    } catch (const json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    RunManifest m;
    try {
        m.config_hash = j.at("config_hash").get<std::string>();
        for (const auto& t : j.at("transmitters")) {
            const auto p = t.at("position");
            m.transmitters.push_back({t.at("id").get<std::string>(), t.at("kind").get<std::string>(),
                                      {p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>()},
                                      t.at("reference").get<bool>()});
        }
        for (const auto& l : j.at("layers")) {
            m.layers.emplace_back(l.at("height_m").get<double>(), l.at("file").get<std::string>());
        }
    } catch (const json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    std::vector<std::string> missing;
    for (const auto& [h, f] : m.layers) {
        if (!fs::exists(run_dir / f)) missing.push_back((run_dir / f).string());
    }
    if (!missing.empty()) {
        std::string msg = "missing input files:";
        for (const auto& f : missing) msg += " " + f;
        throw ConfigError(msg);
    }
    return m;
}

FieldLayer load_layer_for(const fs::path& run_dir, const RunManifest& m, const HumanModel& h) {
    for (const auto& [height, file] : m.layers) {
        if (std::abs(height - h.head_height) <= 1e-6) return read_field_csv(run_dir / file);
    }
    throw ConfigError("no field grid at height " + format_number(h.head_height) + " m for model '" + h.name + "' in " +
                      run_dir.string());
}

void cmd_dose(const fs::path& fields_dir, std::span<const HumanModel> humans, const fs::path& out_dir,
              const ExposureLimit& limit) {
    const RunManifest m = read_manifest(fields_dir);
    json models = json::array();
    for (const auto& h : humans) {
        const FieldLayer layer = load_layer_for(fields_dir, m, h);
        const auto sar = wbsar_grid(layer, h);
        write_sar_csv(out_dir / ("sar_" + h.name + ".csv"), layer, sar);
        const auto values = present(sar);
        json entry = {{"name", h.name}, {"head_height_m", h.head_height}, {"sar_ref", h.sar_ref},
                      {"samples", values.size()}};
        entry["summary"] = values.size() >= 3 ? summary_json(summarize(values)) : json(nullptr);
        entry["compliance"] = values.empty() ? json(nullptr) : verdict_json(check_compliance(values, limit), limit);
        models.push_back(entry);
    }
    const json report = {{"config_hash", m.config_hash}, {"models", models}};
    write_text_file(out_dir / "exposure_report.json", dump(report));
}

DlimResult cmd_dlim(const fs::path& fields_dir, std::span<const HumanModel> humans, const AnalysisConfig& analysis,
                    const fs::path& out_dir) {
    const RunManifest m = read_manifest(fields_dir);
    const ManifestTransmitter& ref = m.reference();
    DlimResult result;
    json models = json::array();
    double dmax = 0.0;
    for (const auto& h : humans) {
        const FieldLayer layer = load_layer_for(fields_dir, m, h);
        const auto sar = wbsar_grid(layer, h);
        std::vector<Vec3> pos;
        std::vector<double> val;
        for (std::size_t i = 0; i < sar.size(); ++i) {
            if (!sar[i]) continue;
            pos.push_back(layer.samples[i].position);
            val.push_back(*sar[i]);
        }
        const auto profile = distance_profile(pos, val, ref.position);
        const double d = compute_dlim(profile, analysis.dlim_factor);
        std::vector<double> sorted = val;
        std::sort(sorted.begin(), sorted.end());
        const double p99 = percentile_sorted(sorted, 0.99);
        std::string csv = "distance_m,wbsar_W_per_kg\n";
        for (const auto& b : profile) {
            for (double v : b.values) csv += format_number(b.distance) + "," + format_number(v) + "\n";
        }
        write_text_file(out_dir / ("profile_" + h.name + ".csv"), csv);
        models.push_back({{"name", h.name},
                          {"p99", p99},
                          {"threshold", analysis.dlim_factor * p99},
                          {"d_lim_m", d}});
        result.per_model.emplace_back(h.name, d);
        dmax = std::max(dmax, d);
    }
    result.dlim = analysis.roi_override ? *analysis.roi_override : dmax;
    if (!(result.dlim > 0.0)) throw DomainError("d_lim is zero; cannot build a region of interest");
    const auto vehicles = m.vehicle_positions();
    result.roi = build_roi(vehicles.empty() ? std::vector<Vec3>{ref.position} : vehicles, result.dlim, ref.id);
    const json out = {{"reference_tx", ref.id},
                      {"origin", {ref.position.x, ref.position.y}},
                      {"dlim_factor", analysis.dlim_factor},
                      {"override_m", analysis.roi_override ? json(*analysis.roi_override) : json(nullptr)},
                      {"models", models},
                      {"d_lim_m", result.dlim},
                      {"roi", roi_json(result.roi)}};
    write_text_file(out_dir / "dlim.json", dump(out));
    return result;
}

void cmd_report(std::span<const fs::path> run_dirs, const fs::path& dlim_json, std::span<const HumanModel> humans,
                const fs::path& out_dir, const ExposureLimit& limit) {
    if (run_dirs.empty()) throw ConfigError("report: at least one run directory is required");
    if (!fs::exists(dlim_json)) throw ConfigError("missing input: " + dlim_json.string() + " (run 'dlim' first)");
    double dlim = 0.0;
    std::string ref_id;
    try {
        const json d = json::parse(read_text_file(dlim_json));
        dlim = d.at("d_lim_m").get<double>();
        ref_id = d.at("reference_tx").get<std::string>();
    } catch (const json::exception& e) {
        throw ParseError(dlim_json.string() + ": " + e.what());
    }

    std::vector<RunManifest> manifests;
    std::vector<Vec3> centers;
    for (const auto& dir : run_dirs) {
        manifests.push_back(read_manifest(dir));
        for (const Vec3& p : manifests.back().vehicle_positions()) {
            const bool known = std::any_of(centers.begin(), centers.end(), [&](const Vec3& c) { return c == p; });
            if (!known) centers.push_back(p);
        }
    }
    if (centers.empty()) centers.push_back(manifests.front().reference().position);
    const Roi roi = build_roi(centers, dlim, ref_id);

    json runs = json::array();
    for (std::size_t r = 0; r < run_dirs.size(); ++r) {
        json models = json::array();
        for (const auto& h : humans) {
            const FieldLayer layer = load_layer_for(run_dirs[r], manifests[r], h);
            const auto sar = wbsar_grid(layer, h);
            std::vector<double> inside;
            for (std::size_t i = 0; i < sar.size(); ++i) {
                if (sar[i] && roi.contains(layer.samples[i].position)) inside.push_back(*sar[i]);
            }
            json entry = {{"name", h.name}, {"roi_samples", inside.size()}};
            entry["summary"] = inside.size() >= 3 ? summary_json(summarize(inside)) : json(nullptr);
            entry["compliance"] = inside.empty() ? json(nullptr) : verdict_json(check_compliance(inside, limit), limit);
            models.push_back(entry);
        }
        const fs::path dir = run_dirs[r].filename().empty() ? run_dirs[r].parent_path() : run_dirs[r];
        runs.push_back({{"run", dir.filename().string()},
                        {"config_hash", manifests[r].config_hash},
                        {"transmitters", manifests[r].transmitters.size()},
                        {"models", models}});
    }
    const json report = {{"engine_version", engine_version()}, {"d_lim_m", dlim}, {"roi", roi_json(roi)}, {"runs", runs}};
    write_text_file(out_dir / "report.json", dump(report));
}

void cmd_validate(const RunConfig& cfg, std::ostream& out) {
    validate_run_config(cfg);
    const Scene scene = load_scene(cfg.scene);
    const GridPoints grid = generate_grid(cfg.grid, scene);
    out << "config ok: " << cfg.transmitters.size() << " transmitter(s), " << grid.points.size() << " receivers ("
        << grid.removed.size() << " inside solids), " << scene.surfaces().size() << " surfaces, "
        << scene.wedges().size() << " edges, hash " << config_hash(cfg) << '\n';
}

}  // namespace v2xdose
