#include "v2xdose/config.hpp"

#include <cmath>
#include <set>

#include "json.hpp"
#include "v2xdose/checksum.hpp"
#include "v2xdose/errors.hpp"
#include "v2xdose/grid_io.hpp"

namespace v2xdose {

namespace {

using json = nlohmann::json;

class Reader {
  public:
    Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) fail("expected an object");
    }

    void allow(std::initializer_list<std::string_view> keys) const {
        for (const auto& [k, v] : j_.items()) {
            bool ok = false;
            for (auto a : keys) ok = ok || k == a;
            if (!ok) throw ConfigError("unknown field '" + child(k) + "'");
        }
    }

    bool has(const std::string& k) const { return j_.contains(k) && !j_.at(k).is_null(); }
    const json& at(const std::string& k) const {
        if (!j_.contains(k)) throw ConfigError("missing field '" + child(k) + "'");
        return j_.at(k);
    }

    double number(const std::string& k, std::optional<double> def = std::nullopt) const {
        if (!has(k)) {
            if (def) return *def;
            at(k);
        }
        const json& v = j_.at(k);
        if (!v.is_number()) throw ConfigError("field '" + child(k) + "' must be a number");
        const double d = v.get<double>();
        if (!std::isfinite(d)) throw ConfigError("field '" + child(k) + "' must be finite");
        return d;
    }

    int integer(const std::string& k, int def) const {
        if (!has(k)) return def;
        const json& v = j_.at(k);
        if (!v.is_number_integer()) throw ConfigError("field '" + child(k) + "' must be an integer");
        return v.get<int>();
    }

    bool boolean(const std::string& k, bool def) const {
        if (!has(k)) return def;
        const json& v = j_.at(k);
        if (!v.is_boolean()) throw ConfigError("field '" + child(k) + "' must be true or false");
        return v.get<bool>();
    }

    std::string text(const std::string& k, std::optional<std::string> def = std::nullopt) const {
        if (!has(k)) {
            if (def) return *def;
            at(k);
        }
        const json& v = j_.at(k);
        if (!v.is_string()) throw ConfigError("field '" + child(k) + "' must be a string");
        return v.get<std::string>();
    }

    std::vector<double> numbers(const std::string& k, std::size_t want = 0) const {
        const json& v = at(k);
        if (!v.is_array()) throw ConfigError("field '" + child(k) + "' must be an array of numbers");
        std::vector<double> out;
        for (const auto& e : v) {
            if (!e.is_number()) throw ConfigError("field '" + child(k) + "' must be an array of numbers");
            out.push_back(e.get<double>());
        }
        if (want && out.size() != want) {
            throw ConfigError("field '" + child(k) + "' must have " + std::to_string(want) + " elements");
        }
        return out;
    }

    std::string child(std::string_view k) const { return path_.empty() ? std::string(k) : path_ + "." + std::string(k); }
    [[noreturn]] void fail(const std::string& msg) const { throw ConfigError("'" + path_ + "': " + msg); }

  private:
    const json& j_;
    std::string path_;
};

Transmitter parse_transmitter(const json& j, const std::string& path) {
    const Reader r(j, path);
    r.allow({"id", "kind", "position", "power_dBm", "peak_gain_dBi", "tilt_deg", "azimuth_deg", "reference"});
    Transmitter t;
    t.id = r.text("id");
    if (t.id.empty()) throw ConfigError("field '" + r.child("id") + "' must not be empty");
    const std::string kind = r.text("kind", "V2V");
    if (kind == "V2V") {
        t.kind = TransmitterKind::V2V;
    } else if (kind == "RSU") {
        t.kind = TransmitterKind::RSU;
    } else {
        throw ConfigError("field '" + r.child("kind") + "' must be \"V2V\" or \"RSU\"");
    }
    const auto p = r.numbers("position");
    if (p.size() == 2) {
        t.position = {p[0], p[1], t.kind == TransmitterKind::RSU ? kRsuHeight : kV2VHeight};
    } else if (p.size() == 3) {
        t.position = {p[0], p[1], p[2]};
    } else {
        throw ConfigError("field '" + r.child("position") + "' must be [x, y] or [x, y, z]");
    }
    const double dbm = r.number("power_dBm", kDefaultTxPowerDbm);
    t.input_power_w = dbm_to_watts(dbm);
    t.peak_gain_dbi = r.number("peak_gain_dBi", 0.0);
    t.tilt_deg = r.number("tilt_deg", t.kind == TransmitterKind::RSU ? kRsuTiltDeg : 0.0);
    t.azimuth_deg = r.number("azimuth_deg", 0.0);
    t.reference = r.boolean("reference", false);
    if (!(t.tilt_deg >= 0.0 && t.tilt_deg <= 90.0)) throw ConfigError("field '" + r.child("tilt_deg") + "' must be in [0, 90]");
    return t;
}

HumanModel parse_human(const json& j, const std::string& path) {
    if (j.is_string()) {
        const std::string name = j.get<std::string>();
        auto m = find_builtin(name);
        if (!m) throw ConfigError("'" + path + "': unknown human model '" + name + "' (built-ins: Duke, Ella, Nina)");
        return *m;
    }
    const Reader r(j, path);
    r.allow({"name", "age", "sex", "height", "weight", "bmi", "head_height", "sar_ref", "bmi_ref", "e_ref"});
    HumanModel h;
    h.name = r.text("name");
    h.age = r.number("age", 0.0);
    const std::string sex = r.text("sex", "unspecified");
    if (sex == "male") h.sex = Sex::Male;
    else if (sex == "female") h.sex = Sex::Female;
    else if (sex == "unspecified") h.sex = Sex::Unspecified;
    else throw ConfigError("field '" + r.child("sex") + "' must be male, female or unspecified");
    h.height = r.number("height");
    h.weight = r.number("weight");
    h.bmi = r.number("bmi", h.weight / (h.height * h.height));
    h.head_height = r.number("head_height");
    h.sar_ref = r.number("sar_ref");
    h.bmi_ref = r.number("bmi_ref");
    h.e_ref = r.number("e_ref", kReferenceField);
    try {
        h.validate();
    } catch (const ValidationError& e) {
        throw ConfigError(std::string("'") + path + "': " + e.what());
    }
    return h;
}

void parse_grid(const json& j, ReceiverGrid& g) {
    const Reader r(j, "grid");
    r.allow({"x", "y", "spacing", "heights"});
    const auto x = r.numbers("x", 2);
    const auto y = r.numbers("y", 2);
    g.x_min = x[0];
    g.x_max = x[1];
    g.y_min = y[0];
    g.y_max = y[1];
    g.spacing = r.number("spacing", 3.0);
    if (r.has("heights")) g.heights = r.numbers("heights");
    if (!(g.x_max >= g.x_min && g.y_max >= g.y_min)) throw ConfigError("grid: extent must satisfy lo <= hi");
    if (!(g.spacing > 0.0)) throw ConfigError("field 'grid.spacing' must be positive");
    if (g.heights.empty()) throw ConfigError("field 'grid.heights' must not be empty");
    std::set<double> seen;
    for (double h : g.heights) {
        if (!(h > 0.0)) throw ConfigError("field 'grid.heights' must hold positive values");
        if (!seen.insert(h).second) throw ConfigError("field 'grid.heights' has a duplicate value");
    }
}

void parse_trace(const json& j, TraceParams& t) {
    const Reader r(j, "trace");
    r.allow({"ray_spacing_deg", "max_reflections", "max_diffractions", "max_transmissions",
             "max_reflections_before_diffraction", "rx_threshold_dBm", "capture_safety", "coherent", "vehicle_edges"});
    t.ray_spacing_deg = r.number("ray_spacing_deg", t.ray_spacing_deg);
    t.max_reflections = r.integer("max_reflections", t.max_reflections);
    t.max_diffractions = r.integer("max_diffractions", t.max_diffractions);
    t.max_transmissions = r.integer("max_transmissions", t.max_transmissions);
    t.max_reflections_before_diffraction =
        r.integer("max_reflections_before_diffraction", std::min(t.max_reflections_before_diffraction, t.max_reflections));
    t.rx_threshold_dbm = r.number("rx_threshold_dBm", t.rx_threshold_dbm);
    t.capture_safety = r.number("capture_safety", t.capture_safety);
    t.coherent = r.boolean("coherent", t.coherent);
    t.vehicle_edges = r.boolean("vehicle_edges", t.vehicle_edges);
    try {
        t.validate();
    } catch (const ValidationError& e) {
        throw ConfigError(e.what());
    }
}

void parse_scatter(const json& j, ScatterParams& s) {
    const Reader r(j, "scatter");
    r.allow({"enabled", "S", "K_xpol", "alpha_R", "tile_size"});
    s.enabled = r.boolean("enabled", s.enabled);
    s.S = r.number("S", s.S);
    s.K_xpol = r.number("K_xpol", s.K_xpol);
    s.alpha_R = r.integer("alpha_R", s.alpha_R);
    s.tile_size = r.number("tile_size", s.tile_size);
    try {
        s.validate();
    } catch (const ValidationError& e) {
        throw ConfigError(e.what());
    }
}

json vec_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

}  // namespace

const Transmitter& RunConfig::reference_transmitter() const {
    for (const auto& t : transmitters) {
        if (t.reference) return t;
    }
    for (const auto& t : transmitters) {
        if (t.kind == TransmitterKind::V2V) return t;
    }
    if (transmitters.empty()) throw ConfigError("no transmitters configured");
    return transmitters.front();
}

RunConfig parse_run_config(std::string_view json_text, const std::filesystem::path& base_dir) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("config: ") + e.what());
    }
    const Reader r(j, "");
    r.allow({"scene", "transmitters", "grid", "trace", "scatter", "humans", "analysis", "seed", "output_dir"});
    RunConfig cfg;
    std::filesystem::path scene = r.text("scene");
    cfg.scene = scene.is_absolute() || base_dir.empty() ? scene : (base_dir / scene).lexically_normal();

    const json& txs = r.at("transmitters");
    if (!txs.is_array()) throw ConfigError("field 'transmitters' must be an array");
    std::set<std::string> ids;
    for (std::size_t i = 0; i < txs.size(); ++i) {
        Transmitter t = parse_transmitter(txs[i], "transmitters[" + std::to_string(i) + "]");
        if (!ids.insert(t.id).second) throw ConfigError("duplicate transmitter id '" + t.id + "'");
        cfg.transmitters.push_back(std::move(t));
    }
    parse_grid(r.at("grid"), cfg.grid);
    if (r.has("trace")) parse_trace(r.at("trace"), cfg.trace);
    if (r.has("scatter")) parse_scatter(r.at("scatter"), cfg.scatter);

    if (r.has("humans")) {
        const json& hs = r.at("humans");
        if (!hs.is_array()) throw ConfigError("field 'humans' must be an array");
        std::set<std::string> names;
        for (std::size_t i = 0; i < hs.size(); ++i) {
            HumanModel h = parse_human(hs[i], "humans[" + std::to_string(i) + "]");
            if (!names.insert(h.name).second) throw ConfigError("duplicate human model '" + h.name + "'");
            cfg.humans.push_back(std::move(h));
        }
    } else {
        cfg.humans = builtin_models();
    }

    if (r.has("analysis")) {
        const Reader a(r.at("analysis"), "analysis");
        a.allow({"dlim_factor", "roi_override"});
        cfg.analysis.dlim_factor = a.number("dlim_factor", 0.7);
        if (!(cfg.analysis.dlim_factor > 0.0 && cfg.analysis.dlim_factor <= 1.0)) {
            throw ConfigError("field 'analysis.dlim_factor' must be in (0, 1]");
        }
        if (a.has("roi_override")) {
            cfg.analysis.roi_override = a.number("roi_override");
            if (!(*cfg.analysis.roi_override > 0.0)) throw ConfigError("field 'analysis.roi_override' must be positive");
        }
    }
    if (r.has("seed")) {
        const json& s = r.at("seed");
        if (!s.is_number_unsigned()) throw ConfigError("field 'seed' must be a non-negative integer");
        cfg.seed = s.get<std::uint64_t>();
    }
    if (r.has("output_dir")) {
        std::filesystem::path out = r.text("output_dir");
        cfg.output_dir = out.is_absolute() || base_dir.empty() ? out : (base_dir / out).lexically_normal();
    }

    int refs = 0;
    for (const auto& t : cfg.transmitters) refs += t.reference ? 1 : 0;
    if (refs > 1) throw ConfigError("more than one transmitter is marked as reference");
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw ConfigError("config file not found: " + path.string());
    return parse_run_config(read_text_file(path), path.parent_path());
}

void validate_run_config(const RunConfig& cfg) {
    if (cfg.transmitters.empty()) throw ConfigError("transmitters: at least one transmitter is required");
    if (!std::filesystem::exists(cfg.scene)) throw ConfigError("scene: file not found: " + cfg.scene.string());
    for (const auto& h : cfg.humans) {
        bool found = false;
        for (double z : cfg.grid.heights) found = found || std::abs(z - h.head_height) <= 1e-6;
        if (!found) {
            throw ConfigError("grid.heights: no height matches head height " + format_number(h.head_height) +
                              " m of model '" + h.name + "'");
        }
    }
}

std::string canonical_config(const RunConfig& cfg) {
    json j;
    j["scene_checksum"] = std::filesystem::exists(cfg.scene) ? file_checksum(cfg.scene) : cfg.scene.string();
    json txs = json::array();
    for (const auto& t : cfg.transmitters) {
        txs.push_back({{"id", t.id},
                       {"kind", t.kind == TransmitterKind::RSU ? "RSU" : "V2V"},
                       {"position", vec_json(t.position)},
                       {"power_W", t.input_power_w},
                       {"peak_gain_dBi", t.peak_gain_dbi},
                       {"tilt_deg", t.tilt_deg},
                       {"azimuth_deg", t.azimuth_deg},
                       {"reference", &t == &cfg.reference_transmitter()}});
    }
    j["transmitters"] = txs;
    j["grid"] = {{"x", {cfg.grid.x_min, cfg.grid.x_max}},
                 {"y", {cfg.grid.y_min, cfg.grid.y_max}},
                 {"spacing", cfg.grid.spacing},
                 {"heights", cfg.grid.heights}};
    const auto& t = cfg.trace;
    j["trace"] = {{"ray_spacing_deg", t.ray_spacing_deg},
                  {"max_reflections", t.max_reflections},
                  {"max_diffractions", t.max_diffractions},
                  {"max_transmissions", t.max_transmissions},
                  {"max_reflections_before_diffraction", t.max_reflections_before_diffraction},
                  {"rx_threshold_dBm", t.rx_threshold_dbm},
                  {"capture_safety", t.capture_safety},
                  {"coherent", t.coherent},
                  {"vehicle_edges", t.vehicle_edges}};
    const auto& s = cfg.scatter;
    j["scatter"] = {{"enabled", s.enabled}, {"S", s.S}, {"K_xpol", s.K_xpol}, {"alpha_R", s.alpha_R},
                    {"tile_size", s.tile_size}};
    json hs = json::array();
    for (const auto& h : cfg.humans) {
        hs.push_back({{"name", h.name},
                      {"head_height", h.head_height},
                      {"sar_ref", h.sar_ref},
                      {"bmi", h.bmi},
                      {"bmi_ref", h.bmi_ref},
                      {"e_ref", h.e_ref}});
    }
    j["humans"] = hs;
    j["analysis"] = {{"dlim_factor", cfg.analysis.dlim_factor},
                     {"roi_override", cfg.analysis.roi_override ? json(*cfg.analysis.roi_override) : json(nullptr)}};
    j["seed"] = cfg.seed;
    return j.dump();
}

std::string config_hash(const RunConfig& cfg) { return to_hex(fnv1a64(canonical_config(cfg))); }

std::filesystem::path scenario_config_path(const std::filesystem::path& data_dir, int scenario) {
    if (scenario < 1 || scenario > 3) throw ConfigError("--scenario must be 1, 2 or 3");
    return data_dir / "scenarios" / ("scenario" + std::to_string(scenario) + ".json");
}

}  // namespace v2xdose
