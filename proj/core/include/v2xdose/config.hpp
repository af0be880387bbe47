#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "v2xdose/antenna.hpp"
#include "v2xdose/dosimetry.hpp"
#include "v2xdose/raytracer.hpp"
#include "v2xdose/scattering.hpp"

namespace v2xdose {

struct AnalysisConfig {
    double dlim_factor = 0.7;
    std::optional<double> roi_override;  // fixed d_lim in m
};

struct RunConfig {
    std::filesystem::path scene;  // resolved against the config file directory
    std::vector<Transmitter> transmitters;
    ReceiverGrid grid;
    TraceParams trace;
    ScatterParams scatter;
    std::vector<HumanModel> humans;
    AnalysisConfig analysis;
    std::uint64_t seed = 1;
    std::filesystem::path output_dir;  // empty when not given

    const Transmitter& reference_transmitter() const;
};

// Parses the JSON run config (schema in docs/config_format.md). Relative paths
// resolve against `base_dir`. Throws ParseError on malformed JSON and
// ConfigError on unknown fields, wrong types or invalid values.
RunConfig parse_run_config(std::string_view json_text, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

// Checks cross-field rules: scene file exists, at least one transmitter,
// grid heights cover every model's head height.
void validate_run_config(const RunConfig& cfg);

// Canonical JSON of every field that affects results (output_dir excluded;
// the scene enters by content checksum).
std::string canonical_config(const RunConfig& cfg);
std::string config_hash(const RunConfig& cfg);

// data/scenarios/scenario<k>.json below `data_dir`.
std::filesystem::path scenario_config_path(const std::filesystem::path& data_dir, int scenario);

}  // namespace v2xdose
