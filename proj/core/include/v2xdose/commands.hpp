#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "v2xdose/analysis.hpp"
#include "v2xdose/config.hpp"
#include "v2xdose/field_grid.hpp"
#include "v2xdose/scene.hpp"

namespace v2xdose {

std::string engine_version();

struct CommandContext {
    int threads = 0;              // 0: hardware concurrency
    std::ostream* log = nullptr;  // progress messages, optional
};

struct SimulationResult {
    std::vector<FieldLayer> layers;  // one per grid height, in config order
    std::size_t removed_points = 0;
    std::size_t ray_count = 0;
};

// Traces every transmitter and combines them (power sum).
SimulationResult simulate_fields(const Scene& scene, const RunConfig& cfg, const CommandContext& ctx = {});

// simulate: field_z<h>.csv per height plus manifest.json in `out_dir`.
SimulationResult cmd_simulate(const RunConfig& cfg, const std::filesystem::path& out_dir,
                              const CommandContext& ctx = {});

struct ManifestTransmitter {
    std::string id;
    std::string kind;
    Vec3 position;
    bool reference = false;
};

struct RunManifest {
    std::string config_hash;
    std::vector<ManifestTransmitter> transmitters;
    std::vector<std::pair<double, std::string>> layers;  // height, file name

    const ManifestTransmitter& reference() const;
    std::vector<Vec3> vehicle_positions() const;  // V2V transmitters
};

// Throws ConfigError listing the missing files.
RunManifest read_manifest(const std::filesystem::path& run_dir);
// Field layer matching a model's head height.
FieldLayer load_layer_for(const std::filesystem::path& run_dir, const RunManifest& m, const HumanModel& h);

// dose: sar_<model>.csv and exposure_report.json.
void cmd_dose(const std::filesystem::path& fields_dir, std::span<const HumanModel> humans,
              const std::filesystem::path& out_dir, const ExposureLimit& limit = {});

struct DlimResult {
    std::vector<std::pair<std::string, double>> per_model;
    double dlim = 0.0;  // max over models, or the override
    Roi roi;
};

// dlim: dlim.json and profile_<model>.csv.
DlimResult cmd_dlim(const std::filesystem::path& fields_dir, std::span<const HumanModel> humans,
                    const AnalysisConfig& analysis, const std::filesystem::path& out_dir);

// report: report.json combining runs, statistics restricted to the ROI.
void cmd_report(std::span<const std::filesystem::path> run_dirs, const std::filesystem::path& dlim_json,
                std::span<const HumanModel> humans, const std::filesystem::path& out_dir,
                const ExposureLimit& limit = {});

// validate: loads config and scene, prints a short summary.
void cmd_validate(const RunConfig& cfg, std::ostream& out);

}  // namespace v2xdose
