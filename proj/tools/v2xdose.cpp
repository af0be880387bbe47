// v2xdose command-line front end.
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "v2xdose/commands.hpp"
#include "v2xdose/config.hpp"
#include "v2xdose/errors.hpp"

namespace fs = std::filesystem;
using namespace v2xdose;

namespace {

struct Common {
    std::string config;
    int scenario = 0;
    int threads = 0;
    std::string out;
};

fs::path data_dir() {
    if (const char* env = std::getenv("V2XDOSE_DATA_DIR")) return env;
    return V2XDOSE_DATA_DIR;
}

std::optional<RunConfig> load_config(const Common& c, bool required) {
    if (!c.config.empty() && c.scenario != 0) throw ConfigError("use either --config or --scenario, not both");
    if (c.scenario != 0) return load_run_config(scenario_config_path(data_dir(), c.scenario));
    if (!c.config.empty()) return load_run_config(c.config);
    if (required) throw ConfigError("a run config is required (--config <path> or --scenario <1|2|3>)");
    return std::nullopt;
}

std::vector<HumanModel> humans_of(const std::optional<RunConfig>& cfg) {
    return cfg ? cfg->humans : builtin_models();
}

void add_config_flags(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config, "Run config (JSON)");
    cmd->add_option("--scenario", c.scenario, "Bundled scenario config")->check(CLI::Range(1, 3));
    cmd->add_option("--out", c.out, "Output directory");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"v2xdose: 5.9 GHz vehicular RF exposure simulator"};
    app.set_version_flag("--version", engine_version());
    app.require_subcommand(1);

    Common c;
    app.add_option("--threads", c.threads, "Worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);

    auto* simulate = app.add_subcommand("simulate", "Trace all transmitters and write field grids");
    add_config_flags(simulate, c);

    std::string fields;
    auto* dose = app.add_subcommand("dose", "Convert field grids to wbSAR and check compliance");
    add_config_flags(dose, c);
    dose->add_option("--fields", fields, "Directory written by simulate")->required();

    auto* dlim = app.add_subcommand("dlim", "Distance profiles, d_lim and region of interest");
    add_config_flags(dlim, c);
    dlim->add_option("--fields", fields, "Directory written by simulate")->required();

    std::vector<std::string> runs;
    std::string dlim_file;
    auto* report = app.add_subcommand("report", "Combined exposure report over several runs");
    add_config_flags(report, c);
    report->add_option("--runs", runs, "Directories written by simulate")->required();
    report->add_option("--dlim", dlim_file, "dlim.json written by dlim")->required();

    auto* validate = app.add_subcommand("validate", "Check a run config and its scene");
    add_config_flags(validate, c);

    for (auto* sub : {simulate, dose, dlim, report, validate}) {
        sub->add_option("--threads", c.threads, "Worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        const CommandContext ctx{c.threads, &std::clog};
        if (*simulate) {
            const RunConfig cfg = *load_config(c, true);
            fs::path out = !c.out.empty() ? fs::path(c.out) : (!cfg.output_dir.empty() ? cfg.output_dir : fs::path("out"));
            cmd_simulate(cfg, out, ctx);
        } else if (*dose) {
            const auto cfg = load_config(c, false);
            cmd_dose(fields, humans_of(cfg), c.out.empty() ? fs::path(fields) : fs::path(c.out));
        } else if (*dlim) {
            const auto cfg = load_config(c, false);
            const AnalysisConfig analysis = cfg ? cfg->analysis : AnalysisConfig{};
            const auto r = cmd_dlim(fields, humans_of(cfg), analysis, c.out.empty() ? fs::path(fields) : fs::path(c.out));
            for (const auto& [name, d] : r.per_model) std::cout << name << " d_lim " << d << " m\n";
            std::cout << "d_lim " << r.dlim << " m, ROI side " << r.roi.side() << " m\n";
        } else if (*report) {
            const auto cfg = load_config(c, false);
            std::vector<fs::path> dirs(runs.begin(), runs.end());
            cmd_report(dirs, dlim_file, humans_of(cfg), c.out.empty() ? fs::path(".") : fs::path(c.out));
        } else if (*validate) {
            cmd_validate(*load_config(c, true), std::cout);
        }
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
