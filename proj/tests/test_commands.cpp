#include <gtest/gtest.h>

#include <cstdlib>
#include <sys/wait.h>

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"
#include "test_support.hpp"
#include "v2xdose/commands.hpp"
#include "v2xdose/errors.hpp"
#include "v2xdose/grid_io.hpp"

namespace v2xdose {
namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

// A hand-made run directory: one V2V transmitter at the origin and a uniform
// field on a 5 x 5 grid (3 m spacing) at every built-in head height.
void write_uniform_run(const fs::path& dir, double e) {
    json layers = json::array();
    for (double h : {1.7, 1.5, 0.85}) {
        FieldLayer l;
        l.height = h;
        for (int iy = -2; iy <= 2; ++iy)
            for (int ix = -2; ix <= 2; ++ix) l.samples.push_back({{ix * 3.0, iy * 3.0, h}, e, 10.0, 1, false});
        write_field_csv(dir / field_file_name(h), l);
        layers.push_back({{"height_m", h}, {"file", field_file_name(h)}});
    }
    const json m = {{"config_hash", "0000000000000000"},
                    {"transmitters", {{{"id", "car"}, {"kind", "V2V"}, {"position", {0, 0, 1.7}}, {"reference", true}}}},
                    {"layers", layers}};
    write_text_file(dir / "manifest.json", m.dump(2));
}

json read_json(const fs::path& p) { return json::parse(read_text_file(p)); }

TEST(FieldCsv, RoundTrip) {
    testing::TempDir dir("csv");
    FieldLayer l;
    l.height = 1.5;
    l.samples.push_back({{0.0, 3.0, 1.5}, 1.234567890123, -41.5, 7, false});
    l.samples.push_back({{3.0, 3.0, 1.5}, 0.0, 0.0, 0, true});
    l.samples.push_back({{6.0, 3.0, 1.5}, 2.5e-7, -140.25, 2, false});
    write_field_csv(dir / "f.csv", l);
    const FieldLayer r = read_field_csv(dir / "f.csv");
    ASSERT_EQ(r.samples.size(), 3u);
    EXPECT_DOUBLE_EQ(r.height, 1.5);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_EQ(r.samples[i].position, l.samples[i].position);
        EXPECT_EQ(r.samples[i].discarded, l.samples[i].discarded);
        if (!l.samples[i].discarded) {
            EXPECT_NEAR(r.samples[i].e_rms, l.samples[i].e_rms, 1e-9 * l.samples[i].e_rms);
            EXPECT_EQ(r.samples[i].path_count, l.samples[i].path_count);
        }
    }
    write_field_csv(dir / "g.csv", r);
    EXPECT_EQ(read_text_file(dir / "f.csv"), read_text_file(dir / "g.csv"));
    EXPECT_EQ(read_text_file(dir / "f.csv").substr(0, 36), kFieldCsvHeader);

    write_text_file(dir / "bad.csv", std::string(kFieldCsvHeader) + "\n1,2,x,4,5,6\n");
    EXPECT_THROW(read_field_csv(dir / "bad.csv"), ParseError);
}

TEST(Dose, ReferenceFieldGivesReferenceSar) {
    testing::TempDir dir("dose");
    write_uniform_run(dir.path(), kReferenceField);
    const auto humans = builtin_models();
    cmd_dose(dir.path(), humans, dir.path());
    const json r = read_json(dir / "exposure_report.json");
    ASSERT_EQ(r["models"].size(), 3u);
    for (std::size_t i = 0; i < humans.size(); ++i) {
        const auto& m = r["models"][i];
        EXPECT_EQ(m["name"], humans[i].name);
        EXPECT_DOUBLE_EQ(m["summary"]["max"].get<double>(), humans[i].sar_ref);
        EXPECT_DOUBLE_EQ(m["summary"]["median"].get<double>(), humans[i].sar_ref);
        EXPECT_TRUE(m["compliance"]["pass"].get<bool>());
        EXPECT_NEAR(m["compliance"]["margin_dB"].get<double>(), 10.0 * std::log10(0.08 / humans[i].sar_ref), 1e-9);
        EXPECT_TRUE(fs::exists(dir / ("sar_" + humans[i].name + ".csv")));
    }
}

TEST(Dlim, ConstantFieldReachesGridCorner) {
    testing::TempDir dir("dlim");
    write_uniform_run(dir.path(), 1.0);
    const auto humans = builtin_models();
    const DlimResult r = cmd_dlim(dir.path(), humans, {}, dir.path());
    const double corner = std::hypot(6.0, 6.0);
    for (const auto& [name, d] : r.per_model) EXPECT_NEAR(d, corner, 1e-12) << name;
    EXPECT_NEAR(r.dlim, corner, 1e-12);
    EXPECT_NEAR(r.roi.side(), 2.0 * corner, 1e-12);
    const json j = read_json(dir / "dlim.json");
    EXPECT_EQ(j["reference_tx"], "car");
    EXPECT_NEAR(j["d_lim_m"].get<double>(), corner, 1e-12);

    AnalysisConfig fixed;
    fixed.roi_override = 10.6;
    EXPECT_DOUBLE_EQ(cmd_dlim(dir.path(), humans, fixed, dir.path()).roi.side(), 21.2);
}

TEST(Commands, MissingInputsAreListed) {
    testing::TempDir dir("missing");
    const auto humans = builtin_models();
    try {
        cmd_dose(dir.path(), humans, dir.path());
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("manifest.json"), std::string::npos);
    }
    write_uniform_run(dir.path(), 1.0);
    fs::remove(dir / field_file_name(1.5));
    fs::remove(dir / field_file_name(0.85));
    try {
        cmd_dose(dir.path(), humans, dir.path());
        FAIL();
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find(field_file_name(1.5)), std::string::npos);
        EXPECT_NE(msg.find(field_file_name(0.85)), std::string::npos);
    }
    const std::vector<fs::path> runs{dir.path()};
    EXPECT_THROW(cmd_report(runs, dir / "dlim.json", humans, dir.path()), ConfigError);
}

RunConfig small_scenario1() {
    RunConfig c = load_run_config(scenario_config_path(testing::data_dir(), 1));
    c.trace.ray_spacing_deg = 2.0;
    c.trace.max_reflections = 3;
    c.trace.max_reflections_before_diffraction = 1;
    c.grid.spacing = 6.0;
    return c;
}

TEST(Simulate, SmallScenarioPipeline) {
    testing::TempDir dir("sim");
    const RunConfig cfg = small_scenario1();
    const fs::path run = dir / "s1";
    const SimulationResult res = cmd_simulate(cfg, run, {1, nullptr});
    ASSERT_EQ(res.layers.size(), 3u);
    for (double h : {1.7, 1.5, 0.85}) EXPECT_TRUE(fs::exists(run / field_file_name(h)));

    const json m = read_json(run / "manifest.json");
    EXPECT_EQ(m["transmitter_count"], 1);
    EXPECT_EQ(m["config_hash"], config_hash(cfg));
    EXPECT_EQ(m["engine_version"], engine_version());
    EXPECT_GT(res.removed_points, 0u);
    std::size_t lit = 0;
    for (const auto& s : res.layers[0].samples) lit += s.e_rms > 0.0 ? 1 : 0;
    EXPECT_GT(lit, res.layers[0].samples.size() / 2);

    const fs::path again = dir / "s1b";
    cmd_simulate(cfg, again, {1, nullptr});
    for (double h : {1.7, 1.5, 0.85}) {
        EXPECT_EQ(read_text_file(run / field_file_name(h)), read_text_file(again / field_file_name(h)));
    }

    const auto humans = cfg.humans;
    cmd_dose(run, humans, run);
    const DlimResult d = cmd_dlim(run, humans, cfg.analysis, run);
    EXPECT_GT(d.dlim, 0.0);
    const std::vector<fs::path> runs{run};
    cmd_report(runs, run / "dlim.json", humans, dir / "r1");
    cmd_report(runs, run / "dlim.json", humans, dir / "r2");
    const std::string report = read_text_file(dir / "r1" / "report.json");
    EXPECT_EQ(report, read_text_file(dir / "r2" / "report.json"));
    const json r = json::parse(report);
    ASSERT_EQ(r["runs"].size(), 1u);
    for (const auto& model : r["runs"][0]["models"]) {
        EXPECT_TRUE(model["compliance"]["pass"].get<bool>());
        EXPECT_GT(model["roi_samples"].get<int>(), 0);
    }
}

TEST(Validate, SummaryLine) {
    std::ostringstream out;
    cmd_validate(load_run_config(scenario_config_path(testing::data_dir(), 3)), out);
    EXPECT_EQ(out.str().rfind("config ok: 6 transmitter(s)", 0), 0u) << out.str();
}

#ifdef V2XDOSE_CLI_PATH
int run_cli(const std::string& args) {
    const std::string cmd = std::string("\"") + V2XDOSE_CLI_PATH + "\" " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Cli, ExitCodes) {
    testing::TempDir dir("cli");
    EXPECT_EQ(run_cli("validate --scenario 1"), 0);
    EXPECT_EQ(run_cli("--version"), 0);

    write_text_file(dir / "bad.json", R"({"scene": "x.scene", "transmitters": [], "grid": {}, "typo": 1})");
    EXPECT_EQ(run_cli("validate --config \"" + (dir / "bad.json").string() + "\""), 2);
    EXPECT_EQ(run_cli("dose --fields \"" + (dir / "nothing").string() + "\""), 2);
    EXPECT_EQ(run_cli("frobnicate"), 2);

    // Output below a regular file cannot be created: a runtime failure, not a bad input.
    write_uniform_run(dir.path(), 1.0);
    write_text_file(dir / "blocker", "x");
    EXPECT_EQ(run_cli("dose --fields \"" + dir.path().string() + "\" --out \"" + (dir / "blocker" / "out").string() + "\""),
              1);

    write_uniform_run(dir.path(), 1.0);
    EXPECT_EQ(run_cli("dose --fields \"" + dir.path().string() + "\""), 0);
    EXPECT_TRUE(fs::exists(dir / "exposure_report.json"));
}
#endif

}  // namespace
}  // namespace v2xdose
