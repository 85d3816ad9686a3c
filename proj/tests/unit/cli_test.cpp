#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;

namespace {

const fs::path kOut = fs::temp_directory_path() / "acoustrap_cli_test";

int run(const std::string& args) {
    const std::string cmd = std::string(ACOUSTRAP_CLI_PATH) + " --out-dir " + kOut.string() + " " + args +
                            " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Cli, VersionAndUsage) {
    EXPECT_EQ(run("--version"), 0);
    EXPECT_EQ(run(""), 2);
    EXPECT_EQ(run("no-such-command"), 2);
}

TEST(Cli, HologramFocusWritesOutputs) {
    ASSERT_EQ(run("hologram focus --at 25,25,40"), 0);
    EXPECT_TRUE(fs::exists(kOut / "hologram" / "hologram.csv"));
    std::ifstream m(kOut / "hologram" / "manifest.json");
    ASSERT_TRUE(m.good());
    const auto j = nlohmann::json::parse(m);
    EXPECT_TRUE(j.contains("config"));
}

TEST(Cli, FieldFromHologram) {
    ASSERT_EQ(run("hologram octa --center 25,25,40"), 0);
    const auto h = (kOut / "hologram" / "hologram.csv").string();
    EXPECT_EQ(run("field --hologram " + h + " --plane xoz --half-extent 1 --trap octa"), 0);
    EXPECT_TRUE(fs::exists(kOut / "field" / "slice.csv"));
    EXPECT_EQ(run("field --hologram " + (kOut / "missing.csv").string()), 2);
}

TEST(Cli, ConfigErrors) {
    EXPECT_EQ(run("--set array.frequency=0 hologram focus --at 25,25,40"), 2);
    EXPECT_EQ(run("--config /nonexistent/config.json hologram focus --at 25,25,40"), 2);
}

TEST(Cli, GeometryError) {
    // Focal point on an element center.
    EXPECT_EQ(run("hologram focus --at 0.5,0.5,0"), 3);
}

TEST(Cli, SimulateSingleScenario) {
    const fs::path s = kOut / "scenario.json";
    fs::create_directories(kOut);
    std::ofstream(s) << R"({"position": [19, 23.5, 46], "seed": 5})";
    ASSERT_EQ(run("simulate --scenario " + s.string()), 0);
    EXPECT_TRUE(fs::exists(kOut / "simulate" / "reports.jsonl"));

    std::ofstream(s) << R"({"position": [19, 23.5, 50.5], "velocity": [0, 0, 20]})";
    EXPECT_EQ(run("simulate --scenario " + s.string()), 4);
}

TEST(Cli, CalibrateWritesJacobian) {
    ASSERT_EQ(run("calibrate --no-scan"), 0);
    std::ifstream in(kOut / "calibrate" / "jacobian.json");
    ASSERT_TRUE(in.good());
    EXPECT_EQ(nlohmann::json::parse(in).at("jacobian").at("units"), "pixel/um");
}

} // namespace
