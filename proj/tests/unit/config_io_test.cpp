#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "acoustrap/config.hpp"
#include "acoustrap/fixture.hpp"
#include "acoustrap/io.hpp"

using namespace acoustrap;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "acoustrap_unit";
    fs::create_directories(dir);
    return dir / name;
}

TEST(Config, EmptyMeansDefaults) {
    const auto c = parse_config("");
    EXPECT_EQ(c.array.rows, 50);
    EXPECT_EQ(c.array.frequency, 2.3e6);
    EXPECT_EQ(c.medium.sound_speed, 1500.0);
    EXPECT_EQ(c.timing.t_dip, 0.060);
    EXPECT_EQ(c.camera.scale, 0.25);
    EXPECT_EQ(c.control.frame_budget, 150);
    EXPECT_EQ(parse_config("{}").batch.count, c.batch.count);
}

TEST(Config, ZeroFrequencyRejected) {
    try {
        parse_config(R"({"array": {"frequency": 0}})");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("frequency"), std::string::npos);
    }
}

TEST(Config, PitchChangesAperture) {
    const auto c = parse_config(R"({"array": {"pitch": 2.0}})");
    EXPECT_NEAR(element_center(c.array, 49, 0).x + 0.5 * c.array.pitch, 100.0, 1e-12);
}

TEST(Config, UnknownKeyRejected) {
    EXPECT_THROW(parse_config(R"({"array": {"pitchh": 2.0}})"), ConfigError);
    EXPECT_THROW(parse_config(R"({"bogus": 1})"), ConfigError);
}

TEST(Config, WrongTypeRejected) {
    EXPECT_THROW(parse_config(R"({"timing": {"t_dip": "fast"}})"), ConfigError);
    EXPECT_THROW(parse_config("not json"), ConfigError);
}

TEST(Config, OverridesApplyAfterDocument) {
    const auto c = parse_config(R"({"timing": {"t_dip": 0.05}})", {"timing.t_dip=0.07", "batch.contrast=negative"});
    EXPECT_EQ(c.timing.t_dip, 0.07);
    EXPECT_EQ(c.batch.contrast, Contrast::Negative);
    EXPECT_EQ(c.batch.timing.t_dip, 0.07);
    EXPECT_THROW(parse_config("", {"no_equals_sign"}), ConfigError);
}

TEST(Config, RoundTripThroughJson) {
    const auto a = parse_config("", {"seed=99", "hologram.octahedron_diameter=2.6"});
    const auto b = parse_config(config_to_json(a));
    EXPECT_EQ(config_to_json(a), config_to_json(b));
    EXPECT_EQ(b.seed, 99u);
    EXPECT_EQ(b.control.trap_diameter, 2.6);
}

TEST(Config, KeysIncludeEveryGroup) {
    const auto keys = config_keys();
    for (const char* k : {"medium.sound_speed", "array.pitch", "timing.t_trans", "camera.scale", "control.hold_ticks",
                          "batch.dropout_probability", "calibration.moves", "seed"})
        EXPECT_NE(std::find(keys.begin(), keys.end(), k), keys.end()) << k;
}

TEST(Io, FixtureFileMatchesConstants) {
    const auto f = io::read_stereo_fixture(fs::path(ACOUSTRAP_DATA_DIR) / "stereo_calibration_v1.json");
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 3; ++c) EXPECT_EQ(f.jacobian(r, c), fixture::kJacobian[r][c]);
    EXPECT_EQ(f.world_centroid, fixture::kReferenceWorld);
    EXPECT_EQ(f.pixel_h, fixture::kReferencePixelH);
    EXPECT_EQ(f.pixel_v, fixture::kReferencePixelV);
    EXPECT_EQ(f.reference_count, fixture::kReferenceCount);
    EXPECT_EQ(f.width, fixture::kFullWidth);
    EXPECT_EQ(f.height, fixture::kFullHeight);
}

TEST(Io, HologramCsvRoundTrip) {
    const auto h = make_octahedral_hologram(TransducerArray{}, {25.0, 25.0, 40.0}, 2.4, MediumConfig{});
    const auto p = scratch("h.csv");
    io::write_hologram_csv(p, h);
    const auto r = io::read_hologram_csv(p);
    ASSERT_EQ(r.size(), h.size());
    for (std::size_t i = 0; i < h.size(); ++i) EXPECT_NEAR(r.phases()[i], h.phases()[i], 1e-8);
}

TEST(Io, HologramCsvRaggedRejected) {
    const auto p = scratch("ragged.csv");
    std::ofstream(p) << "0.1,0.2\n0.3\n";
    EXPECT_THROW(io::read_hologram_csv(p), ConfigError);
    EXPECT_THROW(io::read_hologram_csv(scratch("missing.csv")), ConfigError);
}

TEST(Io, PgmRoundTrip) {
    const auto cam = make_camera_h();
    ParticleState s;
    s.position = {25.0, 25.0, 40.0};
    const auto f = render_frame(cam, s, 0.0, 4);
    const auto p = scratch("f.pgm");
    io::write_pgm(p, f);
    const auto r = io::read_pgm(p);
    EXPECT_EQ(r.width, f.width);
    EXPECT_EQ(r.height, f.height);
    EXPECT_EQ(r.pixels, f.pixels);
}

TEST(Io, JacobianAndReferencesRoundTrip) {
    const auto j = JacobianMatrix::fixture();
    io::write_jacobian_json(scratch("j.json"), j, 0.1);
    EXPECT_EQ(io::read_jacobian_json(scratch("j.json")).matrix(), j.matrix());

    const auto refs = project_references(reference_lattice({25, 25, 40}), make_camera_h(), make_camera_v());
    io::write_reference_set_json(scratch("r.json"), refs);
    const auto back = io::read_reference_set_json(scratch("r.json"));
    ASSERT_EQ(back.size(), 24u);
    EXPECT_LT(distance(back.world_centroid(), refs.world_centroid()), 1e-9);
    EXPECT_LT((back.pixel_centroid() - refs.pixel_centroid()).norm(), 1e-9);
}

TEST(Io, ScenarioJson) {
    const auto p = scratch("s.json");
    std::ofstream(p) << R"({"position": [19, 23.5, 46], "diameter_um": 500, "contrast": "negative", "seed": 3})";
    const auto s = io::read_scenario_json(p);
    EXPECT_EQ(s.particle.position, (Vec3{19, 23.5, 46}));
    EXPECT_EQ(s.particle.velocity, (Vec3{0, 0, -10}));
    EXPECT_EQ(s.particle.contrast, Contrast::Negative);
    EXPECT_EQ(s.seed, 3u);
    std::ofstream(p) << R"({"positon": [1, 2, 3]})";
    EXPECT_THROW(io::read_scenario_json(p), ConfigError);
}

TEST(Io, TrapReportJsonParses) {
    TrapReport r;
    r.trapped = true;
    r.trap_kind = "octahedral";
    r.deviation = 0.12;
    const auto j = nlohmann::json::parse(io::trap_report_json(r));
    EXPECT_EQ(j.at("outcome"), "trapped");
    EXPECT_EQ(j.at("trap_kind"), "octahedral");
    EXPECT_DOUBLE_EQ(j.at("deviation_mm").get<double>(), 0.12);
}

} // namespace
