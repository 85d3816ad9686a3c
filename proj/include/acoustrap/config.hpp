#pragma once

// Simulator configuration. The on-disk form is a JSON object whose nesting
// mirrors the structs below (see docs/config.md); absent keys keep their
// defaults and an empty file means "all defaults". Unknown keys and invalid
// values are rejected with the offending key path in the message.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "acoustrap/calibration.hpp"
#include "acoustrap/control.hpp"
#include "acoustrap/core.hpp"
#include "acoustrap/field.hpp"
#include "acoustrap/vision.hpp"

namespace acoustrap {

/// Environment variable naming the default configuration file.
inline constexpr const char* kConfigEnv = "ACOUSTRAP_CONFIG";

struct CameraConfig {
    double scale = 0.25;          // 1.0 = full 2448x2050 sensor
    double background_level = 200.0;
    double particle_level = 60.0;
};

struct HologramConfig {
    double octahedron_diameter = 2.4; // mm
    int ib_iterations = 200;
};

struct FieldConfig {
    PropagationModel model = PropagationModel::Monopole;
    double resolution = 0.0;  // mm; <= 0 means lambda / 8
    double half_extent = 5.0; // mm, slice half-size around the trap
};

struct CalibrationConfig {
    ReferenceScan scan{};
    double lattice_spacing = 3.0;  // mm
    double pixel_noise = 0.5; // px, uniform +/- bound on every observed coordinate
    int moves = 24;
    double move_um = 1000.0;
};

struct SimConfig {
    MediumConfig medium{};
    TransducerArray array{};
    TimingConfig timing{};
    WorkspaceConfig workspace{};
    TankConfig tank{};
    CameraConfig camera{};
    HologramConfig hologram{};
    FieldConfig field{};
    ExtractionParams vision{};
    ControlParams control{};
    BatchSpec batch{};
    CalibrationConfig calibration{};
    std::uint64_t seed = 1;
};

/// Parses configuration text. Overrides are "key.path=value" strings applied
/// on top of the document; values are read as JSON, falling back to a bare
/// string.
SimConfig parse_config(std::string_view text, const std::vector<std::string>& overrides = {});
SimConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

/// Full configuration as JSON text (every key, defaults included).
std::string config_to_json(const SimConfig& config, int indent = 2);

/// All key paths understood by the parser, in documentation order.
std::vector<std::string> config_keys();

void validate(const SimConfig& config);

/// Cameras configured per `config.camera`.
CameraModel camera_h(const SimConfig& config);
CameraModel camera_v(const SimConfig& config);

SimWorld make_sim_world(const SimConfig& config);

} // namespace acoustrap
