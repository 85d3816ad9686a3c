#pragma once

// File formats.
//
//   hologram CSV     one row per array row, phases in radians, %.9g
//   field slice CSV  header "x,y,re,im,magnitude" (or x,z / y,z), one line per sample
//   magnitude PGM    P5, 16-bit big-endian, |p| scaled to the slice maximum
//   frames           P5, 8-bit
//   Jacobian / references  JSON with explicit units
//   trap reports     JSON lines, plus Table-I-style CSVs
//   run manifest     manifest.json in every output directory

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "acoustrap/calibration.hpp"
#include "acoustrap/control.hpp"
#include "acoustrap/field.hpp"
#include "acoustrap/hologram.hpp"
#include "acoustrap/vision.hpp"

namespace acoustrap::io {

namespace fs = std::filesystem;

void write_hologram_csv(const fs::path& path, const PhaseHologram& hologram);
/// Throws ConfigError on missing files, ragged rows or unparsable cells.
PhaseHologram read_hologram_csv(const fs::path& path);

void write_slice_csv(const fs::path& path, const FieldSlice& slice);
void write_magnitude_pgm16(const fs::path& path, const FieldSlice& slice);

void write_pgm(const fs::path& path, const ImageFrame& frame);
ImageFrame read_pgm(const fs::path& path);

void write_jacobian_json(const fs::path& path, const JacobianMatrix& jacobian, double residual_rms = 0.0);
JacobianMatrix read_jacobian_json(const fs::path& path);

void write_reference_set_json(const fs::path& path, const ReferenceSet& refs);
ReferenceSet read_reference_set_json(const fs::path& path);

/// Reads the versioned stereo fixture (data/stereo_calibration_v1.json).
struct StereoFixture {
    JacobianMatrix jacobian;
    Vec3 world_centroid{};
    Pixel pixel_h{};
    Pixel pixel_v{};
    int reference_count = 0;
    int width = 0;
    int height = 0;
};
StereoFixture read_stereo_fixture(const fs::path& path);

/// One JSON object per line, no trailing newline inside.
std::string trap_report_json(const TrapReport& report, bool include_frames = true);
SimScenario read_scenario_json(const fs::path& path);

void write_trials_csv(const fs::path& path, const std::vector<TrapReport>& reports);
void write_summary_csv(const fs::path& path, const BatchSummary& summary);

std::string feature_json(const FeatureObservation& obs, const std::string& camera, double timestamp);

struct RunManifest {
    std::string tool_version;
    std::string config_json;  // full snapshot
    std::uint64_t seed = 0;
    std::vector<std::string> command_line;
    std::vector<std::string> outputs; // file names relative to the directory
};

void write_manifest(const fs::path& dir, const RunManifest& manifest);

/// Writes `content` to `path`, creating parent directories.
void write_text(const fs::path& path, const std::string& content);

} // namespace acoustrap::io
