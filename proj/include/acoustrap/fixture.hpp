#pragma once

// Measured stereo calibration of the reference rig (full-resolution pixels).
// Mirrored in data/stereo_calibration_v1.json; a unit test keeps them equal.

#include <array>

#include "acoustrap/core.hpp"

namespace acoustrap::fixture {

inline constexpr int kVersion = 1;

/// Rows (u_H, v_H, u_V, v_V), columns (x, y, z); pixel per micrometer.
inline constexpr std::array<std::array<double, 3>, 4> kJacobian{{
    {-0.0002, -0.0631, -0.0009},
    {-0.0001, 0.0012, -0.0634},
    {-0.0623, -0.0044, 0.0003},
    {0.0043, -0.0623, 0.0011},
}};

/// Centroid of the 24 reference points.
inline constexpr Vec3 kReferenceWorld{25.0, 25.0, 40.0};
inline constexpr Pixel kReferencePixelH{1328.1, 716.4};
inline constexpr Pixel kReferencePixelV{854.2, 951.4};
inline constexpr int kReferenceCount = 24;

inline constexpr int kFullWidth = 2448;
inline constexpr int kFullHeight = 2050;

/// Particle image diameter quoted for the 400 um spheres.
inline constexpr double kPixelsPer400um = 25.0;

} // namespace acoustrap::fixture
