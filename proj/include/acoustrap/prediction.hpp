#pragma once

// Track confirmation and uniform-linear-motion prediction.
//
// Three successive stereo detections C1, C2, C3 at t1 < t2 < t3. The
// prediction uses only the outer two:
//
//   C_pred = C3 + (C3 - C1) / (t3 - t1) * (t_dip + t_trans)
//
// C2 only confirms that the motion is consistent with a straight line.

#include <array>
#include <span>

#include "acoustrap/core.hpp"

namespace acoustrap {

struct TrackSample {
    Vec3 world{};
    double t = 0.0;
};

struct PredictionResult {
    Vec3 predicted{};
    Vec3 velocity{}; // mm/s
    double horizon = 0.0;
};

inline constexpr double kDefaultTrackTolerance = 0.3; // mm

/// True iff the middle sample lies within `tolerance` of the point the
/// straight line through the outer samples reaches at its timestamp.
/// Throws ConfigError on duplicate or unordered timestamps.
bool confirm_track(std::span<const TrackSample, 3> samples, double tolerance = kDefaultTrackTolerance);

PredictionResult predict_position(std::span<const TrackSample, 3> samples, double horizon);
PredictionResult predict_position(std::span<const TrackSample, 3> samples, const TimingConfig& timing);

} // namespace acoustrap
