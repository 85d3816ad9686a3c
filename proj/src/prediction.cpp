#include "acoustrap/prediction.hpp"

namespace acoustrap {

namespace {

void check_order(std::span<const TrackSample, 3> s) {
    if (!(s[1].t > s[0].t) || !(s[2].t > s[1].t)) {
        throw ConfigError("track samples need strictly increasing timestamps");
    }
}

} // namespace

bool confirm_track(std::span<const TrackSample, 3> s, double tolerance) {
    check_order(s);
    const Vec3 velocity = (s[2].world - s[0].world) / (s[2].t - s[0].t);
    const Vec3 expected = s[0].world + velocity * (s[1].t - s[0].t);
    return distance(expected, s[1].world) <= tolerance;
}

PredictionResult predict_position(std::span<const TrackSample, 3> s, double horizon) {
    if (!(s[2].t > s[0].t)) throw ConfigError("prediction needs t3 > t1");
    if (!(horizon > 0.0)) throw ConfigError("prediction horizon must be > 0");
    PredictionResult r;
    r.velocity = (s[2].world - s[0].world) / (s[2].t - s[0].t);
    r.predicted = s[2].world + r.velocity * horizon;
    r.horizon = horizon;
    return r;
}

PredictionResult predict_position(std::span<const TrackSample, 3> s, const TimingConfig& timing) {
    return predict_position(s, timing.horizon());
}

} // namespace acoustrap
