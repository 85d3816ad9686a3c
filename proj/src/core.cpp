#include "acoustrap/core.hpp"

#include <charconv>
#include <cstdio>
#include <iostream>
#include <mutex>
#include <sstream>
#include <utility>
#include <vector>

namespace acoustrap {

namespace {

std::mutex& sink_mutex() {
    static std::mutex m;
    return m;
}

WarningSink& sink_slot() {
    static WarningSink sink = [](std::string_view msg) { std::cerr << "warning: " << msg << '\n'; };
    return sink;
}

double parse_double(std::string_view token, std::string_view whole) {
    while (!token.empty() && token.front() == ' ') token.remove_prefix(1);
    while (!token.empty() && token.back() == ' ') token.remove_suffix(1);
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc{} || ptr != token.data() + token.size() || !std::isfinite(value)) {
        throw ConfigError("expected three comma-separated numbers, got '" + std::string(whole) + "'");
    }
    return value;
}

bool inside(const Vec3& p, const Vec3& lo, const Vec3& hi) {
    return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y && p.z >= lo.z && p.z <= hi.z;
}

} // namespace

void warn(std::string_view message) {
    std::lock_guard lock(sink_mutex());
    if (sink_slot()) sink_slot()(message);
}

WarningSink set_warning_sink(WarningSink sink) {
    std::lock_guard lock(sink_mutex());
    return std::exchange(sink_slot(), std::move(sink));
}

std::string to_string(const Vec3& v) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "(%.6g, %.6g, %.6g)", v.x, v.y, v.z);
    return buf;
}

Vec3 parse_vec3(std::string_view text) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (true) {
        auto comma = text.find(',', start);
        parts.push_back(text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    if (parts.size() != 3) {
        throw ConfigError("expected three comma-separated numbers, got '" + std::string(text) + "'");
    }
    return {parse_double(parts[0], text), parse_double(parts[1], text), parse_double(parts[2], text)};
}

std::string_view to_string(Contrast c) {
    return c == Contrast::Positive ? "positive" : "negative";
}

Contrast parse_contrast(std::string_view text) {
    if (text == "positive" || text == "PS" || text == "ps") return Contrast::Positive;
    if (text == "negative" || text == "PDMS" || text == "pdms") return Contrast::Negative;
    throw ConfigError("unknown contrast '" + std::string(text) + "' (expected positive|negative)");
}

bool WorkspaceConfig::contains(const Vec3& p) const { return inside(p, min_corner(), max_corner()); }
bool TankConfig::contains(const Vec3& p) const { return inside(p, min_corner(), max_corner()); }

double wavelength(const MediumConfig& medium, const TransducerArray& array) {
    if (!(array.frequency > 0.0)) throw ConfigError("array.frequency must be > 0");
    if (!(medium.sound_speed > 0.0)) throw ConfigError("medium.sound_speed must be > 0");
    return medium.sound_speed / array.frequency * 1e3;
}

Vec3 element_center(const TransducerArray& array, int i, int j) {
    if (i < 0 || i >= array.rows || j < 0 || j >= array.cols) {
        std::ostringstream os;
        os << "element index (" << i << ", " << j << ") outside " << array.rows << "x" << array.cols << " array";
        throw IndexError(os.str());
    }
    return array.origin + Vec3{(i + 0.5) * array.pitch, (j + 0.5) * array.pitch, 0.0};
}

void validate(const MediumConfig& medium) {
    if (!(medium.sound_speed > 0.0) || !std::isfinite(medium.sound_speed))
        throw ConfigError("medium.sound_speed must be a positive number");
    if (!(medium.density > 0.0) || !std::isfinite(medium.density))
        throw ConfigError("medium.density must be a positive number");
}

void validate(const TransducerArray& array) {
    if (array.rows < 1 || array.cols < 1) throw ConfigError("array.rows and array.cols must be >= 1");
    if (!(array.pitch > 0.0) || !std::isfinite(array.pitch)) throw ConfigError("array.pitch must be > 0");
    if (!(array.frequency > 0.0) || !std::isfinite(array.frequency)) throw ConfigError("array.frequency must be > 0");
    if (!array.origin.finite()) throw ConfigError("array.origin must be finite");
    if (!(array.emission_amplitude >= 0.0) || !std::isfinite(array.emission_amplitude))
        throw ConfigError("array.emission_amplitude must be >= 0");
}

void validate(const TimingConfig& timing) {
    auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
    if (!positive(timing.t_dip)) throw ConfigError("timing.t_dip must be > 0");
    if (!positive(timing.t_trans)) throw ConfigError("timing.t_trans must be > 0");
    if (!positive(timing.camera_fps)) throw ConfigError("timing.camera_fps must be > 0");
    if (!positive(timing.poh_update_fps)) throw ConfigError("timing.poh_update_fps must be > 0");
    if (!positive(timing.can_baud)) throw ConfigError("timing.can_baud must be > 0");
}

void validate(const WorkspaceConfig& workspace, const TankConfig& tank) {
    if (!workspace.center.finite() || !workspace.extent.finite())
        throw ConfigError("workspace.center and workspace.extent must be finite");
    if (!(workspace.extent.x > 0 && workspace.extent.y > 0 && workspace.extent.z > 0))
        throw ConfigError("workspace.extent components must be > 0");
    if (!(tank.extent.x > 0 && tank.extent.y > 0 && tank.extent.z > 0))
        throw ConfigError("tank.extent components must be > 0");
    if (!(workspace.min_corner().z > 0.0)) throw ConfigError("workspace must lie strictly above the array plane (z > 0)");
    if (!tank.contains(workspace.min_corner()) || !tank.contains(workspace.max_corner()))
        throw ConfigError("workspace box must lie inside the tank");
}

} // namespace acoustrap
