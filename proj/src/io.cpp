#include "acoustrap/io.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace acoustrap::io {

namespace {

using json = nlohmann::json;

std::string g9(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

std::ofstream open_out(const fs::path& path, bool binary = false) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    return out;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json parse_json_file(const fs::path& path) {
    try {
        return json::parse(slurp(path));
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

json vec(const Vec3& v) { return json::array({v.x, v.y, v.z}); }
json pix(const Pixel& p) { return json::array({p.u, p.v}); }

Vec3 to_vec3(const json& j, const std::string& what) {
    if (!j.is_array() || j.size() != 3 || !j[0].is_number() || !j[1].is_number() || !j[2].is_number()) {
        throw ConfigError(what + ": expected [x, y, z]");
    }
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

Pixel to_pixel(const json& j, const std::string& what) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
        throw ConfigError(what + ": expected [u, v]");
    }
    return {j[0].get<double>(), j[1].get<double>()};
}

JacobianMatrix jacobian_from(const json& j, const std::string& where) {
    if (!j.contains("values")) throw ConfigError(where + ": missing jacobian.values");
    if (j.contains("units") && j["units"] != "pixel/um") {
        throw ConfigError(where + ": jacobian units must be pixel/um");
    }
    const json& v = j["values"];
    if (!v.is_array() || v.size() != 4) throw ConfigError(where + ": jacobian.values must have 4 rows");
    JacobianMatrix::Matrix m;
    for (int r = 0; r < 4; ++r) {
        if (!v[r].is_array() || v[r].size() != 3) throw ConfigError(where + ": jacobian rows must have 3 entries");
        for (int c = 0; c < 3; ++c) {
            if (!v[r][c].is_number()) throw ConfigError(where + ": jacobian entries must be numbers");
            m(r, c) = v[r][c].get<double>();
        }
    }
    return JacobianMatrix(m);
}

std::array<std::string_view, 2> axis_names(SlicePlane plane) {
    switch (plane) {
    case SlicePlane::XOY: return {"x", "y"};
    case SlicePlane::XOZ: return {"x", "z"};
    case SlicePlane::YOZ: return {"y", "z"};
    }
    return {"a", "b"};
}

} // namespace

void write_text(const fs::path& path, const std::string& content) {
    auto out = open_out(path, true);
    out << content;
}

void write_hologram_csv(const fs::path& path, const PhaseHologram& h) {
    auto out = open_out(path);
    for (int i = 0; i < h.rows(); ++i) {
        for (int j = 0; j < h.cols(); ++j) {
            if (j) out << ',';
            out << g9(h.at(i, j));
        }
        out << '\n';
    }
}

PhaseHologram read_hologram_csv(const fs::path& path) {
    const std::string text = slurp(path);
    std::vector<double> values;
    int rows = 0;
    int cols = -1;
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) continue;
        int n = 0;
        std::size_t start = 0;
        while (start <= line.size()) {
            const auto comma = line.find(',', start);
            const std::string cell = line.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
            double v = 0.0;
            const char* b = cell.data();
            while (b < cell.data() + cell.size() && std::isspace(static_cast<unsigned char>(*b))) ++b;
            const auto [p, ec] = std::from_chars(b, cell.data() + cell.size(), v);
            if (ec != std::errc() || b == cell.data() + cell.size()) {
                throw ConfigError(path.string() + ": row " + std::to_string(rows + 1) + ": bad cell '" + cell + "'");
            }
            values.push_back(v);
            ++n;
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (cols >= 0 && n != cols) throw ConfigError(path.string() + ": ragged rows");
        cols = n;
        ++rows;
    }
    if (rows == 0) throw ConfigError(path.string() + ": empty hologram");
    return PhaseHologram(rows, cols, std::move(values));
}

void write_slice_csv(const fs::path& path, const FieldSlice& s) {
    auto out = open_out(path);
    const auto names = axis_names(s.plane);
    out << names[0] << ',' << names[1] << ",re,im,magnitude\n";
    for (int ib = 0; ib < s.nb; ++ib) {
        for (int ia = 0; ia < s.na; ++ia) {
            const auto& p = s.at(ia, ib);
            out << g9(s.a0 + ia * s.spacing) << ',' << g9(s.b0 + ib * s.spacing) << ',' << g9(p.real()) << ','
                << g9(p.imag()) << ',' << g9(std::abs(p)) << '\n';
        }
    }
}

void write_magnitude_pgm16(const fs::path& path, const FieldSlice& s) {
    double peak = 0.0;
    for (const auto& p : s.values) peak = std::max(peak, std::abs(p));
    auto out = open_out(path, true);
    out << "P5\n" << s.na << ' ' << s.nb << "\n65535\n";
    std::vector<unsigned char> row(std::size_t(s.na) * 2);
    // Top image row = largest b, so z (or y) points up.
    for (int ib = s.nb - 1; ib >= 0; --ib) {
        for (int ia = 0; ia < s.na; ++ia) {
            const double m = peak > 0.0 ? std::abs(s.at(ia, ib)) / peak : 0.0;
            const auto v = static_cast<unsigned>(std::lround(std::clamp(m, 0.0, 1.0) * 65535.0));
            row[2 * ia] = static_cast<unsigned char>(v >> 8);
            row[2 * ia + 1] = static_cast<unsigned char>(v & 0xff);
        }
        out.write(reinterpret_cast<const char*>(row.data()), std::streamsize(row.size()));
    }
}

void write_pgm(const fs::path& path, const ImageFrame& f) {
    auto out = open_out(path, true);
    out << "P5\n" << f.width << ' ' << f.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(f.pixels.data()), std::streamsize(f.pixels.size()));
}

ImageFrame read_pgm(const fs::path& path) {
    const std::string data = slurp(path);
    std::size_t pos = 0;
    auto token = [&]() {
        while (pos < data.size()) {
            if (std::isspace(static_cast<unsigned char>(data[pos]))) {
                ++pos;
            } else if (data[pos] == '#') {
                while (pos < data.size() && data[pos] != '\n') ++pos;
            } else {
                break;
            }
        }
        const std::size_t start = pos;
        while (pos < data.size() && !std::isspace(static_cast<unsigned char>(data[pos]))) ++pos;
        return data.substr(start, pos - start);
    };
    if (token() != "P5") throw ConfigError(path.string() + ": not a binary PGM (P5)");
    ImageFrame f;
    int maxval = 0;
    try {
        f.width = std::stoi(token());
        f.height = std::stoi(token());
        maxval = std::stoi(token());
    } catch (const std::exception&) {
        throw ConfigError(path.string() + ": malformed PGM header");
    }
    if (f.width <= 0 || f.height <= 0 || maxval != 255) {
        throw ConfigError(path.string() + ": only 8-bit PGM frames are supported");
    }
    ++pos; // single whitespace after maxval
    const std::size_t n = std::size_t(f.width) * f.height;
    if (data.size() < pos + n) throw ConfigError(path.string() + ": truncated PGM");
    f.pixels.assign(data.begin() + std::ptrdiff_t(pos), data.begin() + std::ptrdiff_t(pos + n));
    return f;
}

void write_jacobian_json(const fs::path& path, const JacobianMatrix& jacobian, double residual_rms) {
    json values = json::array();
    for (const auto& row : jacobian.rows()) values.push_back(json::array({row[0], row[1], row[2]}));
    json doc = {
        {"jacobian",
         {{"units", "pixel/um"},
          {"rows", {"u_H", "v_H", "u_V", "v_V"}},
          {"cols", {"x", "y", "z"}},
          {"values", values}}},
        {"condition_number", jacobian.condition_number()},
        {"residual_rms_px", residual_rms},
    };
    write_text(path, doc.dump(2) + "\n");
}

JacobianMatrix read_jacobian_json(const fs::path& path) {
    const json doc = parse_json_file(path);
    if (!doc.contains("jacobian")) throw ConfigError(path.string() + ": missing 'jacobian'");
    return jacobian_from(doc["jacobian"], path.string());
}

void write_reference_set_json(const fs::path& path, const ReferenceSet& refs) {
    json entries = json::array();
    for (const auto& e : refs.entries()) {
        entries.push_back({{"world_mm", vec(e.world)}, {"pixel_H", pix(e.pixel_h)}, {"pixel_V", pix(e.pixel_v)}});
    }
    const auto& f = refs.pixel_centroid();
    json doc = {
        {"units", {{"world", "mm"}, {"pixel", "px"}}},
        {"count", refs.size()},
        {"centroid",
         {{"world_mm", vec(refs.world_centroid())},
          {"pixel_H", json::array({f(0), f(1)})},
          {"pixel_V", json::array({f(2), f(3)})}}},
        {"entries", entries},
    };
    write_text(path, doc.dump(2) + "\n");
}

ReferenceSet read_reference_set_json(const fs::path& path) {
    const json doc = parse_json_file(path);
    if (!doc.contains("entries") || !doc["entries"].is_array()) {
        throw ConfigError(path.string() + ": missing 'entries'");
    }
    std::vector<ReferenceEntry> entries;
    for (const auto& e : doc["entries"]) {
        entries.push_back({to_vec3(e.value("world_mm", json()), path.string() + ": world_mm"),
                           to_pixel(e.value("pixel_H", json()), path.string() + ": pixel_H"),
                           to_pixel(e.value("pixel_V", json()), path.string() + ": pixel_V")});
    }
    return ReferenceSet(std::move(entries));
}

StereoFixture read_stereo_fixture(const fs::path& path) {
    const json doc = parse_json_file(path);
    StereoFixture f;
    f.jacobian = jacobian_from(doc.at("jacobian"), path.string());
    const json& c = doc.at("reference_centroid");
    f.world_centroid = to_vec3(c.at("world_mm"), "world_mm");
    f.pixel_h = to_pixel(c.at("pixel_H"), "pixel_H");
    f.pixel_v = to_pixel(c.at("pixel_V"), "pixel_V");
    f.reference_count = c.at("count").get<int>();
    f.width = doc.at("image_size").at(0).get<int>();
    f.height = doc.at("image_size").at(1).get<int>();
    return f;
}

std::string trap_report_json(const TrapReport& r, bool include_frames) {
    json attempts = json::array();
    for (const auto& a : r.attempts) {
        attempts.push_back({
            {"third_frame_t", a.third_frame_t},
            {"activation_t", a.activation_t},
            {"predicted", vec(a.prediction.predicted)},
            {"velocity_mm_s", vec(a.prediction.velocity)},
            {"horizon_s", a.prediction.horizon},
            {"trap_position", vec(a.trap_position)},
            {"particle_at_activation", vec(a.particle_at_activation)},
            {"deviation_mm", a.deviation},
            {"contained", a.contained},
        });
    }
    json doc = {
        {"seed", r.seed},
        {"outcome", r.trapped ? "trapped" : "failed"},
        {"reason", r.failure ? json(std::string(to_string(*r.failure))) : json(nullptr)},
        {"contrast", std::string(to_string(r.contrast))},
        {"trap_kind", r.trap_kind},
        {"diameter_um", r.diameter_um},
        {"time_to_trap_s", r.time_to_trap},
        {"confirmed_at_s", r.confirmed_at},
        {"trap_position", vec(r.trap_position)},
        {"particle_at_activation", vec(r.particle_at_activation)},
        {"deviation_mm", r.deviation},
        {"ticks", r.ticks},
        {"attempts", attempts},
    };
    if (include_frames) {
        json frames = json::array();
        for (const auto& f : r.frames) {
            json fr = {{"tick", f.tick}, {"t", f.t}, {"state", f.state}, {"truth", vec(f.truth)}};
            if (f.acquired) {
                fr["dropout"] = f.dropout;
                fr["detected"] = f.detected;
                if (f.detected) fr["observed"] = vec(f.observed);
            }
            frames.push_back(std::move(fr));
        }
        doc["frames"] = std::move(frames);
    }
    return doc.dump();
}

SimScenario read_scenario_json(const fs::path& path) {
    const json doc = parse_json_file(path);
    if (!doc.is_object()) throw ConfigError(path.string() + ": scenario must be a JSON object");
    static const std::vector<std::string> known = {"position",          "velocity",          "diameter_um",
                                                   "contrast",          "pixel_noise_sigma", "image_noise_sigma",
                                                   "dropout_probability", "seed",            "trap_diameter"};
    for (auto it = doc.begin(); it != doc.end(); ++it) {
        if (std::find(known.begin(), known.end(), it.key()) == known.end()) {
            throw ConfigError(path.string() + ": unknown scenario key '" + it.key() + "'");
        }
    }
    auto number = [&](const char* key, double fallback) {
        if (!doc.contains(key)) return fallback;
        if (!doc[key].is_number()) throw ConfigError(path.string() + ": " + key + " must be a number");
        return doc[key].get<double>();
    };
    SimScenario s;
    if (!doc.contains("position")) throw ConfigError(path.string() + ": scenario needs 'position'");
    s.particle.position = to_vec3(doc["position"], path.string() + ": position");
    if (doc.contains("velocity")) s.particle.velocity = to_vec3(doc["velocity"], path.string() + ": velocity");
    else s.particle.velocity = {0.0, 0.0, -10.0};
    s.particle.diameter_um = number("diameter_um", 400.0);
    if (!(s.particle.diameter_um > 0.0 && s.particle.diameter_um <= 1000.0)) {
        throw ConfigError(path.string() + ": diameter_um must be in (0, 1000]");
    }
    if (doc.contains("contrast")) {
        if (!doc["contrast"].is_string()) throw ConfigError(path.string() + ": contrast must be a string");
        s.particle.contrast = parse_contrast(doc["contrast"].get<std::string>());
    }
    s.pixel_noise_sigma = number("pixel_noise_sigma", 0.0);
    s.image_noise_sigma = number("image_noise_sigma", 0.0);
    s.dropout_probability = number("dropout_probability", 0.0);
    if (doc.contains("seed")) {
        if (!doc["seed"].is_number_unsigned()) throw ConfigError(path.string() + ": seed must be a non-negative integer");
        s.seed = doc["seed"].get<std::uint64_t>();
    }
    if (doc.contains("trap_diameter")) s.trap_diameter = number("trap_diameter", 2.4);
    return s;
}

void write_trials_csv(const fs::path& path, const std::vector<TrapReport>& reports) {
    auto out = open_out(path);
    out << "run,seed,contrast,trap_kind,diameter_um,outcome,reason,attempts,time_to_trap_s,"
           "particle_x,particle_y,particle_z,trap_x,trap_y,trap_z,deviation_mm\n";
    for (std::size_t i = 0; i < reports.size(); ++i) {
        const auto& r = reports[i];
        out << i << ',' << r.seed << ',' << to_string(r.contrast) << ',' << r.trap_kind << ',' << g9(r.diameter_um)
            << ',' << (r.trapped ? "trapped" : "failed") << ',' << (r.failure ? to_string(*r.failure) : "") << ','
            << r.attempts.size() << ',' << g9(r.time_to_trap) << ',' << g9(r.particle_at_activation.x) << ','
            << g9(r.particle_at_activation.y) << ',' << g9(r.particle_at_activation.z) << ','
            << g9(r.trap_position.x) << ',' << g9(r.trap_position.y) << ',' << g9(r.trap_position.z) << ','
            << g9(r.deviation) << '\n';
    }
}

void write_summary_csv(const fs::path& path, const BatchSummary& s) {
    auto out = open_out(path);
    out << "runs,trapped,success_rate,mean_deviation_mm,median_deviation_mm,mean_time_to_trap_s\n";
    out << s.runs << ',' << s.trapped << ',' << g9(s.success_rate) << ',' << g9(s.mean_deviation) << ','
        << g9(s.median_deviation) << ',' << g9(s.mean_time_to_trap) << '\n';
}

std::string feature_json(const FeatureObservation& obs, const std::string& camera, double timestamp) {
    json doc = {{"camera", camera}, {"t", timestamp}, {"valid", obs.valid}};
    if (obs.valid) {
        doc["u"] = obs.u;
        doc["v"] = obs.v;
        doc["semi_major"] = obs.semi_major;
        doc["semi_minor"] = obs.semi_minor;
    } else {
        doc["reason"] = obs.reason;
    }
    return doc.dump();
}

void write_manifest(const fs::path& dir, const RunManifest& m) {
    json config = json::parse(m.config_json.empty() ? "{}" : m.config_json);
    json doc = {
        {"tool", "acoustrap"},
        {"version", m.tool_version},
        {"seed", m.seed},
        {"command_line", m.command_line},
        {"config", config},
        {"outputs", m.outputs},
    };
    write_text(dir / "manifest.json", doc.dump(2) + "\n");
}

} // namespace acoustrap::io
