#include "acoustrap/config.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

namespace acoustrap {

namespace {

using json = nlohmann::json;

struct Key {
    std::string path;
    std::function<void(SimConfig&, const json&)> set;
    std::function<json(const SimConfig&)> get;
};

[[noreturn]] void bad(const std::string& path, const std::string& what) {
    throw ConfigError(path + ": " + what);
}

double as_number(const std::string& path, const json& v) {
    if (!v.is_number()) bad(path, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) bad(path, "must be finite");
    return d;
}

long long as_integer(const std::string& path, const json& v) {
    if (!v.is_number_integer() && !v.is_number_unsigned()) {
        if (v.is_number_float()) {
            const double d = v.get<double>();
            if (std::floor(d) == d && std::abs(d) < 9e15) return static_cast<long long>(d);
        }
        bad(path, "expected an integer");
    }
    return v.get<long long>();
}

Vec3 as_vec3(const std::string& path, const json& v) {
    if (v.is_string()) {
        try {
            return parse_vec3(v.get<std::string>());
        } catch (const Error& e) {
            bad(path, e.what());
        }
    }
    if (!v.is_array() || v.size() != 3) bad(path, "expected [x, y, z]");
    return {as_number(path, v[0]), as_number(path, v[1]), as_number(path, v[2])};
}

json vec3_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

template <class Ref>
Key number(std::string path, Ref ref) {
    return {path,
            [path, ref](SimConfig& c, const json& v) { ref(c) = as_number(path, v); },
            [ref](const SimConfig& c) { return json(ref(const_cast<SimConfig&>(c))); }};
}

template <class Ref>
Key integer(std::string path, Ref ref) {
    return {path,
            [path, ref](SimConfig& c, const json& v) {
                using T = std::remove_reference_t<decltype(ref(c))>;
                const long long n = as_integer(path, v);
                if (n < 0 && std::is_unsigned_v<T>) bad(path, "must be >= 0");
                const bool fits = std::is_unsigned_v<T> && sizeof(T) >= sizeof(long long)
                                      ? true
                                      : n <= static_cast<long long>(std::numeric_limits<T>::max()) &&
                                            n >= static_cast<long long>(std::numeric_limits<T>::min());
                if (!fits) {
                    bad(path, "out of range");
                }
                ref(c) = static_cast<T>(n);
            },
            [ref](const SimConfig& c) { return json(ref(const_cast<SimConfig&>(c))); }};
}

template <class Ref>
Key vec3(std::string path, Ref ref) {
    return {path,
            [path, ref](SimConfig& c, const json& v) { ref(c) = as_vec3(path, v); },
            [ref](const SimConfig& c) { return vec3_json(ref(const_cast<SimConfig&>(c))); }};
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char ch) { return char(std::tolower(ch)); });
    return s;
}

const std::vector<Key>& keys() {
    static const std::vector<Key> k = [] {
        std::vector<Key> v;
        v.push_back(number("medium.sound_speed", [](SimConfig& c) -> double& { return c.medium.sound_speed; }));
        v.push_back(number("medium.density", [](SimConfig& c) -> double& { return c.medium.density; }));

        v.push_back(integer("array.rows", [](SimConfig& c) -> int& { return c.array.rows; }));
        v.push_back(integer("array.cols", [](SimConfig& c) -> int& { return c.array.cols; }));
        v.push_back(number("array.pitch", [](SimConfig& c) -> double& { return c.array.pitch; }));
        v.push_back(number("array.frequency", [](SimConfig& c) -> double& { return c.array.frequency; }));
        v.push_back(vec3("array.origin", [](SimConfig& c) -> Vec3& { return c.array.origin; }));
        v.push_back(number("array.emission_amplitude",
                           [](SimConfig& c) -> double& { return c.array.emission_amplitude; }));

        v.push_back(number("timing.t_dip", [](SimConfig& c) -> double& { return c.timing.t_dip; }));
        v.push_back(number("timing.t_trans", [](SimConfig& c) -> double& { return c.timing.t_trans; }));
        v.push_back(number("timing.camera_fps", [](SimConfig& c) -> double& { return c.timing.camera_fps; }));
        v.push_back(number("timing.poh_update_fps", [](SimConfig& c) -> double& { return c.timing.poh_update_fps; }));
        v.push_back(number("timing.can_baud", [](SimConfig& c) -> double& { return c.timing.can_baud; }));

        v.push_back(vec3("workspace.center", [](SimConfig& c) -> Vec3& { return c.workspace.center; }));
        v.push_back(vec3("workspace.extent", [](SimConfig& c) -> Vec3& { return c.workspace.extent; }));
        v.push_back(vec3("tank.center", [](SimConfig& c) -> Vec3& { return c.tank.center; }));
        v.push_back(vec3("tank.extent", [](SimConfig& c) -> Vec3& { return c.tank.extent; }));

        v.push_back(number("camera.scale", [](SimConfig& c) -> double& { return c.camera.scale; }));
        v.push_back(number("camera.background_level", [](SimConfig& c) -> double& { return c.camera.background_level; }));
        v.push_back(number("camera.particle_level", [](SimConfig& c) -> double& { return c.camera.particle_level; }));

        v.push_back(number("hologram.octahedron_diameter",
                           [](SimConfig& c) -> double& { return c.hologram.octahedron_diameter; }));
        v.push_back(integer("hologram.ib_iterations", [](SimConfig& c) -> int& { return c.hologram.ib_iterations; }));

        v.push_back({"field.model",
                     [](SimConfig& c, const json& j) {
                         if (!j.is_string()) bad("field.model", "expected \"monopole\" or \"piston\"");
                         const auto s = lower(j.get<std::string>());
                         if (s == "monopole") c.field.model = PropagationModel::Monopole;
                         else if (s == "piston") c.field.model = PropagationModel::Piston;
                         else bad("field.model", "expected \"monopole\" or \"piston\", got \"" + s + "\"");
                     },
                     [](const SimConfig& c) {
                         return json(c.field.model == PropagationModel::Piston ? "piston" : "monopole");
                     }});
        v.push_back(number("field.resolution", [](SimConfig& c) -> double& { return c.field.resolution; }));
        v.push_back(number("field.half_extent", [](SimConfig& c) -> double& { return c.field.half_extent; }));

        v.push_back(number("vision.threshold_offset", [](SimConfig& c) -> double& { return c.vision.threshold_offset; }));
        v.push_back(number("vision.min_fill", [](SimConfig& c) -> double& { return c.vision.min_fill; }));
        v.push_back(integer("vision.min_contour", [](SimConfig& c) -> std::size_t& { return c.vision.min_contour; }));
        v.push_back(integer("vision.ransac_iterations",
                            [](SimConfig& c) -> int& { return c.vision.ransac.max_iterations; }));
        v.push_back(number("vision.inlier_band", [](SimConfig& c) -> double& { return c.vision.ransac.inlier_band; }));
        v.push_back(number("vision.early_exit_fraction",
                           [](SimConfig& c) -> double& { return c.vision.ransac.early_exit_fraction; }));

        v.push_back(integer("control.frame_budget", [](SimConfig& c) -> int& { return c.control.frame_budget; }));
        v.push_back(integer("control.hold_ticks", [](SimConfig& c) -> int& { return c.control.hold_ticks; }));
        v.push_back(number("control.containment_tol", [](SimConfig& c) -> double& { return c.control.containment_tol; }));
        v.push_back(number("control.track_tolerance", [](SimConfig& c) -> double& { return c.control.track_tolerance; }));
        v.push_back({"control.target_override",
                     [](SimConfig& c, const json& j) {
                         if (j.is_null()) c.control.target_override.reset();
                         else c.control.target_override = as_vec3("control.target_override", j);
                     },
                     [](const SimConfig& c) {
                         return c.control.target_override ? vec3_json(*c.control.target_override) : json(nullptr);
                     }});

        v.push_back(integer("batch.count", [](SimConfig& c) -> std::size_t& { return c.batch.count; }));
        v.push_back({"batch.contrast",
                     [](SimConfig& c, const json& j) {
                         if (!j.is_string()) bad("batch.contrast", "expected \"positive\" or \"negative\"");
                         try {
                             c.batch.contrast = parse_contrast(j.get<std::string>());
                         } catch (const Error& e) {
                             bad("batch.contrast", e.what());
                         }
                     },
                     [](const SimConfig& c) { return json(std::string(to_string(c.batch.contrast))); }});
        v.push_back(number("batch.pixel_noise_sigma", [](SimConfig& c) -> double& { return c.batch.pixel_noise_sigma; }));
        v.push_back(number("batch.image_noise_sigma", [](SimConfig& c) -> double& { return c.batch.image_noise_sigma; }));
        v.push_back(number("batch.dropout_probability",
                           [](SimConfig& c) -> double& { return c.batch.dropout_probability; }));
        v.push_back(number("batch.fall_speed", [](SimConfig& c) -> double& { return c.batch.fall_speed; }));
        v.push_back(number("batch.lateral_speed", [](SimConfig& c) -> double& { return c.batch.lateral_speed; }));
        v.push_back(number("batch.diameter_min_um", [](SimConfig& c) -> double& { return c.batch.diameter_min_um; }));
        v.push_back(number("batch.diameter_max_um", [](SimConfig& c) -> double& { return c.batch.diameter_max_um; }));

        v.push_back(number("calibration.scan_half_extent",
                           [](SimConfig& c) -> double& { return c.calibration.scan.half_extent; }));
        v.push_back(number("calibration.scan_step", [](SimConfig& c) -> double& { return c.calibration.scan.step; }));
        v.push_back(number("calibration.lattice_spacing",
                           [](SimConfig& c) -> double& { return c.calibration.lattice_spacing; }));
        v.push_back(number("calibration.pixel_noise",
                           [](SimConfig& c) -> double& { return c.calibration.pixel_noise; }));
        v.push_back(integer("calibration.moves", [](SimConfig& c) -> int& { return c.calibration.moves; }));
        v.push_back(number("calibration.move_um", [](SimConfig& c) -> double& { return c.calibration.move_um; }));

        v.push_back(integer("seed", [](SimConfig& c) -> std::uint64_t& { return c.seed; }));
        return v;
    }();
    return k;
}

const Key* find_key(std::string_view path) {
    for (const auto& k : keys())
        if (k.path == path) return &k;
    return nullptr;
}

void flatten(const json& node, const std::string& prefix, std::vector<std::pair<std::string, json>>& out) {
    for (auto it = node.begin(); it != node.end(); ++it) {
        const std::string path = prefix.empty() ? it.key() : prefix + "." + it.key();
        if (find_key(path) == nullptr && it->is_object()) {
            flatten(*it, path, out);
        } else {
            out.emplace_back(path, *it);
        }
    }
}

void set_path(json& doc, const std::string& path, json value) {
    json* node = &doc;
    std::size_t start = 0;
    while (true) {
        const auto dot = path.find('.', start);
        const std::string part = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (part.empty()) throw ConfigError("override key '" + path + "' is malformed");
        if (dot == std::string::npos) {
            (*node)[part] = std::move(value);
            return;
        }
        json& child = (*node)[part];
        if (!child.is_object()) child = json::object();
        node = &child;
        start = dot + 1;
    }
}

void sync_derived(SimConfig& c) {
    c.batch.timing = c.timing;
    c.control.trap_diameter = c.hologram.octahedron_diameter;
}

} // namespace

SimConfig parse_config(std::string_view text, const std::vector<std::string>& overrides) {
    json doc = json::object();
    const bool blank = std::all_of(text.begin(), text.end(), [](unsigned char ch) { return std::isspace(ch); });
    if (!blank) {
        try {
            doc = json::parse(text.begin(), text.end(), nullptr, true, true);
        } catch (const json::parse_error& e) {
            throw ConfigError(std::string("configuration parse error: ") + e.what());
        }
        if (!doc.is_object()) throw ConfigError("configuration must be a JSON object");
    }
    for (const auto& ov : overrides) {
        const auto eq = ov.find('=');
        if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + ov + "' is not key=value");
        const std::string key = ov.substr(0, eq);
        const std::string raw = ov.substr(eq + 1);
        json value = json::parse(raw, nullptr, false);
        if (value.is_discarded()) value = raw;
        set_path(doc, key, std::move(value));
    }

    std::vector<std::pair<std::string, json>> flat;
    flatten(doc, "", flat);
    SimConfig cfg;
    for (const auto& [path, value] : flat) {
        const Key* k = find_key(path);
        if (k == nullptr) throw ConfigError("unknown configuration key '" + path + "'");
        k->set(cfg, value);
    }
    sync_derived(cfg);
    validate(cfg);
    return cfg;
}

SimConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open configuration file '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), overrides);
}

std::string config_to_json(const SimConfig& config, int indent) {
    json doc = json::object();
    for (const auto& k : keys()) set_path(doc, k.path, k.get(config));
    return doc.dump(indent);
}

std::vector<std::string> config_keys() {
    std::vector<std::string> out;
    for (const auto& k : keys()) out.push_back(k.path);
    return out;
}

void validate(const SimConfig& c) {
    validate(c.medium);
    validate(c.array);
    validate(c.timing);
    validate(c.workspace, c.tank);
    if (!(c.camera.scale > 0.0)) throw ConfigError("camera.scale must be > 0");
    if (c.camera.background_level < 0 || c.camera.background_level > 255) {
        throw ConfigError("camera.background_level must be in [0, 255]");
    }
    if (c.camera.particle_level < 0 || c.camera.particle_level > 255) {
        throw ConfigError("camera.particle_level must be in [0, 255]");
    }
    if (!(c.hologram.octahedron_diameter > 0.0)) throw ConfigError("hologram.octahedron_diameter must be > 0");
    if (c.hologram.ib_iterations < 1) throw ConfigError("hologram.ib_iterations must be >= 1");
    if (!(c.field.half_extent > 0.0)) throw ConfigError("field.half_extent must be > 0");
    if (c.field.resolution < 0.0) throw ConfigError("field.resolution must be >= 0");
    if (!(c.vision.min_fill > 0.0 && c.vision.min_fill <= 1.0)) throw ConfigError("vision.min_fill must be in (0, 1]");
    if (c.vision.min_contour < 5) throw ConfigError("vision.min_contour must be >= 5");
    if (c.vision.ransac.max_iterations < 1) throw ConfigError("vision.ransac_iterations must be >= 1");
    if (!(c.vision.ransac.inlier_band > 0.0)) throw ConfigError("vision.inlier_band must be > 0");
    if (!(c.vision.ransac.early_exit_fraction > 0.0 && c.vision.ransac.early_exit_fraction <= 1.0)) {
        throw ConfigError("vision.early_exit_fraction must be in (0, 1]");
    }
    if (c.control.frame_budget < 1) throw ConfigError("control.frame_budget must be >= 1");
    if (c.control.hold_ticks < 1) throw ConfigError("control.hold_ticks must be >= 1");
    if (c.control.containment_tol < 0.0) throw ConfigError("control.containment_tol must be >= 0");
    if (!(c.control.track_tolerance > 0.0)) throw ConfigError("control.track_tolerance must be > 0");
    if (!(c.batch.pixel_noise_sigma >= 0.0)) throw ConfigError("batch.pixel_noise_sigma must be >= 0");
    if (!(c.batch.image_noise_sigma >= 0.0)) throw ConfigError("batch.image_noise_sigma must be >= 0");
    if (!(c.batch.dropout_probability >= 0.0 && c.batch.dropout_probability <= 1.0)) {
        throw ConfigError("batch.dropout_probability must be in [0, 1]");
    }
    if (!(c.batch.diameter_min_um > 0.0) || c.batch.diameter_max_um < c.batch.diameter_min_um ||
        c.batch.diameter_max_um > 1000.0) {
        throw ConfigError("batch.diameter_min_um/diameter_max_um must satisfy 0 < min <= max <= 1000");
    }
    if (!(c.calibration.scan.step > 0.0)) throw ConfigError("calibration.scan_step must be > 0");
    if (!(c.calibration.scan.half_extent > 0.0)) throw ConfigError("calibration.scan_half_extent must be > 0");
    if (!(c.calibration.lattice_spacing > 0.0)) throw ConfigError("calibration.lattice_spacing must be > 0");
    if (c.calibration.pixel_noise < 0.0) throw ConfigError("calibration.pixel_noise must be >= 0");
    if (c.calibration.moves < 3) throw ConfigError("calibration.moves must be >= 3");
    if (!(c.calibration.move_um > 0.0)) throw ConfigError("calibration.move_um must be > 0");
}

CameraModel camera_h(const SimConfig& config) {
    CameraModel cam = make_camera_h(config.camera.scale);
    cam.background = FlatBackground{config.camera.background_level};
    cam.particle_level = config.camera.particle_level;
    return cam;
}

CameraModel camera_v(const SimConfig& config) {
    CameraModel cam = make_camera_v(config.camera.scale);
    cam.background = FlatBackground{config.camera.background_level};
    cam.particle_level = config.camera.particle_level;
    return cam;
}

SimWorld make_sim_world(const SimConfig& config) {
    SimWorld w = make_sim_world(config.array, config.medium, config.workspace, config.tank, config.camera.scale,
                                config.vision, config.control);
    w.camera_h = camera_h(config);
    w.camera_v = camera_v(config);
    w.background_h = render_background(w.camera_h);
    w.background_v = render_background(w.camera_v);
    validate(w);
    return w;
}

} // namespace acoustrap
