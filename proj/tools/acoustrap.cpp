// acoustrap: command-line front end of the trapping simulator.
//
// Exit codes (see docs/cli.md):
//   0 success, 1 unexpected error, 2 configuration or usage error,
//   3 geometry error, 4 detection failure, 5 calibration error.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "acoustrap/calibration.hpp"
#include "acoustrap/config.hpp"
#include "acoustrap/control.hpp"
#include "acoustrap/field.hpp"
#include "acoustrap/hologram.hpp"
#include "acoustrap/io.hpp"
#include "acoustrap/kernels.hpp"
#include "acoustrap/vision.hpp"

#ifndef ACOUSTRAP_VERSION
#define ACOUSTRAP_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using namespace acoustrap;

namespace {

enum ExitCode : int {
    kOk = 0,
    kUnexpected = 1,
    kConfigError = 2,
    kGeometryError = 3,
    kDetectionFailure = 4,
    kCalibrationError = 5,
};

struct Globals {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir = "out";
    std::vector<std::string> overrides;
    std::string isa;
    std::vector<std::string> argv;
};

/// Output directory plus the manifest bookkeeping every subcommand shares.
class Run {
public:
    Run(const Globals& g, std::string command) : globals_(g) {
        if (!g.isa.empty()) kernels::set_isa(kernels::parse_isa(g.isa));
        std::string path = g.config_path;
        if (path.empty()) {
            if (const char* env = std::getenv(kConfigEnv); env && *env) path = env;
        }
        config = path.empty() ? parse_config("", g.overrides) : load_config(path, g.overrides);
        if (g.seed) config.seed = *g.seed;
        dir = fs::path(g.out_dir) / command;
        fs::create_directories(dir);
    }

    fs::path file(const std::string& name) {
        outputs_.push_back(name);
        return dir / name;
    }

    void finish() {
        io::RunManifest m;
        m.tool_version = ACOUSTRAP_VERSION;
        m.config_json = config_to_json(config, -1);
        m.seed = config.seed;
        m.command_line = globals_.argv;
        m.outputs = outputs_;
        io::write_manifest(dir, m);
    }

    SimConfig config;
    fs::path dir;

private:
    const Globals& globals_;
    std::vector<std::string> outputs_;
};

std::string fmt(double v, const char* spec = "%.6g") {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

std::vector<Vec3> read_points_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path.string() + "'");
    std::vector<Vec3> pts;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() < 3) continue;
        const std::string tail = cells[cells.size() - 3] + "," + cells[cells.size() - 2] + "," + cells.back();
        try {
            pts.push_back(parse_vec3(tail));
        } catch (const ConfigError&) {
            if (pts.empty()) continue; // header line
            throw;
        }
    }
    return pts;
}

// ---------------------------------------------------------------------------
// hologram

struct HologramArgs {
    std::string at;
    std::string center;
    double diameter = 0.0;
    std::vector<std::string> targets;
    std::string targets_file;
    int iters = 0;
};

void write_hologram_meta(Run& run, const std::string& kind, const PhaseHologram& h, const std::string& extra) {
    std::ostringstream os;
    os << "{\n  \"kind\": \"" << kind << "\",\n  \"rows\": " << h.rows() << ",\n  \"cols\": " << h.cols()
       << ",\n  \"units\": \"rad\",\n  \"wavelength_mm\": " << fmt(wavelength(run.config.medium, run.config.array), "%.9g")
       << extra << "\n}\n";
    io::write_text(run.file("hologram.json"), os.str());
}

int cmd_hologram_focus(const Globals& g, const HologramArgs& a) {
    Run run(g, "hologram");
    const Vec3 focal = parse_vec3(a.at);
    const auto h = make_focus_hologram(run.config.array, focal, run.config.medium);
    io::write_hologram_csv(run.file("hologram.csv"), h);
    write_hologram_meta(run, "focus", h, ",\n  \"focal_mm\": [" + fmt(focal.x) + ", " + fmt(focal.y) + ", " +
                                             fmt(focal.z) + "]");
    run.finish();
    std::cout << "focus hologram " << h.rows() << "x" << h.cols() << " -> " << run.dir.string() << "\n";
    return kOk;
}

int cmd_hologram_octa(const Globals& g, const HologramArgs& a) {
    Run run(g, "hologram");
    const Vec3 center = parse_vec3(a.center);
    const double diameter = a.diameter > 0.0 ? a.diameter : run.config.hologram.octahedron_diameter;
    const auto h = make_octahedral_hologram(run.config.array, center, diameter, run.config.medium);
    io::write_hologram_csv(run.file("hologram.csv"), h);
    static constexpr const char* names[] = {"+x", "-x", "+y", "-y", "+z", "-z"};
    std::ostringstream vs;
    vs << "vertex,x,y,z\n";
    const auto verts = octahedron_vertexes(center, diameter);
    for (int k = 0; k < 6; ++k) {
        vs << names[k] << ',' << fmt(verts[k].x, "%.9g") << ',' << fmt(verts[k].y, "%.9g") << ','
           << fmt(verts[k].z, "%.9g") << '\n';
    }
    io::write_text(run.file("vertexes.csv"), vs.str());
    write_hologram_meta(run, "octahedral", h,
                        ",\n  \"center_mm\": [" + fmt(center.x) + ", " + fmt(center.y) + ", " + fmt(center.z) +
                            "],\n  \"diameter_mm\": " + fmt(diameter));
    run.finish();
    std::cout << "octahedral hologram " << h.rows() << "x" << h.cols() << ", diameter " << diameter << " mm -> "
              << run.dir.string() << "\n";
    return kOk;
}

int cmd_hologram_ib(const Globals& g, const HologramArgs& a) {
    Run run(g, "hologram");
    std::vector<Vec3> targets;
    for (const auto& t : a.targets) targets.push_back(parse_vec3(t));
    if (!a.targets_file.empty()) {
        const auto more = read_points_file(a.targets_file);
        targets.insert(targets.end(), more.begin(), more.end());
    }
    if (targets.empty()) throw ConfigError("ib needs --targets or --targets-file");
    const int iters = a.iters > 0 ? a.iters : run.config.hologram.ib_iterations;
    const auto result = ib_baseline_hologram(run.config.array, targets, run.config.medium, iters);
    io::write_hologram_csv(run.file("hologram.csv"), result.hologram);
    std::ostringstream cs;
    cs << "iteration,cost\n";
    for (std::size_t i = 0; i < result.cost.size(); ++i) cs << i + 1 << ',' << fmt(result.cost[i], "%.17g") << '\n';
    io::write_text(run.file("ib_cost.csv"), cs.str());
    write_hologram_meta(run, "ib", result.hologram,
                        ",\n  \"targets\": " + std::to_string(targets.size()) + ",\n  \"iterations\": " +
                            std::to_string(iters));
    run.finish();
    std::cout << "ib hologram, " << targets.size() << " targets, " << iters << " iterations, final cost "
              << fmt(result.cost.back()) << " -> " << run.dir.string() << "\n";
    return kOk;
}

// ---------------------------------------------------------------------------
// field

struct FieldArgs {
    std::string hologram;
    std::string plane = "xoy";
    std::string center = "25,25,40";
    std::optional<double> x, y, z;
    double resolution = 0.0;
    double half_extent = 0.0;
    std::string model;
    std::string trap;     // focus|octa, for the quality summary
    double diameter = 0.0;
};

int cmd_field(const Globals& g, const FieldArgs& a) {
    Run run(g, "field");
    const auto& cfg = run.config;
    if (!fs::exists(a.hologram)) throw ConfigError("hologram file '" + a.hologram + "' does not exist");
    const auto h = io::read_hologram_csv(a.hologram);
    const SlicePlane plane = parse_plane(a.plane);
    Vec3 c = parse_vec3(a.center);
    if (a.x) c.x = *a.x;
    if (a.y) c.y = *a.y;
    if (a.z) c.z = *a.z;
    PropagationModel model = cfg.field.model;
    if (a.model == "piston") model = PropagationModel::Piston;
    else if (a.model == "monopole") model = PropagationModel::Monopole;
    else if (!a.model.empty()) throw ConfigError("--model must be monopole or piston");

    const double lambda = wavelength(cfg.medium, cfg.array);
    const double res = a.resolution > 0.0 ? a.resolution : (cfg.field.resolution > 0.0 ? cfg.field.resolution : lambda / 8.0);
    const double half_req = a.half_extent > 0.0 ? a.half_extent : cfg.field.half_extent;
    // Snap so that the slice center is a grid node.
    const double half = std::max(1.0, std::floor(half_req / res + 1e-9)) * res;
    double offset = 0.0;
    SliceBounds b;
    switch (plane) {
    case SlicePlane::XOY: offset = c.z; b = {c.x - half, c.x + half, c.y - half, c.y + half}; break;
    case SlicePlane::XOZ: offset = c.y; b = {c.x - half, c.x + half, c.z - half, c.z + half}; break;
    case SlicePlane::YOZ: offset = c.x; b = {c.y - half, c.y + half, c.z - half, c.z + half}; break;
    }
    const auto slice = field_slice(cfg.array, h, plane, offset, b, res, cfg.medium, model, cfg.tank);
    io::write_slice_csv(run.file("slice.csv"), slice);
    io::write_magnitude_pgm16(run.file("slice.pgm"), slice);

    std::size_t best = 0;
    for (std::size_t i = 1; i < slice.values.size(); ++i)
        if (std::abs(slice.values[i]) > std::abs(slice.values[best])) best = i;
    const Vec3 peak = slice.point(int(best % std::size_t(slice.na)), int(best / std::size_t(slice.na)));

    std::ostringstream js;
    js << "{\n  \"plane\": \"" << to_string(plane) << "\",\n  \"offset_mm\": " << fmt(offset)
       << ",\n  \"resolution_mm\": " << fmt(res) << ",\n  \"samples\": [" << slice.na << ", " << slice.nb
       << "],\n  \"model\": \"" << (model == PropagationModel::Piston ? "piston" : "monopole")
       << "\",\n  \"peak_magnitude\": " << fmt(std::abs(slice.values[best]), "%.9g") << ",\n  \"peak_mm\": ["
       << fmt(peak.x) << ", " << fmt(peak.y) << ", " << fmt(peak.z) << "]";
    if (!a.trap.empty()) {
        TrapSpec trap;
        if (a.trap == "focus") trap = FocusTrap{c};
        else if (a.trap == "octa") trap = OctahedralTrap{c, a.diameter > 0.0 ? a.diameter : cfg.hologram.octahedron_diameter};
        else throw ConfigError("--trap must be focus or octa");
        const auto q = trap_quality(cfg.array, h, trap, cfg.medium, model);
        js << ",\n  \"quality\": {\"center_magnitude\": " << fmt(q.center_magnitude, "%.9g");
        if (q.vertex_magnitudes) {
            js << ", \"contrast_ratio\": " << fmt(q.contrast_ratio, "%.9g") << ", \"vertex_magnitudes\": [";
            for (int k = 0; k < 6; ++k) js << (k ? ", " : "") << fmt((*q.vertex_magnitudes)[k], "%.9g");
            js << "]";
        } else {
            js << ", \"lateral_fwhm_mm\": " << fmt(q.lateral_fwhm, "%.9g") << ", \"axial_fwhm_mm\": "
               << fmt(q.axial_fwhm, "%.9g");
        }
        js << "}";
    }
    js << "\n}\n";
    io::write_text(run.file("field_summary.json"), js.str());
    run.finish();
    std::cout << to_string(plane) << " slice " << slice.na << "x" << slice.nb << ", peak |p| "
              << fmt(std::abs(slice.values[best])) << " at " << to_string(peak) << " -> " << run.dir.string() << "\n";
    return kOk;
}

// ---------------------------------------------------------------------------
// calibrate

struct CalibrateArgs {
    std::optional<double> noise;
    bool acquire = true;
};

int cmd_calibrate(const Globals& g, const CalibrateArgs& a) {
    Run run(g, "calibrate");
    const auto& cfg = run.config;
    const CameraModel h = camera_h(cfg);
    const CameraModel v = camera_v(cfg);
    const JacobianMatrix truth = JacobianMatrix::from_cameras(h, v);
    const double noise = a.noise.value_or(cfg.calibration.pixel_noise);

    // Motion increments along random directions, observed with uniform pixel noise.
    std::mt19937_64 rng(splitmix64(cfg.seed));
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> jitter(-noise, noise);
    std::vector<MotionPair> pairs;
    for (int k = 0; k < cfg.calibration.moves; ++k) {
        Vec3 d{gauss(rng), gauss(rng), gauss(rng)};
        d = d * (cfg.calibration.move_um / d.norm());
        const Eigen::Vector4d df = truth.matrix() * Eigen::Vector3d(d.x, d.y, d.z);
        MotionPair p{d, {df(0), df(1), df(2), df(3)}};
        for (double& px : p.pixels) px += noise > 0.0 ? jitter(rng) : 0.0;
        pairs.push_back(p);
    }
    const auto est = calibrate_jacobian(pairs);
    io::write_jacobian_json(run.file("jacobian.json"), est.jacobian, est.residual_rms);
    // Entry errors relative to the dominant magnitude: the off-axis entries are
    // too small to be resolved individually at sub-pixel noise.
    const double worst =
        (est.jacobian.matrix() - truth.matrix()).cwiseAbs().maxCoeff() / truth.matrix().cwiseAbs().maxCoeff();

    std::size_t boundary_hits = 0;
    std::vector<ReferenceEntry> entries;
    const auto lattice = reference_lattice(h.ref_world, cfg.calibration.lattice_spacing);
    if (a.acquire) {
        for (std::size_t k = 0; k < lattice.size(); ++k) {
            const auto acq = acquire_reference(cfg.array, cfg.medium, lattice[k], cfg.calibration.scan, h, v, noise,
                                               splitmix64(cfg.seed + 101 + k));
            boundary_hits += acq.on_boundary;
            entries.push_back(acq.entry);
        }
    } else {
        for (const auto& p : lattice) entries.push_back({p, project(h, p), project(v, p)});
    }
    const ReferenceSet refs(std::move(entries));
    io::write_reference_set_json(run.file("references.json"), refs);

    const Vec3 c = refs.world_centroid();
    std::ostringstream js;
    js << "{\n  \"moves\": " << pairs.size() << ",\n  \"pixel_noise_px\": " << fmt(noise)
       << ",\n  \"residual_rms_px\": " << fmt(est.residual_rms) << ",\n  \"max_relative_entry_error\": " << fmt(worst)
       << ",\n  \"condition_number\": " << fmt(est.jacobian.condition_number()) << ",\n  \"references\": "
       << refs.size() << ",\n  \"reference_scan_boundary_hits\": " << boundary_hits
       << ",\n  \"reference_centroid_mm\": [" << fmt(c.x, "%.9g") << ", " << fmt(c.y, "%.9g") << ", "
       << fmt(c.z, "%.9g") << "]\n}\n";
    io::write_text(run.file("calibration_report.json"), js.str());
    run.finish();
    std::cout << "Jacobian from " << pairs.size() << " moves: residual " << fmt(est.residual_rms)
              << " px, worst entry error " << fmt(100.0 * worst, "%.3g") << "%; " << refs.size()
              << " references, centroid " << to_string(c) << " -> " << run.dir.string() << "\n";
    return kOk;
}

// ---------------------------------------------------------------------------
// vision

struct VisionArgs {
    std::string at = "25,25,40";
    std::string velocity = "0,0,0";
    double diameter = 400.0;
    double noise = 0.0;
    int frames = 1;
    std::string camera = "both";
    std::string input;
    std::string background;
};

int cmd_vision(const Globals& g, const VisionArgs& a) {
    Run run(g, "vision");
    const auto& cfg = run.config;
    bool all_valid = true;
    std::ostringstream lines;

    if (!a.input.empty()) {
        if (a.background.empty()) throw ConfigError("--input needs --background");
        const auto frame = io::read_pgm(a.input);
        const auto bg = io::read_pgm(a.background);
        const CameraModel cam = a.camera == "v" ? camera_v(cfg) : camera_h(cfg);
        const auto obs = extract_feature(frame, bg, expected_diameter_px(cam, a.diameter), cfg.seed, cfg.vision);
        all_valid = obs.valid;
        lines << io::feature_json(obs, cam.name, 0.0) << '\n';
    } else {
        if (a.frames < 1) throw ConfigError("--frames must be >= 1");
        std::vector<CameraModel> cams;
        if (a.camera == "h" || a.camera == "both") cams.push_back(camera_h(cfg));
        if (a.camera == "v" || a.camera == "both") cams.push_back(camera_v(cfg));
        if (cams.empty()) throw ConfigError("--camera must be h, v or both");
        ParticleState p;
        p.position = parse_vec3(a.at);
        p.velocity = parse_vec3(a.velocity);
        p.diameter_um = a.diameter;
        if (!(p.diameter_um > 0.0 && p.diameter_um <= 1000.0)) throw ConfigError("--diameter must be in (0, 1000] um");
        std::vector<ImageFrame> backgrounds;
        for (auto& cam : cams) {
            cam.noise_sigma = a.noise;
            backgrounds.push_back(render_background(cam));
            io::write_pgm(run.file("background_" + cam.name + ".pgm"), backgrounds.back());
        }
        const double dt = cfg.timing.frame_interval();
        for (int n = 0; n < a.frames; ++n) {
            const double t = n * dt;
            for (std::size_t ci = 0; ci < cams.size(); ++ci) {
                const auto& cam = cams[ci];
                const std::uint64_t s = splitmix64(cfg.seed ^ (std::uint64_t(n) << 8) ^ ci);
                const auto frame = render_frame(cam, p, t, s);
                char name[64];
                std::snprintf(name, sizeof name, "frame_%s_%04d.pgm", cam.name.c_str(), n);
                io::write_pgm(run.file(name), frame);
                const auto obs = extract_feature(frame, backgrounds[ci], expected_diameter_px(cam, a.diameter),
                                                 splitmix64(s), cfg.vision);
                all_valid = all_valid && obs.valid;
                lines << io::feature_json(obs, cam.name, t) << '\n';
            }
            p = step_particle(p, dt);
        }
    }
    io::write_text(run.file("features.jsonl"), lines.str());
    run.finish();
    std::cout << lines.str();
    if (!all_valid) throw DetectionError("particle not detected in at least one frame");
    return kOk;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateArgs {
    std::string scenario;
    std::size_t batch = 0;
    std::optional<double> noise;
    std::optional<double> dropout;
    std::string contrast;
    unsigned threads = 0;
    bool frames = false;
};

int cmd_simulate(const Globals& g, const SimulateArgs& a) {
    Run run(g, "simulate");
    auto& cfg = run.config;
    if (a.scenario.empty() == (a.batch == 0)) throw ConfigError("simulate needs exactly one of --scenario or --batch");
    const SimWorld world = make_sim_world(cfg);

    std::vector<SimScenario> scenarios;
    if (!a.scenario.empty()) {
        SimScenario s = io::read_scenario_json(a.scenario);
        s.timing = cfg.timing;
        if (g.seed) s.seed = *g.seed;
        if (a.noise) s.pixel_noise_sigma = *a.noise;
        if (a.dropout) s.dropout_probability = *a.dropout;
        if (!a.contrast.empty()) s.particle.contrast = parse_contrast(a.contrast);
        scenarios.push_back(s);
    } else {
        BatchSpec spec = cfg.batch;
        spec.count = a.batch;
        spec.seed = cfg.seed;
        if (a.noise) spec.pixel_noise_sigma = *a.noise;
        if (a.dropout) spec.dropout_probability = *a.dropout;
        if (!a.contrast.empty()) spec.contrast = parse_contrast(a.contrast);
        scenarios = make_batch(spec, cfg.workspace);
    }

    const auto reports = run_batch(scenarios, world, a.threads);
    std::ostringstream jl;
    for (const auto& r : reports) jl << io::trap_report_json(r, a.frames || reports.size() == 1) << '\n';
    io::write_text(run.file("reports.jsonl"), jl.str());
    io::write_trials_csv(run.file("trials.csv"), reports);
    const auto summary = summarize(reports);
    io::write_summary_csv(run.file("summary.csv"), summary);
    run.finish();

    std::cout << "runs " << summary.runs << ", trapped " << summary.trapped << " ("
              << fmt(100.0 * summary.success_rate, "%.1f") << "%), median deviation "
              << fmt(summary.median_deviation, "%.4f") << " mm, mean time to trap "
              << fmt(summary.mean_time_to_trap, "%.3f") << " s -> " << run.dir.string() << "\n";
    if (reports.size() == 1 && reports[0].failure == FailureReason::DetectionStarvation) {
        throw DetectionError("particle never confirmed by the cameras");
    }
    return kOk;
}

// ---------------------------------------------------------------------------
// bench

struct BenchArgs {
    int repeats = 21;
    int ib_iters = 0;
};

double median_ms(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

template <class F>
double time_median(int repeats, F&& f) {
    std::vector<double> ms;
    for (int r = 0; r < repeats; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        f();
        ms.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
    }
    return median_ms(std::move(ms));
}

int cmd_bench(const Globals& g, const BenchArgs& a) {
    Run run(g, "bench");
    const auto& cfg = run.config;
    if (a.repeats < 1) throw ConfigError("--repeats must be >= 1");
    const int ib_iters = a.ib_iters > 0 ? a.ib_iters : cfg.hologram.ib_iterations;
    const Vec3 center = cfg.workspace.center;
    const double dia = cfg.hologram.octahedron_diameter;
    const auto verts = octahedron_vertexes(center, dia);

    volatile double sink = 0.0;
    const double focus_ms = time_median(a.repeats, [&] {
        sink = make_focus_hologram(cfg.array, center, cfg.medium).at(0, 0);
    });
    const double sm_ms = time_median(a.repeats, [&] {
        sink = make_octahedral_hologram(cfg.array, center, dia, cfg.medium).at(0, 0);
    });
    const int ib_repeats = std::max(1, std::min(a.repeats, 5));
    const double ib_ms = time_median(ib_repeats, [&] {
        sink = ib_baseline_hologram(cfg.array, verts, cfg.medium, ib_iters).hologram.at(0, 0);
    });
    (void)sink;

    const double dispatch_budget_ms = 1e3 * cfg.timing.t_trans;
    const double cadence_ms = 1e3 / cfg.timing.poh_update_fps;
    std::ostringstream js;
    js << "{\n  \"isa\": \"" << kernels::to_string(kernels::active_isa()) << "\",\n  \"elements\": "
       << cfg.array.size() << ",\n  \"repeats\": " << a.repeats << ",\n  \"median_ms\": {\"focus\": " << fmt(focus_ms)
       << ", \"sm_octahedral\": " << fmt(sm_ms) << ", \"ib\": " << fmt(ib_ms) << "},\n  \"ib_iterations\": "
       << ib_iters << ",\n  \"ib_over_sm\": " << fmt(ib_ms / sm_ms) << ",\n  \"dispatch_budget_ms\": "
       << fmt(dispatch_budget_ms) << ",\n  \"poh_cadence_ms\": " << fmt(cadence_ms)
       << ",\n  \"sm_fits_dispatch_budget\": " << (sm_ms < dispatch_budget_ms ? "true" : "false")
       << ",\n  \"sm_fits_poh_cadence\": " << (sm_ms < cadence_ms ? "true" : "false")
       << ",\n  \"ib_fits_poh_cadence\": " << (ib_ms < cadence_ms ? "true" : "false") << "\n}\n";
    io::write_text(run.file("bench.json"), js.str());
    run.finish();

    std::printf("isa %s, %zu elements\n", std::string(kernels::to_string(kernels::active_isa())).c_str(),
                cfg.array.size());
    std::printf("  focus            %10.3f ms\n", focus_ms);
    std::printf("  SM octahedral    %10.3f ms   (dispatch budget %.0f ms, POH cadence %.1f ms)\n", sm_ms,
                dispatch_budget_ms, cadence_ms);
    std::printf("  IB %4d iters     %10.3f ms   (%.0fx SM)\n", ib_iters, ib_ms, ib_ms / sm_ms);
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    Globals g;
    g.argv.assign(argv, argv + argc);

    CLI::App app{"acoustrap: automated acoustic trapping simulator"};
    app.set_version_flag("--version", ACOUSTRAP_VERSION);
    app.require_subcommand(1);
    app.option_defaults()->always_capture_default();
    app.add_option("--config", g.config_path,
                   std::string("JSON configuration file (default: $") + kConfigEnv + ", else built-in defaults)");
    app.add_option("--seed", g.seed, "Seed for every random stream (overrides the config)");
    app.add_option("--out-dir", g.out_dir, "Output root; each subcommand writes into <out-dir>/<subcommand>");
    app.add_option("--set", g.overrides, "Configuration override key.path=value (repeatable)");
    app.add_option("--isa", g.isa, "Force the kernel variant: scalar | avx2");

    std::function<int()> action;

    HologramArgs ha;
    auto* hol = app.add_subcommand("hologram", "Phase-only hologram synthesis");
    hol->require_subcommand(1);
    auto* hf = hol->add_subcommand("focus", "Single focal point");
    hf->add_option("--at", ha.at, "Focal point x,y,z (mm)")->required();
    hf->callback([&] { action = [&] { return cmd_hologram_focus(g, ha); }; });
    auto* ho = hol->add_subcommand("octa", "Octahedral trap by spatial multiplexing");
    ho->add_option("--center", ha.center, "Trap center x,y,z (mm)")->required();
    ho->add_option("--diameter", ha.diameter, "Octahedron diameter (mm; default from config)");
    ho->callback([&] { action = [&] { return cmd_hologram_octa(g, ha); }; });
    auto* hi = hol->add_subcommand("ib", "Iterative backpropagation baseline");
    hi->add_option("--targets", ha.targets, "Target points x,y,z ...");
    hi->add_option("--targets-file", ha.targets_file, "CSV whose last three columns are x,y,z (e.g. vertexes.csv)");
    hi->add_option("--iters", ha.iters, "Iterations (default from config)");
    hi->callback([&] { action = [&] { return cmd_hologram_ib(g, ha); }; });

    FieldArgs fa;
    auto* fld = app.add_subcommand("field", "Sample |p| on a plane");
    fld->add_option("--hologram", fa.hologram, "Hologram CSV")->required();
    fld->add_option("--plane", fa.plane, "xoy | xoz | yoz");
    fld->add_option("--center", fa.center, "Slice center x,y,z (mm)");
    fld->add_option("--x", fa.x, "Plane offset for yoz");
    fld->add_option("--y", fa.y, "Plane offset for xoz");
    fld->add_option("--z", fa.z, "Plane offset for xoy");
    fld->add_option("--resolution", fa.resolution, "Grid spacing (mm; default lambda/8)");
    fld->add_option("--half-extent", fa.half_extent, "Half size of the slice (mm)");
    fld->add_option("--model", fa.model, "monopole | piston");
    fld->add_option("--trap", fa.trap, "Report trap quality at --center: focus | octa");
    fld->add_option("--diameter", fa.diameter, "Octahedron diameter for --trap octa (mm)");
    fld->callback([&] { action = [&] { return cmd_field(g, fa); }; });

    CalibrateArgs ca;
    auto* cal = app.add_subcommand("calibrate", "Synthetic Jacobian calibration and reference acquisition");
    cal->add_option("--noise", ca.noise, "Uniform pixel noise bound on observations (+/- px)");
    cal->add_flag("!--no-scan", ca.acquire, "Project the reference lattice directly instead of scanning the field");
    cal->callback([&] { action = [&] { return cmd_calibrate(g, ca); }; });

    VisionArgs va;
    auto* vis = app.add_subcommand("vision", "Render frames and extract the particle feature");
    vis->add_option("--at", va.at, "Particle position x,y,z (mm)");
    vis->add_option("--velocity", va.velocity, "Particle velocity (mm/s)");
    vis->add_option("--diameter", va.diameter, "Particle diameter (um)");
    vis->add_option("--noise", va.noise, "Image noise sigma (gray levels)");
    vis->add_option("--frames", va.frames, "Number of frames at the camera rate");
    vis->add_option("--camera", va.camera, "h | v | both");
    vis->add_option("--input", va.input, "Extract from this P5 PGM instead of rendering");
    vis->add_option("--background", va.background, "Background PGM for --input");
    vis->callback([&] { action = [&] { return cmd_vision(g, va); }; });

    SimulateArgs sa;
    auto* sim = app.add_subcommand("simulate", "Closed-loop trapping runs");
    sim->add_option("--scenario", sa.scenario, "Scenario JSON file");
    sim->add_option("--batch", sa.batch, "Number of generated scenarios");
    sim->add_option("--noise", sa.noise, "Pixel noise sigma (px)");
    sim->add_option("--dropout", sa.dropout, "Per-tick detection dropout probability");
    sim->add_option("--contrast", sa.contrast, "positive | negative");
    sim->add_option("--threads", sa.threads, "Worker threads (0 = all cores)");
    sim->add_flag("--frames", sa.frames, "Include per-frame logs in batch reports");
    sim->callback([&] { action = [&] { return cmd_simulate(g, sa); }; });

    BenchArgs ba;
    auto* ben = app.add_subcommand("bench", "Hologram synthesis timings");
    ben->add_option("--repeats", ba.repeats, "Timed repetitions");
    ben->add_option("--ib-iters", ba.ib_iters, "IB iterations (default from config)");
    ben->callback([&] { action = [&] { return cmd_bench(g, ba); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kConfigError;
    }

    auto fail = [](const char* kind, const std::exception& e, int code) {
        std::cerr << "acoustrap: " << kind << ": " << e.what() << "\n";
        return code;
    };
    try {
        return action();
    } catch (const DetectionError& e) {
        return fail("detection failure", e, kDetectionFailure);
    } catch (const CalibrationError& e) {
        return fail("calibration error", e, kCalibrationError);
    } catch (const GeometryError& e) {
        return fail("geometry error", e, kGeometryError);
    } catch (const ConfigError& e) {
        return fail("configuration error", e, kConfigError);
    } catch (const IndexError& e) {
        return fail("configuration error", e, kConfigError);
    } catch (const std::exception& e) {
        return fail("error", e, kUnexpected);
    }
}
