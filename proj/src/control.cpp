#include "acoustrap/control.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <random>
#include <stdexcept>
#include <thread>

namespace acoustrap {

namespace {

std::string_view kind_of(Contrast c) { return c == Contrast::Negative ? "focus" : "octahedral"; }

} // namespace

SimWorld make_sim_world(const TransducerArray& array, const MediumConfig& medium, const WorkspaceConfig& workspace,
                        const TankConfig& tank, double camera_scale, const ExtractionParams& extraction,
                        const ControlParams& control) {
    SimWorld w;
    w.array = array;
    w.medium = medium;
    w.workspace = workspace;
    w.tank = tank;
    w.camera_h = make_camera_h(camera_scale);
    w.camera_v = make_camera_v(camera_scale);
    w.background_h = render_background(w.camera_h);
    w.background_v = render_background(w.camera_v);
    w.jacobian = JacobianMatrix::from_cameras(w.camera_h, w.camera_v);
    const auto lattice = reference_lattice(w.camera_h.ref_world);
    w.references = project_references(lattice, w.camera_h, w.camera_v);
    w.extraction = extraction;
    w.control = control;
    validate(w);
    return w;
}

void validate(const SimWorld& w) {
    validate(w.medium);
    validate(w.array);
    validate(w.workspace, w.tank);
    const auto cams = JacobianMatrix::from_cameras(w.camera_h, w.camera_v).matrix();
    const double mismatch = (w.jacobian.matrix() - cams).norm() / cams.norm();
    if (!(mismatch <= 0.05)) {
        throw ConfigError("image Jacobian does not match the camera models (relative mismatch " +
                          std::to_string(mismatch) + ")");
    }
    if (w.references.size() == 0) throw ConfigError("world has no reference points");
    if (w.background_h.width != w.camera_h.width || w.background_h.height != w.camera_h.height ||
        w.background_v.width != w.camera_v.width || w.background_v.height != w.camera_v.height) {
        throw ConfigError("background frames do not match the camera image sizes");
    }
    if (w.control.frame_budget < 1) throw ConfigError("control.frame_budget must be >= 1");
    if (w.control.hold_ticks < 1) throw ConfigError("control.hold_ticks must be >= 1");
    if (!(w.control.trap_diameter > 0.0)) throw ConfigError("control.trap_diameter must be > 0");
    if (!(w.control.track_tolerance > 0.0)) throw ConfigError("control.track_tolerance must be > 0");
}

ParticleState step_particle(const ParticleState& state, double dt) {
    if (!(dt > 0.0)) throw ConfigError("time step must be > 0");
    ParticleState next = state;
    next.position += state.velocity * dt;
    return next;
}

bool containment(const Vec3& particle, const TrapSpec& trap, double tol) {
    return distance(particle, trap_center(trap)) <= tol;
}

std::string_view to_string(FailureReason reason) {
    switch (reason) {
    case FailureReason::LeftFieldOfView: return "left_field_of_view";
    case FailureReason::DetectionStarvation: return "detection_starvation";
    case FailureReason::FrameBudgetExhausted: return "frame_budget_exhausted";
    }
    return "unknown";
}

std::string_view state_name(const LoopState& state) {
    static constexpr std::string_view names[] = {"material_selected", "acquiring", "predicting", "dispatching",
                                                 "field_active",      "verifying", "trapped",    "failed"};
    return names[state.index()];
}

bool is_terminal(const LoopState& state) {
    return std::holds_alternative<Trapped>(state) || std::holds_alternative<Failed>(state);
}

bool is_legal_transition(const LoopState& from, const LoopState& to) {
    // Rows: from-state index; bits: allowed to-state indexes.
    static constexpr unsigned allowed[8] = {
        0b00000010, // material_selected -> acquiring
        0b10000110, // acquiring -> acquiring | predicting | failed
        0b00001010, // predicting -> acquiring | dispatching
        0b10010000, // dispatching -> field_active | failed
        0b00100010, // field_active -> verifying | acquiring
        0b11100010, // verifying -> verifying | trapped | acquiring | failed
        0b00000000, // trapped
        0b00000000, // failed
    };
    return (allowed[from.index()] >> to.index()) & 1u;
}

TrapReport run_trap_loop(const SimScenario& scenario, const SimWorld& world) {
    validate(scenario.timing);
    if (!(scenario.pixel_noise_sigma >= 0.0) || !(scenario.image_noise_sigma >= 0.0)) {
        throw ConfigError("noise sigmas must be >= 0");
    }
    if (!(scenario.dropout_probability >= 0.0 && scenario.dropout_probability <= 1.0)) {
        throw ConfigError("dropout probability must be in [0, 1]");
    }
    if (!world.workspace.contains(scenario.particle.position)) {
        throw GeometryError("scenario particle starts outside the workspace: " + to_string(scenario.particle.position));
    }

    const ControlParams& ctl = world.control;
    const double lambda = wavelength(world.medium, world.array);
    const double tol = ctl.containment_tol > 0.0 ? ctl.containment_tol : lambda / 2.0;
    const double dt = scenario.timing.frame_interval();
    const double horizon = scenario.timing.horizon();
    const double trap_diameter = scenario.trap_diameter.value_or(ctl.trap_diameter);

    CameraModel cam_h = world.camera_h;
    CameraModel cam_v = world.camera_v;
    cam_h.noise_sigma = scenario.image_noise_sigma;
    cam_v.noise_sigma = scenario.image_noise_sigma;
    const double dia_h = expected_diameter_px(cam_h, scenario.particle.diameter_um);
    const double dia_v = expected_diameter_px(cam_v, scenario.particle.diameter_um);
    const Localizer localizer(world.jacobian, world.references);

    std::mt19937_64 rng(scenario.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> pixel_noise(0.0, 1.0);

    TrapReport report;
    report.trap_kind = std::string(kind_of(scenario.particle.contrast));
    report.contrast = scenario.particle.contrast;
    report.diameter_um = scenario.particle.diameter_um;
    report.seed = scenario.seed;

    LoopState state = MaterialSelected{};
    auto go = [&state](LoopState next) {
        if (!is_legal_transition(state, next)) {
            throw std::logic_error("illegal control transition " + std::string(state_name(state)) + " -> " +
                                   std::string(state_name(next)));
        }
        state = std::move(next);
    };

    ParticleState particle = scenario.particle;
    double t_now = 0.0;
    auto advance = [&](double t) {
        if (t > t_now) particle = step_particle(particle, t - t_now);
        t_now = t;
    };

    std::vector<TrackSample> track;
    TrapSpec pending_trap = FocusTrap{};
    go(Acquiring{0});

    auto fail_reason = [&](FailureReason otherwise) {
        return report.attempts.empty() ? FailureReason::DetectionStarvation : otherwise;
    };

    for (int tick = 0; tick < ctl.frame_budget && !is_terminal(state); ++tick) {
        const double t = tick * dt;

        if (const auto* d = std::get_if<Dispatching>(&state); d && d->ready_at <= t) {
            const double ready_at = d->ready_at;
            advance(ready_at);
            go(FieldActive{pending_trap});
            AttemptLog& attempt = report.attempts.back();
            attempt.activation_t = ready_at;
            attempt.particle_at_activation = particle.position;
            attempt.deviation = distance(attempt.trap_position, particle.position);
            attempt.contained = containment(particle.position, pending_trap, tol);
            if (attempt.contained) {
                particle.velocity = Vec3{};
                go(Verifying{0});
            } else {
                track.clear();
                go(Acquiring{0});
            }
        }
        advance(t);

        FrameLog frame;
        frame.tick = tick;
        frame.t = t;
        frame.truth = particle.position;
        report.ticks = tick + 1;

        if (!world.workspace.contains(particle.position)) {
            go(Failed{fail_reason(FailureReason::LeftFieldOfView)});
            frame.state = std::string(state_name(state));
            report.frames.push_back(std::move(frame));
            break;
        }

        if (auto* v = std::get_if<Verifying>(&state)) {
            if (containment(particle.position, pending_trap, tol)) {
                const int held = v->consecutive + 1;
                if (held >= ctl.hold_ticks) {
                    go(Trapped{});
                    report.confirmed_at = t;
                } else {
                    go(Verifying{held});
                }
            } else {
                track.clear();
                go(Acquiring{0});
            }
        } else if (std::holds_alternative<Acquiring>(state)) {
            frame.acquired = true;
            std::optional<Vec3> observed;
            if (unit(rng) < scenario.dropout_probability) {
                frame.dropout = true;
            } else {
                const std::uint64_t base = splitmix64(scenario.seed ^ (std::uint64_t(tick) << 20));
                const auto img_h = render_frame(cam_h, particle, t, splitmix64(base + 1));
                const auto img_v = render_frame(cam_v, particle, t, splitmix64(base + 2));
                const auto fh = extract_feature(img_h, world.background_h, dia_h, splitmix64(base + 3), world.extraction);
                const auto fv = extract_feature(img_v, world.background_v, dia_v, splitmix64(base + 4), world.extraction);
                if (fh.valid && fv.valid) {
                    Pixel ph = fh.pixel();
                    Pixel pv = fv.pixel();
                    if (scenario.pixel_noise_sigma > 0.0) {
                        ph.u += scenario.pixel_noise_sigma * pixel_noise(rng);
                        ph.v += scenario.pixel_noise_sigma * pixel_noise(rng);
                        pv.u += scenario.pixel_noise_sigma * pixel_noise(rng);
                        pv.v += scenario.pixel_noise_sigma * pixel_noise(rng);
                    }
                    observed = localizer(ph, pv);
                }
            }

            if (!observed) {
                track.clear();
                go(Acquiring{0});
            } else {
                frame.detected = true;
                frame.observed = *observed;
                track.push_back({*observed, t});
                if (track.size() < 3) {
                    go(Acquiring{int(track.size())});
                } else {
                    go(Predicting{});
                    const std::span<const TrackSample, 3> s(track.data(), 3);
                    bool dispatched = false;
                    if (confirm_track(s, ctl.track_tolerance)) {
                        const auto pred = predict_position(s, horizon);
                        const Vec3 target = ctl.target_override.value_or(pred.predicted);
                        if (scenario.particle.contrast == Contrast::Negative) {
                            pending_trap = FocusTrap{target};
                        } else {
                            pending_trap = OctahedralTrap{target, trap_diameter};
                        }
                        try {
                            // Built for fidelity with the real dispatch path; the
                            // phases themselves are not needed downstream.
                            (void)make_trap_hologram(world.array, pending_trap, world.medium);
                            AttemptLog attempt;
                            attempt.third_frame_t = t;
                            attempt.prediction = pred;
                            attempt.trap_position = target;
                            report.attempts.push_back(attempt);
                            go(Dispatching{t + horizon});
                            dispatched = true;
                        } catch (const GeometryError&) {
                            dispatched = false;
                        }
                    }
                    if (!dispatched) {
                        track.erase(track.begin());
                        go(Acquiring{int(track.size())});
                    } else {
                        track.clear();
                    }
                }
            }
        }
        frame.state = std::string(state_name(state));
        report.frames.push_back(std::move(frame));
    }

    if (!is_terminal(state)) {
        if (std::holds_alternative<Dispatching>(state) || std::holds_alternative<Verifying>(state) ||
            std::holds_alternative<Acquiring>(state)) {
            go(Failed{fail_reason(FailureReason::FrameBudgetExhausted)});
        }
    }

    report.trapped = std::holds_alternative<Trapped>(state);
    if (const auto* f = std::get_if<Failed>(&state)) report.failure = f->reason;
    if (!report.attempts.empty()) {
        const AttemptLog& last = report.attempts.back();
        report.time_to_trap = last.activation_t;
        report.trap_position = last.trap_position;
        report.particle_at_activation = last.particle_at_activation;
        report.deviation = last.deviation;
    }
    return report;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::vector<SimScenario> make_batch(const BatchSpec& spec, const WorkspaceConfig& workspace) {
    if (!(spec.diameter_min_um > 0.0) || spec.diameter_max_um < spec.diameter_min_um) {
        throw ConfigError("batch diameter range is invalid");
    }
    std::vector<SimScenario> out;
    out.reserve(spec.count);
    const Vec3 lo = workspace.min_corner();
    const Vec3 hi = workspace.max_corner();
    for (std::size_t i = 0; i < spec.count; ++i) {
        SimScenario s;
        s.seed = splitmix64(spec.seed + 0x1000 * i);
        std::mt19937_64 rng(s.seed);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        const double margin_z = 2.0 + 3.0 * u(rng);
        s.particle.position = {workspace.center.x + (u(rng) - 0.5) * 0.5 * workspace.extent.x,
                               workspace.center.y + (u(rng) - 0.5) * 0.5 * workspace.extent.y,
                               std::max(hi.z - margin_z, lo.z + 1.0)};
        s.particle.velocity = {(2.0 * u(rng) - 1.0) * spec.lateral_speed, (2.0 * u(rng) - 1.0) * spec.lateral_speed,
                               -spec.fall_speed};
        s.particle.diameter_um = spec.diameter_min_um + u(rng) * (spec.diameter_max_um - spec.diameter_min_um);
        s.particle.contrast = spec.contrast;
        s.pixel_noise_sigma = spec.pixel_noise_sigma;
        s.image_noise_sigma = spec.image_noise_sigma;
        s.dropout_probability = spec.dropout_probability;
        s.timing = spec.timing;
        out.push_back(s);
    }
    return out;
}

std::vector<TrapReport> run_batch(std::span<const SimScenario> scenarios, const SimWorld& world, unsigned threads) {
    std::vector<TrapReport> reports(scenarios.size());
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, unsigned(std::max<std::size_t>(scenarios.size(), 1)));

    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::atomic<bool> failed{false};
    auto worker = [&] {
        for (std::size_t i = next++; i < scenarios.size() && !failed; i = next++) {
            try {
                reports[i] = run_trap_loop(scenarios[i], world);
            } catch (...) {
                if (!failed.exchange(true)) error = std::current_exception();
            }
        }
    };
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned k = 0; k < threads; ++k) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (error) std::rethrow_exception(error);
    return reports;
}

BatchSummary summarize(std::span<const TrapReport> reports) {
    BatchSummary s;
    s.runs = reports.size();
    std::vector<double> deviations;
    double time_sum = 0.0;
    for (const auto& r : reports) {
        if (!r.trapped) continue;
        ++s.trapped;
        deviations.push_back(r.deviation);
        time_sum += r.time_to_trap;
    }
    if (s.runs > 0) s.success_rate = double(s.trapped) / double(s.runs);
    if (!deviations.empty()) {
        double sum = 0.0;
        for (double d : deviations) sum += d;
        s.mean_deviation = sum / double(deviations.size());
        s.mean_time_to_trap = time_sum / double(deviations.size());
        std::sort(deviations.begin(), deviations.end());
        const std::size_t n = deviations.size();
        s.median_deviation = n % 2 ? deviations[n / 2] : 0.5 * (deviations[n / 2 - 1] + deviations[n / 2]);
    }
    return s;
}

} // namespace acoustrap
