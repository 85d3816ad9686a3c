#pragma once

// Closed-loop trapping as a discrete-event simulation.
//
// Camera ticks arrive every 1/fps seconds. While acquiring, both views of the
// ground-truth particle are rendered, the features extracted and localized.
// Three successive valid detections form a track; a confirmed track is
// extrapolated over t_dip + t_trans and a trap is dispatched there. The field
// switches on exactly t_dip + t_trans after the third frame. If the particle
// is then within the trapping zone it is pinned (velocity zero) and must stay
// contained for a number of further ticks; otherwise acquisition restarts.

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "acoustrap/calibration.hpp"
#include "acoustrap/core.hpp"
#include "acoustrap/hologram.hpp"
#include "acoustrap/prediction.hpp"
#include "acoustrap/vision.hpp"

namespace acoustrap {

struct ControlParams {
    int frame_budget = 150;                  // camera ticks before giving up
    int hold_ticks = 3;                      // consecutive contained ticks to declare success
    double containment_tol = 0.0;            // mm; <= 0 means lambda / 2
    double track_tolerance = kDefaultTrackTolerance;
    double trap_diameter = 2.4;              // octahedron, mm
    std::optional<Vec3> target_override;     // trap here instead of at the prediction
};

struct SimScenario {
    ParticleState particle{};
    double pixel_noise_sigma = 0.0;    // px, added to each extracted feature coordinate
    double image_noise_sigma = 0.0;    // gray levels
    double dropout_probability = 0.0;  // per tick, both views lost
    std::uint64_t seed = 0;
    TimingConfig timing{};
    std::optional<double> trap_diameter;
};

/// Everything the loop needs besides the scenario.
struct SimWorld {
    TransducerArray array{};
    MediumConfig medium{};
    WorkspaceConfig workspace{};
    TankConfig tank{};
    CameraModel camera_h;
    CameraModel camera_v;
    ImageFrame background_h;
    ImageFrame background_v;
    JacobianMatrix jacobian;
    ReferenceSet references;
    ExtractionParams extraction{};
    ControlParams control{};
};

/// Default world: fixture cameras at `camera_scale`, their stacked Jacobian,
/// and a 24-point reference lattice around the fixture centroid.
SimWorld make_sim_world(const TransducerArray& array, const MediumConfig& medium, const WorkspaceConfig& workspace,
                        const TankConfig& tank, double camera_scale = 0.25, const ExtractionParams& extraction = {},
                        const ControlParams& control = {});

/// Throws ConfigError when the Jacobian does not describe the cameras (more
/// than 5% relative Frobenius mismatch) or the pieces are otherwise
/// inconsistent.
void validate(const SimWorld& world);

ParticleState step_particle(const ParticleState& state, double dt);

bool containment(const Vec3& particle, const TrapSpec& trap, double tol);

struct MaterialSelected {};
struct Acquiring {
    int samples = 0;
};
struct Predicting {};
struct Dispatching {
    double ready_at = 0.0;
};
struct FieldActive {
    TrapSpec trap;
};
struct Verifying {
    int consecutive = 0;
};
struct Trapped {};

enum class FailureReason { LeftFieldOfView, DetectionStarvation, FrameBudgetExhausted };
std::string_view to_string(FailureReason reason);

struct Failed {
    FailureReason reason = FailureReason::DetectionStarvation;
};

using LoopState =
    std::variant<MaterialSelected, Acquiring, Predicting, Dispatching, FieldActive, Verifying, Trapped, Failed>;

std::string_view state_name(const LoopState& state);
bool is_terminal(const LoopState& state);
/// Transition table of the control diagram.
bool is_legal_transition(const LoopState& from, const LoopState& to);

struct FrameLog {
    int tick = 0;
    double t = 0.0;
    std::string state;          // state after processing the tick
    Vec3 truth{};
    bool acquired = false;      // an image pair was processed
    bool detected = false;
    bool dropout = false;
    Vec3 observed{};            // localized position when detected
};

struct AttemptLog {
    double third_frame_t = 0.0;
    double activation_t = 0.0;
    PredictionResult prediction{};
    Vec3 trap_position{};
    Vec3 particle_at_activation{};
    double deviation = 0.0;
    bool contained = false;
};

struct TrapReport {
    bool trapped = false;
    std::optional<FailureReason> failure;
    std::string trap_kind;        // "focus" or "octahedral"
    Contrast contrast = Contrast::Positive;
    double diameter_um = 0.0;
    std::uint64_t seed = 0;
    double time_to_trap = 0.0;    // activation time of the successful attempt
    double confirmed_at = 0.0;    // tick at which the hold was confirmed
    Vec3 trap_position{};
    Vec3 particle_at_activation{};
    double deviation = 0.0;       // |trap_position - particle_at_activation|
    int ticks = 0;
    std::vector<AttemptLog> attempts;
    std::vector<FrameLog> frames;
};

TrapReport run_trap_loop(const SimScenario& scenario, const SimWorld& world);

/// Knobs for generated batches: particles enter near the top of the
/// workspace and fall with a small lateral drift.
struct BatchSpec {
    std::size_t count = 100;
    std::uint64_t seed = 1;
    Contrast contrast = Contrast::Positive;
    double pixel_noise_sigma = 1.0;
    double image_noise_sigma = 0.0;
    double dropout_probability = 0.05;
    double fall_speed = 10.0;     // mm/s
    double lateral_speed = 0.5;   // mm/s, max per axis
    double diameter_min_um = 400.0;
    double diameter_max_um = 700.0;
    TimingConfig timing{};
};

std::uint64_t splitmix64(std::uint64_t x);

std::vector<SimScenario> make_batch(const BatchSpec& spec, const WorkspaceConfig& workspace);

/// Runs scenarios on `threads` workers (0 = hardware concurrency); results are
/// in scenario order and independent of the thread count.
std::vector<TrapReport> run_batch(std::span<const SimScenario> scenarios, const SimWorld& world,
                                  unsigned threads = 0);

struct BatchSummary {
    std::size_t runs = 0;
    std::size_t trapped = 0;
    double success_rate = 0.0;
    double mean_deviation = 0.0;   // over trapped runs
    double median_deviation = 0.0; // over trapped runs
    double mean_time_to_trap = 0.0;
};

BatchSummary summarize(std::span<const TrapReport> reports);

} // namespace acoustrap
