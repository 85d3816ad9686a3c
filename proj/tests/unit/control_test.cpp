#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "acoustrap/config.hpp"
#include "acoustrap/control.hpp"

using namespace acoustrap;

namespace {

const SimWorld& world() {
    static const SimWorld w = make_sim_world(parse_config(""));
    return w;
}

SimScenario falling(const Vec3& at, Contrast contrast = Contrast::Positive) {
    SimScenario s;
    s.particle.position = at;
    s.particle.velocity = {0.0, 0.0, -10.0};
    s.particle.contrast = contrast;
    s.seed = 17;
    return s;
}

TEST(Control, StepParticleUniformMotion) {
    ParticleState p;
    p.position = {1.0, 2.0, 3.0};
    p.velocity = {10.0, -5.0, 0.0};
    const auto q = step_particle(p, 0.2);
    EXPECT_NEAR(q.position.x, 3.0, 1e-15);
    EXPECT_NEAR(q.position.y, 1.0, 1e-15);
    EXPECT_EQ(q.velocity, p.velocity);
}

TEST(Control, ContainmentExamples) {
    const TrapSpec focus = FocusTrap{{25.0, 25.0, 40.0}};
    EXPECT_TRUE(containment({25.0, 25.0, 40.2}, focus, 0.326));
    EXPECT_FALSE(containment({25.0, 25.0, 40.4}, focus, 0.326));
    const TrapSpec octa = OctahedralTrap{{25.0, 25.0, 40.0}, 2.4};
    EXPECT_TRUE(containment({25.3, 25.0, 40.0}, octa, 0.326));
    EXPECT_FALSE(containment({26.0, 25.0, 40.0}, octa, 0.326));
}

TEST(Control, NoiselessRunTrapsWithOctahedron) {
    const auto r = run_trap_loop(falling({19.0, 23.5, 46.0}), world());
    ASSERT_TRUE(r.trapped);
    EXPECT_EQ(r.trap_kind, "octahedral");
    EXPECT_LT(r.deviation, 0.05);
    EXPECT_FALSE(r.failure.has_value());
}

TEST(Control, NegativeContrastUsesFocus) {
    const auto r = run_trap_loop(falling({19.0, 23.5, 46.0}, Contrast::Negative), world());
    ASSERT_TRUE(r.trapped);
    EXPECT_EQ(r.trap_kind, "focus");
}

TEST(Control, Deterministic) {
    auto s = falling({15.0, 20.0, 47.0});
    s.pixel_noise_sigma = 1.5;
    s.dropout_probability = 0.1;
    const auto a = run_trap_loop(s, world());
    const auto b = run_trap_loop(s, world());
    EXPECT_EQ(a.trapped, b.trapped);
    EXPECT_EQ(a.ticks, b.ticks);
    EXPECT_EQ(a.deviation, b.deviation);
    EXPECT_EQ(a.attempts.size(), b.attempts.size());
}

TEST(Control, UpwardExitIsStarvation) {
    SimScenario s = falling({19.0, 23.5, 50.5});
    s.particle.velocity = {0.0, 0.0, 20.0};
    const auto r = run_trap_loop(s, world());
    EXPECT_FALSE(r.trapped);
    ASSERT_TRUE(r.failure.has_value());
    EXPECT_EQ(*r.failure, FailureReason::DetectionStarvation);
    EXPECT_TRUE(r.attempts.empty());
}

TEST(Control, TotalDropoutStarves) {
    SimScenario s = falling({19.0, 23.5, 46.0});
    s.particle.velocity = {};
    s.dropout_probability = 1.0;
    const auto r = run_trap_loop(s, world());
    ASSERT_TRUE(r.failure.has_value());
    EXPECT_EQ(*r.failure, FailureReason::DetectionStarvation);
    EXPECT_EQ(r.ticks, world().control.frame_budget);
}

TEST(Control, ActivationIsCausal) {
    const auto r = run_trap_loop(falling({22.0, 21.0, 48.0}), world());
    ASSERT_FALSE(r.attempts.empty());
    const double horizon = TimingConfig{}.horizon();
    for (const auto& a : r.attempts) {
        EXPECT_NEAR(a.activation_t - a.third_frame_t, horizon, 1e-12);
        EXPECT_NEAR(a.deviation, distance(a.trap_position, a.particle_at_activation), 1e-12);
    }
    EXPECT_NEAR(r.time_to_trap, r.attempts.back().activation_t, 0.0);
    EXPECT_GE(r.confirmed_at, r.time_to_trap);
}

TEST(Control, FramesFollowLegalTransitions) {
    const auto r = run_trap_loop(falling({19.0, 23.5, 46.0}), world());
    ASSERT_FALSE(r.frames.empty());
    EXPECT_EQ(r.frames.back().state, "trapped");
    for (std::size_t i = 1; i < r.frames.size(); ++i) EXPECT_NEAR(r.frames[i].t - r.frames[i - 1].t, 1.0 / 15.0, 1e-12);
}

TEST(Control, TransitionTable) {
    EXPECT_TRUE(is_legal_transition(MaterialSelected{}, Acquiring{}));
    EXPECT_TRUE(is_legal_transition(Acquiring{}, Predicting{}));
    EXPECT_TRUE(is_legal_transition(Predicting{}, Dispatching{}));
    EXPECT_TRUE(is_legal_transition(Dispatching{}, FieldActive{FocusTrap{}}));
    EXPECT_TRUE(is_legal_transition(FieldActive{FocusTrap{}}, Verifying{}));
    EXPECT_TRUE(is_legal_transition(Verifying{}, Trapped{}));
    EXPECT_FALSE(is_legal_transition(Acquiring{}, Trapped{}));
    EXPECT_FALSE(is_legal_transition(Trapped{}, Acquiring{}));
    EXPECT_FALSE(is_legal_transition(Failed{}, Acquiring{}));
    EXPECT_TRUE(is_terminal(Trapped{}));
    EXPECT_TRUE(is_terminal(Failed{}));
    EXPECT_FALSE(is_terminal(Verifying{}));
    EXPECT_EQ(state_name(Dispatching{}), "dispatching");
}

TEST(Control, BatchGeneration) {
    BatchSpec spec;
    spec.count = 50;
    const WorkspaceConfig ws;
    const auto a = make_batch(spec, ws);
    const auto b = make_batch(spec, ws);
    ASSERT_EQ(a.size(), 50u);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].particle.position, b[i].particle.position);
        const auto& p = a[i].particle;
        EXPECT_LE(std::abs(p.position.x - ws.center.x), 0.25 * ws.extent.x + 1e-12);
        EXPECT_LE(std::abs(p.position.y - ws.center.y), 0.25 * ws.extent.y + 1e-12);
        const double top = ws.max_corner().z;
        EXPECT_GE(p.position.z, top - 5.0);
        EXPECT_LE(p.position.z, top - 2.0);
        EXPECT_NEAR(p.velocity.z, -10.0, 1e-12);
        EXPECT_GE(p.diameter_um, 400.0);
        EXPECT_LE(p.diameter_um, 700.0);
    }
}

TEST(Control, BatchIndependentOfThreadCount) {
    BatchSpec spec;
    spec.count = 6;
    const auto sc = make_batch(spec, WorkspaceConfig{});
    const auto one = run_batch(sc, world(), 1);
    const auto many = run_batch(sc, world(), 3);
    for (std::size_t i = 0; i < sc.size(); ++i) {
        EXPECT_EQ(one[i].trapped, many[i].trapped);
        EXPECT_EQ(one[i].deviation, many[i].deviation);
    }
}

TEST(Control, SummaryStatistics) {
    std::vector<TrapReport> r(4);
    r[0].trapped = true;
    r[0].deviation = 0.1;
    r[0].time_to_trap = 0.3;
    r[1].trapped = true;
    r[1].deviation = 0.3;
    r[1].time_to_trap = 0.5;
    r[2].trapped = true;
    r[2].deviation = 0.2;
    r[2].time_to_trap = 0.4;
    r[3].failure = FailureReason::LeftFieldOfView;
    const auto s = summarize(r);
    EXPECT_EQ(s.runs, 4u);
    EXPECT_EQ(s.trapped, 3u);
    EXPECT_DOUBLE_EQ(s.success_rate, 0.75);
    EXPECT_NEAR(s.median_deviation, 0.2, 1e-15);
    EXPECT_NEAR(s.mean_deviation, 0.2, 1e-15);
    EXPECT_NEAR(s.mean_time_to_trap, 0.4, 1e-15);
}

TEST(Control, WorldRejectsMismatchedJacobian) {
    SimWorld w = world();
    JacobianMatrix::Matrix m = w.jacobian.matrix();
    m *= 1.2;
    w.jacobian = JacobianMatrix(m);
    EXPECT_THROW(validate(w), ConfigError);
}

TEST(Control, Splitmix64KnownValue) {
    // Reference output of splitmix64 seeded with 0 (first draw).
    EXPECT_EQ(splitmix64(0), 0xE220A8397B1DCDAFull);
}

} // namespace
