#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "acoustrap/calibration.hpp"
#include "acoustrap/fixture.hpp"
#include "acoustrap/prediction.hpp"

using namespace acoustrap;

namespace {

std::vector<MotionPair> motions(const JacobianMatrix& j, int n, double noise, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dir(-1.0, 1.0);
    std::uniform_real_distribution<double> px(-noise, noise);
    std::vector<MotionPair> out;
    for (int i = 0; i < n; ++i) {
        Eigen::Vector3d m(dir(rng), dir(rng), dir(rng));
        m *= 1000.0 / m.norm();
        const Eigen::Vector4d f = j.matrix() * m;
        MotionPair p{{m.x(), m.y(), m.z()}, {}};
        for (int r = 0; r < 4; ++r) p.pixels[r] = f[r] + (noise > 0 ? px(rng) : 0.0);
        out.push_back(p);
    }
    return out;
}

TEST(Calibration, FixtureMatchesConstants) {
    const auto j = JacobianMatrix::fixture();
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 3; ++c) EXPECT_EQ(j(r, c), fixture::kJacobian[r][c]);
    EXPECT_EQ(j.rank(), 3);
    EXPECT_LT(j.condition_number(), 2.0);
}

TEST(Calibration, PseudoInverseIsLeftInverse) {
    const auto j = JacobianMatrix::fixture();
    const Eigen::Matrix3d i = j.pseudo_inverse() * j.matrix();
    EXPECT_LT((i - Eigen::Matrix3d::Identity()).norm(), 1e-12);
}

TEST(Calibration, RankDeficientPseudoInverseThrows) {
    JacobianMatrix::Matrix m = JacobianMatrix::Matrix::Zero();
    m(0, 0) = 1.0;
    m(1, 1) = 1.0;
    const JacobianMatrix j(m);
    EXPECT_EQ(j.rank(), 2);
    EXPECT_TRUE(std::isinf(j.condition_number()));
    EXPECT_THROW(j.pseudo_inverse(), CalibrationError);
}

TEST(Calibration, ExactRecovery) {
    const auto j = JacobianMatrix::fixture();
    const auto est = calibrate_jacobian(motions(j, 24, 0.0, 1));
    EXPECT_LT((est.jacobian.matrix() - j.matrix()).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT(est.residual_rms, 1e-9);
}

TEST(Calibration, NoisyRecoveryWithinTwoPercent) {
    // +/-0.5 px uniform, 24 moves of 1 mm, full resolution.
    const auto j = JacobianMatrix::fixture();
    double dominant = 0.0;
    for (const auto& row : fixture::kJacobian)
        for (double v : row) dominant = std::max(dominant, std::abs(v));
    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto est = calibrate_jacobian(motions(j, 24, 0.5, seed));
        worst = std::max(worst, (est.jacobian.matrix() - j.matrix()).cwiseAbs().maxCoeff() / dominant);
    }
    EXPECT_LT(worst, 0.02);
}

TEST(Calibration, ErrorScalesWithNoise) {
    const auto j = JacobianMatrix::fixture();
    auto err = [&](double noise) {
        double s = 0.0;
        for (std::uint64_t seed = 1; seed <= 30; ++seed)
            s += (calibrate_jacobian(motions(j, 24, noise, seed)).jacobian.matrix() - j.matrix()).norm();
        return s;
    };
    EXPECT_NEAR(err(1.0) / err(0.25), 4.0, 0.4);
}

TEST(Calibration, TooFewPairsThrow) {
    const auto j = JacobianMatrix::fixture();
    const auto two = motions(j, 2, 0.0, 3);
    EXPECT_THROW(calibrate_jacobian(two), CalibrationError);
}

TEST(Calibration, PlanarMotionsNameMissingDirection) {
    std::vector<MotionPair> pairs;
    const auto j = JacobianMatrix::fixture();
    for (const Vec3 m : {Vec3{1000, 0, 0}, Vec3{0, 1000, 0}, Vec3{700, 700, 0}, Vec3{-500, 300, 0}}) {
        const Eigen::Vector4d f = j.matrix() * Eigen::Vector3d(m.x, m.y, m.z);
        pairs.push_back({m, {f[0], f[1], f[2], f[3]}});
    }
    try {
        calibrate_jacobian(pairs);
        FAIL() << "expected CalibrationError";
    } catch (const CalibrationError& e) {
        EXPECT_NE(std::string(e.what()).find("(0, 0, 1)"), std::string::npos) << e.what();
    }
}

TEST(Calibration, ReferenceLatticeLayout) {
    const auto pts = reference_lattice({25.0, 25.0, 40.0}, 3.0);
    ASSERT_EQ(pts.size(), 24u);
    EXPECT_EQ(pts[0], (Vec3{23.5, 22.0, 35.5}));
    EXPECT_EQ(pts[1], (Vec3{26.5, 22.0, 35.5})); // x fastest
    EXPECT_EQ(pts[2], (Vec3{23.5, 25.0, 35.5}));
    Vec3 c{};
    for (const auto& p : pts) c += p / 24.0;
    EXPECT_NEAR(distance(c, {25.0, 25.0, 40.0}), 0.0, 1e-12);
}

TEST(Calibration, LocalizationUsesOnlyCentroids) {
    const auto h = make_camera_h(1.0);
    const auto v = make_camera_v(1.0);
    const auto j = JacobianMatrix::from_cameras(h, v);
    const auto lattice = reference_lattice({25.0, 25.0, 40.0});
    const auto full = project_references(lattice, h, v);
    const ReferenceSet single({{fixture::kReferenceWorld, fixture::kReferencePixelH, fixture::kReferencePixelV}});
    const Vec3 x{18.0, 31.0, 44.0};
    const Vec3 a = localize(j, full, project(h, x), project(v, x));
    const Vec3 b = localize(j, single, project(h, x), project(v, x));
    EXPECT_LT(distance(a, x), 1e-9);
    EXPECT_LT(distance(a, b), 1e-9);
}

TEST(Calibration, EmptyReferenceSetThrows) {
    EXPECT_THROW(ReferenceSet(std::vector<ReferenceEntry>{}), ConfigError);
}

TEST(Calibration, AcquiredReferenceNearCommanded) {
    const auto h = make_camera_h();
    const auto v = make_camera_v();
    const auto r = acquire_reference(TransducerArray{}, MediumConfig{}, {24.0, 26.0, 38.0}, ReferenceScan{}, h, v);
    EXPECT_LE(distance(r.entry.world, {24.0, 26.0, 38.0}), 0.2 + 1e-9);
    EXPECT_FALSE(r.on_boundary);
    EXPECT_GT(r.peak_magnitude, 0.0);
}

// --- prediction ---------------------------------------------------------------

TEST(Prediction, FixtureTrack) {
    const std::array<TrackSample, 3> s{{{{0, 0, 0}, 0.0}, {{1, 0, 0}, 0.1}, {{2, 0, 0}, 0.2}}};
    const auto r = predict_position(s, 0.15);
    EXPECT_NEAR(r.predicted.x, 3.5, 1e-12);
    EXPECT_NEAR(r.velocity.x, 10.0, 1e-12);
    EXPECT_TRUE(confirm_track(s));
}

TEST(Prediction, DefaultTimingHorizon) {
    const std::array<TrackSample, 3> s{{{{0, 0, 50}, 0.0}, {{0, 0, 49}, 0.1}, {{0, 0, 48}, 0.2}}};
    const auto r = predict_position(s, TimingConfig{});
    EXPECT_NEAR(r.horizon, 0.15, 1e-15);
    EXPECT_NEAR(r.predicted.z, 46.5, 1e-12);
}

TEST(Prediction, MiddleSampleIgnoredByPrediction) {
    std::array<TrackSample, 3> s{{{{1, 2, 3}, 0.0}, {{9, 9, 9}, 0.05}, {{2, 3, 4}, 0.2}}};
    const auto a = predict_position(s, 0.1);
    s[1].world = {1.5, 2.5, 3.5};
    const auto b = predict_position(s, 0.1);
    EXPECT_EQ(a.predicted, b.predicted);
}

TEST(Prediction, ConfirmRejectsKink) {
    const std::array<TrackSample, 3> s{{{{0, 0, 0}, 0.0}, {{1, 1, 0}, 0.1}, {{2, 0, 0}, 0.2}}};
    EXPECT_FALSE(confirm_track(s, 0.3));
    EXPECT_TRUE(confirm_track(s, 1.01));
}

TEST(Prediction, UnorderedTimestampsThrow) {
    const std::array<TrackSample, 3> s{{{{0, 0, 0}, 0.2}, {{1, 0, 0}, 0.1}, {{2, 0, 0}, 0.3}}};
    EXPECT_THROW(confirm_track(s), ConfigError);
    const std::array<TrackSample, 3> d{{{{0, 0, 0}, 0.1}, {{1, 0, 0}, 0.2}, {{2, 0, 0}, 0.1}}};
    EXPECT_THROW(predict_position(d, 0.1), ConfigError);
}

TEST(Prediction, StationaryParticle) {
    const std::array<TrackSample, 3> s{{{{5, 5, 5}, 0.0}, {{5, 5, 5}, 0.07}, {{5, 5, 5}, 0.13}}};
    EXPECT_EQ(predict_position(s, 1.0).predicted, (Vec3{5, 5, 5}));
}

} // namespace
