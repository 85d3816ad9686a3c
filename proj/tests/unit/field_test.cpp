#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <random>

#include "acoustrap/field.hpp"
#include "acoustrap/hologram.hpp"
#include "acoustrap/kernels.hpp"

using namespace acoustrap;

namespace {

const Vec3 kFocus{25.0, 25.0, 40.0};

TEST(Field, FocusMagnitudeIsSumOfInverseDistances) {
    const TransducerArray a;
    const auto h = make_focus_hologram(a, kFocus, MediumConfig{});
    EXPECT_NEAR(std::abs(pressure_at(a, h, kFocus, MediumConfig{})), 56.021158697876906, 1e-9);
}

TEST(Field, OffFocusFrozenValue) {
    const TransducerArray a;
    const auto h = make_focus_hologram(a, kFocus, MediumConfig{});
    const auto p = pressure_at(a, h, {26.0, 24.5, 41.0}, MediumConfig{});
    EXPECT_NEAR(p.real(), 4.69383353419101, 1e-9);
    EXPECT_NEAR(p.imag(), 1.8345284004062008, 1e-9);
}

TEST(Field, SingularityNearElement) {
    const TransducerArray a;
    const PhaseHologram h(50, 50);
    EXPECT_THROW(pressure_at(a, h, {0.5, 0.5, 0.0}, MediumConfig{}), SingularityError);
}

TEST(Field, PistonDirectivityReducesOffAxis) {
    const TransducerArray a;
    const auto h = make_focus_hologram(a, kFocus, MediumConfig{});
    const double mono = std::abs(pressure_at(a, h, kFocus, MediumConfig{}));
    const double piston = std::abs(pressure_at(a, h, kFocus, MediumConfig{}, PropagationModel::Piston));
    EXPECT_LT(piston, mono);
    EXPECT_GT(piston, 0.0);
}

TEST(Field, SliceGridAndPeak) {
    const TransducerArray a;
    const auto h = make_focus_hologram(a, kFocus, MediumConfig{});
    const auto s = field_slice(a, h, SlicePlane::XOY, 40.0, {24.0, 26.0, 24.0, 26.0}, 0.1, MediumConfig{});
    EXPECT_EQ(s.na, 21);
    EXPECT_EQ(s.nb, 21);
    EXPECT_EQ(s.values.size(), 441u);
    const Vec3 mid = s.point(10, 10);
    EXPECT_NEAR(distance(mid, kFocus), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(s.at(10, 10)), 56.021158697876906, 1e-9);
}

TEST(Field, SliceRejectsDegenerateBounds) {
    const TransducerArray a;
    const PhaseHologram h(50, 50);
    EXPECT_THROW(field_slice(a, h, SlicePlane::XOZ, 25.0, {26.0, 24.0, 30.0, 40.0}, 0.1, MediumConfig{}),
                 GeometryError);
}

TEST(Field, PlaneNames) {
    EXPECT_EQ(parse_plane("xoz"), SlicePlane::XOZ);
    EXPECT_EQ(to_string(SlicePlane::YOZ), "yoz");
    EXPECT_THROW(parse_plane("abc"), ConfigError);
}

TEST(Field, FocusFwhmAxialLongerThanLateral) {
    const TransducerArray a;
    const auto h = make_focus_hologram(a, kFocus, MediumConfig{});
    const auto q = trap_quality(a, h, FocusTrap{kFocus}, MediumConfig{});
    EXPECT_GT(q.axial_fwhm, 2.0 * q.lateral_fwhm);
    EXPECT_GT(q.lateral_fwhm, 0.3);
    EXPECT_LT(q.lateral_fwhm, 1.5);
}

TEST(Field, OctahedralQualityShape) {
    const TransducerArray a;
    const auto h = make_octahedral_hologram(a, kFocus, 2.4, MediumConfig{});
    const auto q = trap_quality(a, h, OctahedralTrap{kFocus, 2.4}, MediumConfig{});
    ASSERT_TRUE(q.vertex_magnitudes.has_value());
    double mean = 0.0;
    for (double m : *q.vertex_magnitudes) mean += m / 6.0;
    EXPECT_NEAR(q.contrast_ratio, q.center_magnitude / mean, 1e-12);
}

TEST(Field, MaterialsContrastSigns) {
    const MediumConfig water;
    const auto ps = material_for(Contrast::Positive);
    const auto pdms = material_for(Contrast::Negative);
    const double f1_ps = 1.0 - water.density * water.sound_speed * water.sound_speed / (ps.density * ps.sound_speed * ps.sound_speed);
    const double f1_pdms =
        1.0 - water.density * water.sound_speed * water.sound_speed / (pdms.density * pdms.sound_speed * pdms.sound_speed);
    EXPECT_GT(f1_ps, 0.0);
    EXPECT_LT(f1_pdms, 0.0);
}

TEST(Field, GorkovNegativeContrastFavorsPressureMaximum) {
    const TransducerArray a;
    const auto h = make_focus_hologram(a, kFocus, MediumConfig{});
    const FieldEvaluator f(a, h, MediumConfig{});
    ParticleState p{kFocus, {}, 300.0, Contrast::Negative};
    const double at_focus = gorkov_potential(f, kFocus, MediumConfig{}, p);
    const double aside = gorkov_potential(f, kFocus + Vec3{0.5, 0.0, 0.0}, MediumConfig{}, p);
    EXPECT_LT(at_focus, aside);
}

// --- kernels -----------------------------------------------------------------

class KernelEquivalence : public ::testing::Test {
protected:
    void SetUp() override {
        if (!kernels::avx2::available()) GTEST_SKIP() << "no AVX2 on this host";
    }
};

TEST_F(KernelEquivalence, FocusPhases) {
    const auto g = kernels::ElementGrid::from_array(TransducerArray{});
    kernels::TargetPoints t;
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 50.0);
    for (std::size_t i = 0; i < g.size(); ++i) {
        t.x.push_back(u(rng));
        t.y.push_back(u(rng));
        t.z.push_back(1.0 + u(rng));
    }
    const double k = kTwoPi / 0.6521739130434783;
    std::vector<double> s(g.size()), v(g.size());
    kernels::scalar::focus_phases(g, t, k, s);
    kernels::avx2::focus_phases(g, t, k, v);
    for (std::size_t i = 0; i < g.size(); ++i) {
        // Wrap-aware: values near 0 and 2 pi are the same phase.
        EXPECT_NEAR(std::remainder(s[i] - v[i], kTwoPi), 0.0, 1e-12 * kTwoPi) << i;
    }
}

TEST_F(KernelEquivalence, PressureSum) {
    const auto g = kernels::ElementGrid::from_array(TransducerArray{});
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(0.0, kTwoPi);
    std::vector<double> phases(g.size());
    for (auto& p : phases) p = u(rng);
    const double k = kTwoPi / 0.6521739130434783;
    for (const Vec3 q : {Vec3{25, 25, 40}, Vec3{3, 47, 5}, Vec3{-10, 60, 55}}) {
        for (double hw : {0.0, 2.4}) {
            const auto a = kernels::scalar::pressure_sum(g, phases, q, k, 1.0, {hw});
            const auto b = kernels::avx2::pressure_sum(g, phases, q, k, 1.0, {hw});
            EXPECT_LE(std::abs(a - b), 1e-12 * std::max(1.0, std::abs(a)));
        }
    }
}

TEST_F(KernelEquivalence, Sincos) {
    std::vector<double> x;
    for (int i = -2000; i <= 2000; ++i) x.push_back(i * 0.0371);
    std::vector<double> s1(x.size()), c1(x.size()), s2(x.size()), c2(x.size());
    kernels::scalar::sincos(x, s1, c1);
    kernels::avx2::sincos(x, s2, c2);
    for (std::size_t i = 0; i < x.size(); ++i) {
        EXPECT_NEAR(s1[i], std::sin(x[i]), 1e-14);
        EXPECT_NEAR(s2[i], std::sin(x[i]), 1e-14);
        EXPECT_NEAR(c2[i], std::cos(x[i]), 1e-14);
    }
}

TEST(Kernels, IsaNames) {
    EXPECT_EQ(kernels::parse_isa("scalar"), kernels::Isa::Scalar);
    EXPECT_EQ(kernels::parse_isa("avx2"), kernels::Isa::Avx2);
    EXPECT_THROW(kernels::parse_isa("sse9"), ConfigError);
}

} // namespace
