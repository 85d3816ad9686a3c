#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <random>

#include "acoustrap/core.hpp"
#include "acoustrap/hologram.hpp"

using namespace acoustrap;

namespace {

// Frozen values: 1500 m/s, 2.3 MHz, elements at ((i + 0.5), (j + 0.5), 0) mm.
constexpr double kLambda = 0.6521739130434783;

TEST(Core, WavelengthFromDefaults) {
    EXPECT_NEAR(wavelength(MediumConfig{}, TransducerArray{}), kLambda, 1e-15);
}

TEST(Core, WavelengthRejectsNonPositiveInputs) {
    TransducerArray a;
    a.frequency = 0.0;
    EXPECT_THROW(wavelength(MediumConfig{}, a), ConfigError);
    MediumConfig m;
    m.sound_speed = -1.0;
    EXPECT_THROW(wavelength(m, TransducerArray{}), ConfigError);
}

TEST(Core, ElementCenterGeometry) {
    const TransducerArray a;
    EXPECT_EQ(element_center(a, 0, 0), (Vec3{0.5, 0.5, 0.0}));
    EXPECT_EQ(element_center(a, 49, 10), (Vec3{49.5, 10.5, 0.0}));
    EXPECT_THROW(element_center(a, 50, 0), IndexError);
    EXPECT_THROW(element_center(a, 0, -1), IndexError);
}

TEST(Hologram, FocusPhaseFrozenValues) {
    EXPECT_NEAR(focus_phase({0.5, 0.5, 0.0}, {25.0, 25.0, 40.0}, kLambda), 0.9023755857772144, 1e-12);
    EXPECT_NEAR(focus_phase({49.5, 10.5, 0.0}, {3.0, 44.0, 12.5}, kLambda), 5.919535689781618, 1e-12);
}

TEST(Hologram, FocusPhaseRange) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 50.0);
    for (int n = 0; n < 1000; ++n) {
        const double phi = focus_phase({u(rng), u(rng), 0.0}, {u(rng), u(rng), 1.0 + u(rng)}, kLambda);
        EXPECT_GE(phi, 0.0);
        EXPECT_LT(phi, kTwoPi);
    }
}

TEST(Hologram, FocusPhaseCoincidentPointThrows) {
    EXPECT_THROW(focus_phase({1.0, 2.0, 0.0}, {1.0, 2.0, 0.0}, kLambda), GeometryError);
}

TEST(Hologram, FocusHologramMatchesPerElementPhase) {
    const TransducerArray a;
    const Vec3 f{12.0, 31.0, 22.0};
    const auto h = make_focus_hologram(a, f, MediumConfig{});
    ASSERT_EQ(h.rows(), 50);
    ASSERT_EQ(h.cols(), 50);
    for (int i = 0; i < 50; i += 7)
        for (int j = 0; j < 50; j += 5)
            EXPECT_NEAR(h.at(i, j), focus_phase(element_center(a, i, j), f, kLambda), 1e-12);
}

TEST(Hologram, OctahedronVertexOrder) {
    const auto v = octahedron_vertexes({25.0, 25.0, 40.0}, 2.4);
    EXPECT_EQ(v[PlusX], (Vec3{26.2, 25.0, 40.0}));
    EXPECT_EQ(v[MinusX], (Vec3{23.8, 25.0, 40.0}));
    EXPECT_EQ(v[PlusY], (Vec3{25.0, 26.2, 40.0}));
    EXPECT_EQ(v[MinusY], (Vec3{25.0, 23.8, 40.0}));
    EXPECT_EQ(v[PlusZ], (Vec3{25.0, 25.0, 41.2}));
    EXPECT_EQ(v[MinusZ], (Vec3{25.0, 25.0, 38.8}));
}

// Independent tiling: walk 2x3 blocks and number positions row-major.
std::array<int, 6> tile_counts(int rows, int cols) {
    std::array<int, 6> c{};
    for (int bi = 0; bi < rows; bi += 2)
        for (int bj = 0; bj < cols; bj += 3)
            for (int di = 0; di < 2; ++di)
                for (int dj = 0; dj < 3; ++dj)
                    if (bi + di < rows && bj + dj < cols) ++c[di * 3 + dj];
    return c;
}

TEST(Hologram, SmAssignmentCountsMatchTiling) {
    for (auto [r, c] : {std::pair{50, 50}, std::pair{7, 11}, std::pair{2, 3}}) {
        TransducerArray a;
        a.rows = r;
        a.cols = c;
        const auto g = sm_assignment(a);
        std::array<int, 6> counts{};
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < c; ++j) ++counts[g.at(i, j)];
        EXPECT_EQ(counts, tile_counts(r, c)) << r << "x" << c;
    }
}

TEST(Hologram, SmAssignmentNeedsTwoByThree) {
    TransducerArray a;
    a.rows = 1;
    a.cols = 1;
    EXPECT_THROW(sm_assignment(a), Error);
}

TEST(Hologram, SmAssignmentFullArrayCounts) {
    // 25 row pairs x (16 full column triples + 2 leftover columns).
    const auto g = sm_assignment(TransducerArray{});
    std::array<int, 6> counts{};
    for (auto v : g.group) ++counts[v];
    EXPECT_EQ(counts, (std::array<int, 6>{425, 425, 400, 425, 425, 400}));
}

TEST(Hologram, OctahedralElementsFocusOnTheirVertex) {
    const TransducerArray a;
    const Vec3 c{25.0, 25.0, 40.0};
    const auto h = make_octahedral_hologram(a, c, 2.4, MediumConfig{});
    const auto v = octahedron_vertexes(c, 2.4);
    for (int i = 0; i < 50; i += 3)
        for (int j = 0; j < 50; j += 4) {
            const int g = 3 * (i % 2) + (j % 3);
            EXPECT_NEAR(h.at(i, j), focus_phase(element_center(a, i, j), v[g], kLambda), 1e-12);
        }
}

TEST(Hologram, TrapKinds) {
    EXPECT_EQ(trap_kind(TrapSpec{FocusTrap{}}), "focus");
    EXPECT_EQ(trap_kind(TrapSpec{OctahedralTrap{}}), "octahedral");
    EXPECT_EQ(trap_center(TrapSpec{OctahedralTrap{{1, 2, 3}, 2.4}}), (Vec3{1, 2, 3}));
}

TEST(Hologram, IbCostNonIncreasing) {
    const TransducerArray a;
    const auto targets = octahedron_vertexes({25.0, 25.0, 40.0}, 2.4);
    const auto r = ib_baseline_hologram(a, targets, MediumConfig{}, 30);
    ASSERT_EQ(r.cost.size(), 30u);
    for (std::size_t n = 1; n < r.cost.size(); ++n) EXPECT_LE(r.cost[n], r.cost[n - 1] + 1e-9);
}

TEST(Hologram, IbSingleTargetIsFocus) {
    const TransducerArray a;
    const std::array<Vec3, 1> t{Vec3{20.0, 30.0, 35.0}};
    const auto r = ib_baseline_hologram(a, t, MediumConfig{}, 5);
    const auto f = make_focus_hologram(a, t[0], MediumConfig{});
    // Up to a global phase offset.
    const double offset = r.hologram.at(0, 0) - f.at(0, 0);
    for (int i = 0; i < 50; ++i)
        for (int j = 0; j < 50; ++j) {
            const double d = std::remainder(r.hologram.at(i, j) - f.at(i, j) - offset, kTwoPi);
            EXPECT_NEAR(d, 0.0, 1e-6);
        }
}

} // namespace
