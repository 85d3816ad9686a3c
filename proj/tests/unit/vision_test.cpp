#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "acoustrap/ellipse.hpp"
#include "acoustrap/fixture.hpp"
#include "acoustrap/vision.hpp"

using namespace acoustrap;

namespace {

std::vector<Pixel> ellipse_points(const Pixel& c, double a, double b, double angle, int n) {
    std::vector<Pixel> pts;
    for (int i = 0; i < n; ++i) {
        const double t = kTwoPi * i / n;
        const double x = a * std::cos(t);
        const double y = b * std::sin(t);
        pts.push_back({c.u + x * std::cos(angle) - y * std::sin(angle), c.v + x * std::sin(angle) + y * std::cos(angle)});
    }
    return pts;
}

TEST(Ellipse, DirectFitRecoversParameters) {
    const auto pts = ellipse_points({40.0, 22.0}, 9.0, 5.0, 0.4, 40);
    const auto conic = fit_ellipse_direct(pts);
    ASSERT_TRUE(conic.has_value());
    const auto e = to_ellipse(*conic);
    ASSERT_TRUE(e.has_value());
    EXPECT_NEAR(e->center.u, 40.0, 1e-8);
    EXPECT_NEAR(e->center.v, 22.0, 1e-8);
    EXPECT_NEAR(e->semi_major, 9.0, 1e-8);
    EXPECT_NEAR(e->semi_minor, 5.0, 1e-8);
}

TEST(Ellipse, TooFewPoints) {
    const auto pts = ellipse_points({0, 0}, 3, 2, 0, 4);
    EXPECT_FALSE(fit_ellipse_direct(pts).has_value());
}

TEST(Ellipse, RansacRejectsOutliers) {
    auto pts = ellipse_points({30.0, 30.0}, 6.0, 6.0, 0.0, 60);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(10.0, 50.0);
    for (int i = 0; i < 15; ++i) pts.push_back({u(rng), u(rng)});
    const auto r = ransac_ellipse(pts, RansacParams{}, 9);
    ASSERT_TRUE(r.has_value());
    EXPECT_NEAR(r->ellipse.center.u, 30.0, 1e-6);
    EXPECT_NEAR(r->ellipse.center.v, 30.0, 1e-6);
    EXPECT_GE(r->inliers, 60u);
}

TEST(Ellipse, SampsonDistanceOfCircle) {
    // x^2 + y^2 - 1 = 0; at (2, 0): |F| / |grad F| = 3 / 4.
    const Conic c{1, 0, 1, 0, 0, -1};
    EXPECT_NEAR(sampson_distance(c, {2.0, 0.0}), 0.75, 1e-15);
}

TEST(Camera, FullScaleProjectsFixtureReference) {
    const auto h = make_camera_h(1.0);
    const auto v = make_camera_v(1.0);
    EXPECT_EQ(h.width, 2448);
    EXPECT_EQ(h.height, 2050);
    const Pixel ph = project(h, fixture::kReferenceWorld);
    EXPECT_NEAR(ph.u, 1328.1, 1e-12);
    EXPECT_NEAR(ph.v, 716.4, 1e-12);
    // 1 mm along +y moves the side camera by -63.1 px in u.
    const Pixel ph2 = project(h, fixture::kReferenceWorld + Vec3{0.0, 1.0, 0.0});
    EXPECT_NEAR(ph2.u - ph.u, -63.1, 1e-9);
    const Pixel pv = project(v, fixture::kReferenceWorld + Vec3{1.0, 0.0, 0.0});
    EXPECT_NEAR(pv.u, 854.2 - 62.3, 1e-9);
}

TEST(Camera, QuarterScale) {
    const auto h = make_camera_h();
    EXPECT_EQ(h.width, 612);
    EXPECT_EQ(h.height, 512);
    EXPECT_NEAR(expected_diameter_px(h, 400.0) * 4.0, expected_diameter_px(make_camera_h(1.0), 400.0), 1e-9);
}

TEST(Camera, ParticleImageSizeNearQuoted) {
    // 400 um spheres appear about 25 px across, 700 um about 45 px.
    const auto h = make_camera_h(1.0);
    EXPECT_NEAR(expected_diameter_px(h, 400.0), 25.0, 0.5);
    EXPECT_NEAR(expected_diameter_px(h, 700.0), 45.0, 1.5);
}

TEST(Vision, RenderDeterministic) {
    auto cam = make_camera_h();
    cam.noise_sigma = 3.0;
    ParticleState p;
    p.position = {25.0, 25.0, 40.0};
    const auto a = render_frame(cam, p, 0.0, 42);
    const auto b = render_frame(cam, p, 0.0, 42);
    const auto c = render_frame(cam, p, 0.0, 43);
    EXPECT_EQ(a.pixels, b.pixels);
    EXPECT_NE(a.pixels, c.pixels);
}

TEST(Vision, EmptyFrameIsInvalid) {
    const auto cam = make_camera_h();
    const auto bg = render_background(cam);
    const auto obs = extract_feature(bg, bg, expected_diameter_px(cam, 400.0), 1);
    EXPECT_FALSE(obs.valid);
    EXPECT_FALSE(obs.reason.empty());
}

TEST(Vision, NoiselessCentroidWithinHalfPixel) {
    const auto cam = make_camera_v();
    const auto bg = render_background(cam);
    for (double d : {400.0, 550.0, 700.0}) {
        ParticleState p;
        p.position = {21.3, 27.9, 38.2};
        p.diameter_um = d;
        const Pixel truth = project(cam, p.position);
        const auto obs = extract_feature(render_frame(cam, p, 0.0, 1), bg, expected_diameter_px(cam, d), 1);
        ASSERT_TRUE(obs.valid) << obs.reason;
        EXPECT_LT(std::hypot(obs.u - truth.u, obs.v - truth.v), 0.5) << d;
    }
}

TEST(Vision, ParticleOutsideFrameIsInvalid) {
    const auto cam = make_camera_h();
    const auto bg = render_background(cam);
    ParticleState p;
    p.position = {25.0, 25.0, 200.0};
    EXPECT_FALSE(in_image(cam, project(cam, p.position)));
    EXPECT_FALSE(extract_feature(render_frame(cam, p, 0.0, 1), bg, expected_diameter_px(cam, 400.0), 1).valid);
}

TEST(Pipeline, BestWindowFindsBlock) {
    pipeline::Binary b{40, 30, std::vector<std::uint8_t>(1200, 0)};
    for (int v = 10; v < 15; ++v)
        for (int u = 20; u < 25; ++u) b.on[std::size_t(v) * 40 + u] = 1;
    const auto w = pipeline::best_window(b, 8, 2);
    EXPECT_EQ(w.count, 25u);
    EXPECT_LE(w.u0, 20);
    EXPECT_GE(w.u0 + w.size, 25);
}

TEST(Pipeline, BorderOfSquare) {
    pipeline::Binary b{10, 10, std::vector<std::uint8_t>(100, 0)};
    for (int v = 2; v < 6; ++v)
        for (int u = 3; u < 7; ++u) b.on[std::size_t(v) * 10 + u] = 1;
    const auto border = pipeline::largest_blob_border(b);
    EXPECT_EQ(border.size(), 12u); // perimeter pixels of a 4x4 square
}

TEST(Pipeline, ClosingFillsPinhole) {
    pipeline::Binary b{9, 9, std::vector<std::uint8_t>(81, 0)};
    for (int v = 2; v < 7; ++v)
        for (int u = 2; u < 7; ++u) b.on[std::size_t(v) * 9 + u] = 1;
    b.on[4 * 9 + 4] = 0;
    const auto c = pipeline::close3x3(b, 0, 0, 9, 9);
    EXPECT_TRUE(c.at(4, 4));
    EXPECT_FALSE(c.at(0, 0));
}

} // namespace
