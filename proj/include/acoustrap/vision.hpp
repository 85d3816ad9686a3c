#pragma once

// Virtual binocular microscope.
//
// Each camera is an affine (orthographic) model built from its 2x3 block of
// the stereo image Jacobian:
//
//   pixel = J_cam * (world - ref_world)[um] + ref_pixel
//
// Frames are synthetic 8-bit grayscale images of a sphere over a background.
// The feature extractor recovers the sphere's image center:
//   1. absolute-difference background subtraction
//   2. adaptive binarization against the local mean (window 2 D)
//   3. coarse localization: max foreground count over a sliding window
//      (1.5 D, stride D/2)
//   4. 3x3 closing (dilation, then erosion) around the winning window
//   5. outer border of the largest blob (Moore neighbour tracing)
//   6. RANSAC ellipse fit on the border; the ellipse center is the feature
// where D is the expected particle diameter in pixels.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "acoustrap/core.hpp"
#include "acoustrap/ellipse.hpp"

namespace acoustrap {

struct FlatBackground {
    double level = 200.0;
};

/// level + du * (u - width/2) + dv * (v - height/2)
struct GradientBackground {
    double level = 200.0;
    double du = 0.0;
    double dv = 0.0;
};

using BackgroundModel = std::variant<FlatBackground, GradientBackground>;

struct CameraModel {
    std::string name;
    std::array<std::array<double, 3>, 2> jacobian{}; // pixel/um
    Pixel ref_pixel{};
    Vec3 ref_world{};
    int width = 612;
    int height = 512;
    double noise_sigma = 0.0;  // gray levels
    BackgroundModel background = FlatBackground{};
    double particle_level = 60.0; // gray level of the sphere body
};

/// Side camera (rows u_H, v_H of the reference Jacobian), scaled: 1.0 for the
/// full 2448x2050 sensor, 0.25 for the 612x512 desk-scale default.
CameraModel make_camera_h(double scale = 0.25);
/// Top camera (rows u_V, v_V).
CameraModel make_camera_v(double scale = 0.25);

Pixel project(const CameraModel& camera, const Vec3& world);

/// Mean magnitude of the dominant entry of each Jacobian row (pixel/um).
double pixel_scale(const CameraModel& camera);

/// Mean dominant magnitude over all four rows of a stereo Jacobian.
double pixel_scale(const std::array<std::array<double, 3>, 4>& jacobian);

/// Semi-axes (pixels) of the image of a sphere of the given diameter.
std::array<double, 2> sphere_image_axes(const CameraModel& camera, double diameter_um);

/// Mean image diameter of the sphere in pixels.
double expected_diameter_px(const CameraModel& camera, double diameter_um);

bool in_image(const CameraModel& camera, const Pixel& p);

struct ImageFrame {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels; // row-major
    double timestamp = 0.0;
    bool partial_particle = false; // sphere image clipped by the frame border

    std::uint8_t at(int u, int v) const { return pixels[std::size_t(v) * width + u]; }
};

/// Background only, no noise: the reference image for subtraction.
ImageFrame render_background(const CameraModel& camera);

/// Background + anti-aliased sphere image + Gaussian noise (seeded).
ImageFrame render_frame(const CameraModel& camera, const ParticleState& particle, double t, std::uint64_t seed);

struct ExtractionParams {
    double threshold_offset = 10.0;   // gray levels above the local mean
    double min_fill = 0.3;            // fraction of the expected disc area the best window must hold
    std::size_t min_contour = 10;     // border pixels
    RansacParams ransac{};
};

struct FeatureObservation {
    double u = 0.0;
    double v = 0.0;
    double semi_major = 0.0;
    double semi_minor = 0.0;
    bool valid = false;
    std::string reason; // why invalid

    Pixel pixel() const { return {u, v}; }
};

FeatureObservation extract_feature(const ImageFrame& frame, const ImageFrame& background, double expected_diameter_px,
                                   std::uint64_t seed, const ExtractionParams& params = {});

// Pipeline stages, exposed for testing.
namespace pipeline {

struct Binary {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> on;

    bool at(int u, int v) const { return on[std::size_t(v) * width + u] != 0; }
};

struct Window {
    int u0 = 0;
    int v0 = 0;
    int size = 0;
    std::size_t count = 0;
};

std::vector<int> subtract_background(const ImageFrame& frame, const ImageFrame& background);
Binary adaptive_binarize(const std::vector<int>& diff, int width, int height, int window, double offset);
Window best_window(const Binary& fg, int size, int stride);
/// Closing restricted to [u0, u1) x [v0, v1); pixels outside are cleared.
Binary close3x3(const Binary& fg, int u0, int v0, int u1, int v1);
/// Outer border of the largest 8-connected blob, in tracing order.
std::vector<Pixel> largest_blob_border(const Binary& fg);

} // namespace pipeline

} // namespace acoustrap
