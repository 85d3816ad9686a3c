#pragma once

// Conic and ellipse fitting used by the feature extractor.

#include <cstdint>
#include <optional>
#include <span>

#include "acoustrap/core.hpp"

namespace acoustrap {

/// a x^2 + b x y + c y^2 + d x + e y + f = 0
struct Conic {
    double a = 0, b = 0, c = 0, d = 0, e = 0, f = 0;

    double operator()(double x, double y) const { return a * x * x + b * x * y + c * y * y + d * x + e * y + f; }
    bool is_ellipse() const { return b * b - 4.0 * a * c < 0.0; }
};

struct Ellipse {
    Pixel center{};
    double semi_major = 0.0;
    double semi_minor = 0.0;
    double angle = 0.0; // of the major axis, radians from +u
};

/// First-order geometric distance |F| / |grad F|.
double sampson_distance(const Conic& conic, const Pixel& p);

/// Conic through five points; nullopt for degenerate configurations.
std::optional<Conic> conic_through(std::span<const Pixel, 5> points);

/// Direct least-squares ellipse fit (Fitzgibbon, in the numerically stable
/// Halir-Flusser form). Needs >= 5 points.
std::optional<Conic> fit_ellipse_direct(std::span<const Pixel> points);

/// Geometric parameters; nullopt unless the conic is a real ellipse.
std::optional<Ellipse> to_ellipse(const Conic& conic);

struct RansacParams {
    int max_iterations = 200;
    double inlier_band = 1.5;       // px, Sampson distance
    double early_exit_fraction = 0.9;
};

struct RansacEllipse {
    Ellipse ellipse;
    std::size_t inliers = 0;
    int iterations = 0;
};

/// RANSAC over five-point conic hypotheses, then a direct least-squares
/// refit on the best consensus set. Deterministic for a given seed.
std::optional<RansacEllipse> ransac_ellipse(std::span<const Pixel> points, const RansacParams& params,
                                            std::uint64_t seed);

} // namespace acoustrap
