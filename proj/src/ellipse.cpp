#include "acoustrap/ellipse.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <vector>

namespace acoustrap {

namespace {

struct Normalization {
    double mu = 0.0;
    double mv = 0.0;
    double scale = 1.0; // normalized = (p - mean) / scale
};

Normalization normalization_for(std::span<const Pixel> pts) {
    Normalization n;
    for (const auto& p : pts) {
        n.mu += p.u;
        n.mv += p.v;
    }
    n.mu /= double(pts.size());
    n.mv /= double(pts.size());
    double r2 = 0.0;
    for (const auto& p : pts) r2 += (p.u - n.mu) * (p.u - n.mu) + (p.v - n.mv) * (p.v - n.mv);
    const double rms = std::sqrt(r2 / double(pts.size()));
    n.scale = rms > 0.0 ? rms / std::sqrt(2.0) : 1.0;
    return n;
}

Ellipse denormalize(const Ellipse& e, const Normalization& n) {
    Ellipse out = e;
    out.center = {e.center.u * n.scale + n.mu, e.center.v * n.scale + n.mv};
    out.semi_major *= n.scale;
    out.semi_minor *= n.scale;
    return out;
}

} // namespace

double sampson_distance(const Conic& q, const Pixel& p) {
    const double gx = 2.0 * q.a * p.u + q.b * p.v + q.d;
    const double gy = q.b * p.u + 2.0 * q.c * p.v + q.e;
    const double g = std::sqrt(gx * gx + gy * gy);
    const double f = q(p.u, p.v);
    if (g == 0.0) return f == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return std::abs(f) / g;
}

std::optional<Conic> conic_through(std::span<const Pixel, 5> pts) {
    Eigen::Matrix<double, 5, 6> m;
    for (int r = 0; r < 5; ++r) {
        const double x = pts[r].u;
        const double y = pts[r].v;
        m.row(r) << x * x, x * y, y * y, x, y, 1.0;
    }
    Eigen::JacobiSVD<Eigen::Matrix<double, 5, 6>> svd(m, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    // Rank < 5 means the points do not pin down a unique conic.
    if (sv(0) == 0.0 || sv(4) / sv(0) < 1e-10) return std::nullopt;
    const Eigen::Matrix<double, 6, 1> n = svd.matrixV().col(5);
    return Conic{n(0), n(1), n(2), n(3), n(4), n(5)};
}

std::optional<Conic> fit_ellipse_direct(std::span<const Pixel> pts) {
    if (pts.size() < 5) return std::nullopt;
    const Eigen::Index n = static_cast<Eigen::Index>(pts.size());
    Eigen::MatrixXd d1(n, 3);
    Eigen::MatrixXd d2(n, 3);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double x = pts[std::size_t(i)].u;
        const double y = pts[std::size_t(i)].v;
        d1.row(i) << x * x, x * y, y * y;
        d2.row(i) << x, y, 1.0;
    }
    const Eigen::Matrix3d s1 = d1.transpose() * d1;
    const Eigen::Matrix3d s2 = d1.transpose() * d2;
    const Eigen::Matrix3d s3 = d2.transpose() * d2;
    Eigen::FullPivLU<Eigen::Matrix3d> lu(s3);
    if (!lu.isInvertible()) return std::nullopt;
    const Eigen::Matrix3d t = -lu.inverse() * s2.transpose();
    const Eigen::Matrix3d m = s1 + s2 * t;
    Eigen::Matrix3d reduced;
    reduced.row(0) = m.row(2) / 2.0;
    reduced.row(1) = -m.row(1);
    reduced.row(2) = m.row(0) / 2.0;

    Eigen::EigenSolver<Eigen::Matrix3d> es(reduced);
    if (es.info() != Eigen::Success) return std::nullopt;
    std::optional<Eigen::Vector3d> best;
    for (int k = 0; k < 3; ++k) {
        const Eigen::Vector3d v = es.eigenvectors().col(k).real();
        if (4.0 * v(0) * v(2) - v(1) * v(1) > 0.0) {
            best = v;
            break;
        }
    }
    if (!best) return std::nullopt;
    const Eigen::Vector3d a2 = t * *best;
    return Conic{(*best)(0), (*best)(1), (*best)(2), a2(0), a2(1), a2(2)};
}

std::optional<Ellipse> to_ellipse(const Conic& q) {
    if (!q.is_ellipse()) return std::nullopt;
    const double det = 4.0 * q.a * q.c - q.b * q.b;
    const double x0 = (q.b * q.e - 2.0 * q.c * q.d) / det;
    const double y0 = (q.b * q.d - 2.0 * q.a * q.e) / det;
    const double f0 = q.f + (q.d * x0 + q.e * y0) / 2.0;

    Eigen::Matrix2d shape;
    shape << q.a, q.b / 2.0, q.b / 2.0, q.c;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(shape);
    const double l0 = es.eigenvalues()(0);
    const double l1 = es.eigenvalues()(1);
    const double r0 = -f0 / l0;
    const double r1 = -f0 / l1;
    if (!(r0 > 0.0) || !(r1 > 0.0)) return std::nullopt;

    // Smaller eigenvalue <-> longer axis.
    const double s0 = std::sqrt(r0);
    const double s1 = std::sqrt(r1);
    Ellipse e;
    e.center = {x0, y0};
    const int major = s0 >= s1 ? 0 : 1;
    e.semi_major = std::max(s0, s1);
    e.semi_minor = std::min(s0, s1);
    const Eigen::Vector2d axis = es.eigenvectors().col(major);
    e.angle = std::atan2(axis(1), axis(0));
    return e;
}

std::optional<RansacEllipse> ransac_ellipse(std::span<const Pixel> points, const RansacParams& params,
                                            std::uint64_t seed) {
    const std::size_t n = points.size();
    if (n < 5) return std::nullopt;

    const Normalization norm = normalization_for(points);
    std::vector<Pixel> pts(n);
    for (std::size_t i = 0; i < n; ++i)
        pts[i] = {(points[i].u - norm.mu) / norm.scale, (points[i].v - norm.mv) / norm.scale};
    const double band = params.inlier_band / norm.scale;

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);

    std::vector<char> best_mask;
    std::size_t best_count = 0;
    std::vector<char> mask(n);
    int iterations = 0;
    for (int it = 0; it < params.max_iterations; ++it) {
        ++iterations;
        std::array<std::size_t, 5> idx{};
        for (std::size_t s = 0; s < 5; ++s) {
            std::size_t candidate;
            do {
                candidate = pick(rng);
            } while (std::find(idx.begin(), idx.begin() + std::ptrdiff_t(s), candidate) != idx.begin() + std::ptrdiff_t(s));
            idx[s] = candidate;
        }
        const std::array<Pixel, 5> sample{pts[idx[0]], pts[idx[1]], pts[idx[2]], pts[idx[3]], pts[idx[4]]};
        const auto conic = conic_through(std::span<const Pixel, 5>(sample));
        if (!conic || !conic->is_ellipse()) continue;

        std::size_t count = 0;
        for (std::size_t i = 0; i < n; ++i) {
            mask[i] = sampson_distance(*conic, pts[i]) <= band;
            count += std::size_t(mask[i]);
        }
        if (count > best_count) {
            best_count = count;
            best_mask = mask;
        }
        if (double(best_count) >= params.early_exit_fraction * double(n)) break;
    }
    if (best_count < 5) return std::nullopt;

    std::vector<Pixel> inliers;
    inliers.reserve(best_count);
    for (std::size_t i = 0; i < n; ++i)
        if (best_mask[i]) inliers.push_back(pts[i]);
    const auto refit = fit_ellipse_direct(inliers);
    if (!refit) return std::nullopt;
    const auto ellipse = to_ellipse(*refit);
    if (!ellipse) return std::nullopt;
    return RansacEllipse{denormalize(*ellipse, norm), best_count, iterations};
}

} // namespace acoustrap
