#pragma once

// Eye-to-hand calibration.
//
// The stereo image Jacobian J (4x3, pixel/um) maps world increments to stacked
// pixel increments f = (u_H, v_H, u_V, v_V):
//
//   df = J dX
//
// With reference points (world X_k, pixels f_k) a new observation f is placed
// back in the array frame by
//
//   X = J+ (f - mean f_k) + mean X_k
//
// J+ is the Moore-Penrose pseudo-inverse; only the centroids of the reference
// set matter.

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "acoustrap/core.hpp"
#include "acoustrap/field.hpp"
#include "acoustrap/vision.hpp"

namespace acoustrap {

class JacobianMatrix {
public:
    using Matrix = Eigen::Matrix<double, 4, 3>;

    JacobianMatrix() = default;
    explicit JacobianMatrix(const Matrix& m) : m_(m) {}
    explicit JacobianMatrix(const std::array<std::array<double, 3>, 4>& rows);

    /// The measured reference-rig Jacobian, scaled for a resampled sensor.
    static JacobianMatrix fixture(double pixel_scale = 1.0);
    /// Rows stacked from the two camera models (H first).
    static JacobianMatrix from_cameras(const CameraModel& h, const CameraModel& v);

    const Matrix& matrix() const { return m_; }
    double operator()(int r, int c) const { return m_(r, c); }
    std::array<std::array<double, 3>, 4> rows() const;

    int rank(double tol = 1e-12) const;
    /// Ratio of largest to smallest singular value; infinity when rank < 3.
    double condition_number() const;
    /// Throws CalibrationError when rank < 3.
    Eigen::Matrix<double, 3, 4> pseudo_inverse() const;

private:
    Matrix m_ = Matrix::Zero();
};

struct ReferenceEntry {
    Vec3 world{};
    Pixel pixel_h{};
    Pixel pixel_v{};
};

class ReferenceSet {
public:
    ReferenceSet() = default;
    /// Throws ConfigError when empty.
    explicit ReferenceSet(std::vector<ReferenceEntry> entries);

    const std::vector<ReferenceEntry>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }
    const Vec3& world_centroid() const { return world_centroid_; }
    /// (u_H, v_H, u_V, v_V)
    const Eigen::Vector4d& pixel_centroid() const { return pixel_centroid_; }

private:
    std::vector<ReferenceEntry> entries_;
    Vec3 world_centroid_{};
    Eigen::Vector4d pixel_centroid_ = Eigen::Vector4d::Zero();
};

/// 24 points on a 2 x 3 x 4 lattice centered on `center` with the given
/// spacing (mm), x fastest.
std::vector<Vec3> reference_lattice(const Vec3& center, double spacing = 3.0);

/// Reference set whose entries are the lattice points projected exactly
/// through both cameras. Its centroids equal the cameras' anchors.
ReferenceSet project_references(std::span<const Vec3> world, const CameraModel& h, const CameraModel& v);

struct MotionPair {
    Vec3 motion_um{};               // commanded increment
    std::array<double, 4> pixels{}; // observed (du_H, dv_H, du_V, dv_V)
};

struct JacobianEstimate {
    JacobianMatrix jacobian;
    double residual_rms = 0.0; // pixels
};

/// Least squares over the stacked increments. Needs >= 3 pairs spanning all
/// three directions; otherwise CalibrationError (naming the missing direction
/// when the set is rank deficient).
JacobianEstimate calibrate_jacobian(std::span<const MotionPair> pairs);

/// Precomputed pseudo-inverse and centroids for repeated localization.
class Localizer {
public:
    Localizer(const JacobianMatrix& jacobian, const ReferenceSet& refs);

    Vec3 operator()(const Pixel& obs_h, const Pixel& obs_v) const;

private:
    Eigen::Matrix<double, 3, 4> pinv_;
    Eigen::Vector4d f_ref_;
    Vec3 x_ref_;
};

Vec3 localize(const JacobianMatrix& jacobian, const ReferenceSet& refs, const Pixel& obs_h, const Pixel& obs_v);

/// Simulated hydrophone scan around a commanded focus.
struct ReferenceScan {
    double half_extent = 1.0; // mm, cube half-size
    double step = 0.2;        // mm, hydrophone tip scale
    PropagationModel model = PropagationModel::Monopole;
};

struct AcquiredReference {
    ReferenceEntry entry;
    double peak_magnitude = 0.0;
    bool on_boundary = false;
};

/// Focus the array on `commanded`, grid-scan |p| over the cube, take the
/// argmax as the reference world point and project it through both cameras.
/// Uniform pixel noise in [-pixel_noise, +pixel_noise] is added to each
/// coordinate when pixel_noise > 0.
AcquiredReference acquire_reference(const TransducerArray& array, const MediumConfig& medium, const Vec3& commanded,
                                    const ReferenceScan& scan, const CameraModel& h, const CameraModel& v,
                                    double pixel_noise = 0.0, std::uint64_t seed = 0);

} // namespace acoustrap
