#include "acoustrap/calibration.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "acoustrap/fixture.hpp"
#include "acoustrap/hologram.hpp"

namespace acoustrap {

JacobianMatrix::JacobianMatrix(const std::array<std::array<double, 3>, 4>& rows) {
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 3; ++c) m_(r, c) = rows[r][c];
}

JacobianMatrix JacobianMatrix::fixture(double pixel_scale) {
    JacobianMatrix j(fixture::kJacobian);
    j.m_ *= pixel_scale;
    return j;
}

JacobianMatrix JacobianMatrix::from_cameras(const CameraModel& h, const CameraModel& v) {
    Matrix m;
    for (int c = 0; c < 3; ++c) {
        m(0, c) = h.jacobian[0][c];
        m(1, c) = h.jacobian[1][c];
        m(2, c) = v.jacobian[0][c];
        m(3, c) = v.jacobian[1][c];
    }
    return JacobianMatrix(m);
}

std::array<std::array<double, 3>, 4> JacobianMatrix::rows() const {
    std::array<std::array<double, 3>, 4> out{};
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 3; ++c) out[r][c] = m_(r, c);
    return out;
}

int JacobianMatrix::rank(double tol) const {
    Eigen::JacobiSVD<Matrix> svd(m_);
    const auto& s = svd.singularValues();
    if (s(0) == 0.0) return 0;
    int r = 0;
    for (int i = 0; i < 3; ++i) r += s(i) > tol * s(0);
    return r;
}

double JacobianMatrix::condition_number() const {
    Eigen::JacobiSVD<Matrix> svd(m_);
    const auto& s = svd.singularValues();
    if (s(2) <= 1e-12 * s(0)) return std::numeric_limits<double>::infinity();
    return s(0) / s(2);
}

Eigen::Matrix<double, 3, 4> JacobianMatrix::pseudo_inverse() const {
    if (rank() < 3) throw CalibrationError("image Jacobian is rank deficient; pseudo-inverse undefined");
    Eigen::JacobiSVD<Matrix> svd(m_, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::Vector3d inv = svd.singularValues().cwiseInverse();
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().leftCols<3>().transpose();
}

ReferenceSet::ReferenceSet(std::vector<ReferenceEntry> entries) : entries_(std::move(entries)) {
    if (entries_.empty()) throw ConfigError("reference set needs at least one entry");
    for (const auto& e : entries_) {
        world_centroid_ += e.world;
        pixel_centroid_ += Eigen::Vector4d(e.pixel_h.u, e.pixel_h.v, e.pixel_v.u, e.pixel_v.v);
    }
    world_centroid_ = world_centroid_ / double(entries_.size());
    pixel_centroid_ /= double(entries_.size());
}

std::vector<Vec3> reference_lattice(const Vec3& center, double spacing) {
    std::vector<Vec3> pts;
    pts.reserve(24);
    for (int k = 0; k < 4; ++k)
        for (int j = 0; j < 3; ++j)
            for (int i = 0; i < 2; ++i)
                pts.push_back(center + Vec3{(i - 0.5) * spacing, (j - 1.0) * spacing, (k - 1.5) * spacing});
    return pts;
}

ReferenceSet project_references(std::span<const Vec3> world, const CameraModel& h, const CameraModel& v) {
    std::vector<ReferenceEntry> entries;
    entries.reserve(world.size());
    for (const auto& w : world) entries.push_back({w, project(h, w), project(v, w)});
    return ReferenceSet(std::move(entries));
}

JacobianEstimate calibrate_jacobian(std::span<const MotionPair> pairs) {
    if (pairs.size() < 3) {
        throw CalibrationError("Jacobian calibration needs at least 3 motion pairs, got " +
                               std::to_string(pairs.size()));
    }
    const Eigen::Index n = static_cast<Eigen::Index>(pairs.size());
    Eigen::MatrixXd dx(n, 3);
    Eigen::MatrixXd df(n, 4);
    for (Eigen::Index k = 0; k < n; ++k) {
        const auto& p = pairs[std::size_t(k)];
        dx.row(k) << p.motion_um.x, p.motion_um.y, p.motion_um.z;
        df.row(k) << p.pixels[0], p.pixels[1], p.pixels[2], p.pixels[3];
    }

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(dx, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& s = svd.singularValues();
    if (s(0) == 0.0 || s(2) < 1e-9 * s(0)) {
        const Eigen::Vector3d missing = svd.matrixV().col(2);
        std::ostringstream os;
        os << "motion set does not span 3D; no excitation along direction (" << missing(0) << ", " << missing(1)
           << ", " << missing(2) << ")";
        throw CalibrationError(os.str());
    }
    // dx * J^T = df in the least-squares sense.
    const Eigen::MatrixXd jt = svd.solve(df);
    JacobianEstimate est{JacobianMatrix(JacobianMatrix::Matrix(jt.transpose())), 0.0};
    const Eigen::MatrixXd residual = df - dx * jt;
    est.residual_rms = std::sqrt(residual.squaredNorm() / double(residual.size()));
    return est;
}

Localizer::Localizer(const JacobianMatrix& jacobian, const ReferenceSet& refs)
    : pinv_(jacobian.pseudo_inverse()), f_ref_(refs.pixel_centroid()), x_ref_(refs.world_centroid()) {}

Vec3 Localizer::operator()(const Pixel& obs_h, const Pixel& obs_v) const {
    const Eigen::Vector4d f(obs_h.u, obs_h.v, obs_v.u, obs_v.v);
    const Eigen::Vector3d dx_um = pinv_ * (f - f_ref_);
    return x_ref_ + Vec3{um_to_mm(dx_um(0)), um_to_mm(dx_um(1)), um_to_mm(dx_um(2))};
}

Vec3 localize(const JacobianMatrix& jacobian, const ReferenceSet& refs, const Pixel& obs_h, const Pixel& obs_v) {
    return Localizer(jacobian, refs)(obs_h, obs_v);
}

AcquiredReference acquire_reference(const TransducerArray& array, const MediumConfig& medium, const Vec3& commanded,
                                    const ReferenceScan& scan, const CameraModel& h, const CameraModel& v,
                                    double pixel_noise, std::uint64_t seed) {
    if (!(scan.step > 0.0) || !(scan.half_extent >= 0.0)) throw ConfigError("reference scan step must be > 0");
    const auto hologram = make_focus_hologram(array, commanded, medium);
    const FieldEvaluator field(array, hologram, medium, scan.model);

    const int n = static_cast<int>(std::floor(scan.half_extent / scan.step + 1e-9));
    std::vector<Vec3> grid;
    grid.reserve(std::size_t(2 * n + 1) * (2 * n + 1) * (2 * n + 1));
    for (int k = -n; k <= n; ++k)
        for (int j = -n; j <= n; ++j)
            for (int i = -n; i <= n; ++i) grid.push_back(commanded + Vec3{i * scan.step, j * scan.step, k * scan.step});
    const auto values = field.pressure(grid);

    std::size_t best = 0;
    for (std::size_t q = 1; q < values.size(); ++q)
        if (std::abs(values[q]) > std::abs(values[best])) best = q;

    AcquiredReference out;
    out.peak_magnitude = std::abs(values[best]);
    const int side = 2 * n + 1;
    const int bi = int(best % side);
    const int bj = int((best / side) % side);
    const int bk = int(best / (std::size_t(side) * side));
    out.on_boundary = n > 0 && (bi == 0 || bj == 0 || bk == 0 || bi == side - 1 || bj == side - 1 || bk == side - 1);
    if (out.on_boundary) {
        warn("reference scan maximum at " + to_string(grid[best]) +
             " lies on the scan boundary; the focus is probably outside the scan volume");
    }

    out.entry.world = grid[best];
    out.entry.pixel_h = project(h, grid[best]);
    out.entry.pixel_v = project(v, grid[best]);
    if (pixel_noise > 0.0) {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> noise(-pixel_noise, pixel_noise);
        out.entry.pixel_h.u += noise(rng);
        out.entry.pixel_h.v += noise(rng);
        out.entry.pixel_v.u += noise(rng);
        out.entry.pixel_v.v += noise(rng);
    }
    return out;
}

} // namespace acoustrap
