#include "acoustrap/field.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace acoustrap {

namespace {

constexpr double kSingularityRadius = 1e-9; // mm

} // namespace

FieldEvaluator::FieldEvaluator(const TransducerArray& array, const PhaseHologram& hologram,
                               const MediumConfig& medium, PropagationModel model)
    : array_(array),
      grid_(kernels::ElementGrid::from_array(array)),
      phases_(hologram.phases().begin(), hologram.phases().end()),
      k_(kTwoPi / acoustrap::wavelength(medium, array)) {
    validate(array);
    if (!hologram.matches(array)) {
        std::ostringstream os;
        os << "hologram shape " << hologram.rows() << "x" << hologram.cols() << " does not match array "
           << array.rows << "x" << array.cols;
        throw ConfigError(os.str());
    }
    if (model == PropagationModel::Piston) directivity_.half_width_k = k_ * array.pitch / 2.0;
}

void FieldEvaluator::check_singularity(const Vec3& point) const {
    if (!point.finite()) throw GeometryError("field point is not finite");
    if (std::abs(point.z - grid_.z) >= kSingularityRadius) return;
    // In the array plane: only the nearest element can be that close.
    const double fi = (point.x - array_.origin.x) / array_.pitch - 0.5;
    const double fj = (point.y - array_.origin.y) / array_.pitch - 0.5;
    const int i = std::clamp(static_cast<int>(std::lround(fi)), 0, array_.rows - 1);
    const int j = std::clamp(static_cast<int>(std::lround(fj)), 0, array_.cols - 1);
    if (distance(element_center(array_, i, j), point) < kSingularityRadius) {
        throw SingularityError("field point " + to_string(point) + " coincides with an element center");
    }
}

ComplexPressure FieldEvaluator::pressure(const Vec3& point) const {
    check_singularity(point);
    return kernels::pressure_sum(grid_, phases_, point, k_, array_.emission_amplitude, directivity_);
}

std::vector<ComplexPressure> FieldEvaluator::pressure(std::span<const Vec3> points) const {
    std::vector<ComplexPressure> out;
    out.reserve(points.size());
    for (const Vec3& p : points) out.push_back(pressure(p));
    return out;
}

std::array<ComplexPressure, 3> FieldEvaluator::gradient(const Vec3& point, double step) const {
    const Vec3 axes[3] = {{step, 0, 0}, {0, step, 0}, {0, 0, step}};
    std::array<ComplexPressure, 3> g;
    for (int a = 0; a < 3; ++a) g[a] = (pressure(point + axes[a]) - pressure(point - axes[a])) / (2.0 * step);
    return g;
}

ComplexPressure pressure_at(const TransducerArray& array, const PhaseHologram& hologram, const Vec3& point,
                            const MediumConfig& medium, PropagationModel model) {
    return FieldEvaluator(array, hologram, medium, model).pressure(point);
}

std::string_view to_string(SlicePlane plane) {
    switch (plane) {
    case SlicePlane::XOY: return "xoy";
    case SlicePlane::XOZ: return "xoz";
    case SlicePlane::YOZ: return "yoz";
    }
    return "?";
}

SlicePlane parse_plane(std::string_view text) {
    if (text == "xoy" || text == "XOY") return SlicePlane::XOY;
    if (text == "xoz" || text == "XOZ") return SlicePlane::XOZ;
    if (text == "yoz" || text == "YOZ") return SlicePlane::YOZ;
    throw ConfigError("unknown plane '" + std::string(text) + "' (expected xoy|xoz|yoz)");
}

Vec3 FieldSlice::point(int ia, int ib) const {
    const double a = a0 + ia * spacing;
    const double b = b0 + ib * spacing;
    switch (plane) {
    case SlicePlane::XOY: return {a, b, offset};
    case SlicePlane::XOZ: return {a, offset, b};
    case SlicePlane::YOZ: return {offset, a, b};
    }
    return {};
}

FieldSlice field_slice(const TransducerArray& array, const PhaseHologram& hologram, SlicePlane plane, double offset,
                       const SliceBounds& bounds, double resolution, const MediumConfig& medium,
                       PropagationModel model, const TankConfig& tank) {
    if (!(resolution > 0.0) || !std::isfinite(resolution)) throw GeometryError("slice resolution must be > 0");
    if (!(bounds.a_max > bounds.a_min) || !(bounds.b_max > bounds.b_min)) {
        throw GeometryError("degenerate slice bounds (need a_max > a_min and b_max > b_min)");
    }
    const double lambda = wavelength(medium, array);
    if (resolution > lambda / 4.0) {
        std::ostringstream os;
        os << "slice resolution " << resolution << " mm is coarser than lambda/4 = " << lambda / 4.0
           << " mm; focal structure will be undersampled";
        warn(os.str());
    }

    FieldSlice slice;
    slice.plane = plane;
    slice.offset = offset;
    slice.a0 = bounds.a_min;
    slice.b0 = bounds.b_min;
    slice.spacing = resolution;
    slice.na = static_cast<int>(std::floor((bounds.a_max - bounds.a_min) / resolution + 1e-9)) + 1;
    slice.nb = static_cast<int>(std::floor((bounds.b_max - bounds.b_min) / resolution + 1e-9)) + 1;

    for (const Vec3& corner : {slice.point(0, 0), slice.point(slice.na - 1, slice.nb - 1)}) {
        if (!tank.contains(corner)) throw GeometryError("slice grid leaves the tank at " + to_string(corner));
    }

    const FieldEvaluator field(array, hologram, medium, model);
    slice.values.resize(std::size_t(slice.na) * slice.nb);
    for (int ib = 0; ib < slice.nb; ++ib)
        for (int ia = 0; ia < slice.na; ++ia)
            slice.values[std::size_t(ib) * slice.na + ia] = field.pressure(slice.point(ia, ib));
    return slice;
}

double line_fwhm(const FieldEvaluator& field, const Vec3& center, const Vec3& direction, double half_range,
                 double step) {
    const int n = static_cast<int>(std::floor(half_range / step));
    std::vector<double> mag(std::size_t(2 * n + 1));
    for (int s = -n; s <= n; ++s) mag[std::size_t(s + n)] = std::abs(field.pressure(center + direction * (s * step)));

    const auto peak_it = std::max_element(mag.begin(), mag.end());
    const double half = *peak_it / 2.0;
    const auto peak = static_cast<std::ptrdiff_t>(peak_it - mag.begin());

    auto crossing = [&](int dir) {
        std::ptrdiff_t i = peak;
        while (true) {
            const std::ptrdiff_t next = i + dir;
            if (next < 0 || next >= static_cast<std::ptrdiff_t>(mag.size())) {
                warn("line scan did not reach half maximum; FWHM truncated at scan range");
                return static_cast<double>(i);
            }
            if (mag[std::size_t(next)] < half) {
                const double t = (mag[std::size_t(i)] - half) / (mag[std::size_t(i)] - mag[std::size_t(next)]);
                return static_cast<double>(i) + dir * t;
            }
            i = next;
        }
    };
    return (crossing(+1) - crossing(-1)) * step;
}

TrapQuality trap_quality(const TransducerArray& array, const PhaseHologram& hologram, const TrapSpec& trap,
                         const MediumConfig& medium, PropagationModel model) {
    const FieldEvaluator field(array, hologram, medium, model);
    const double lambda = field.wavelength();
    TrapQuality q;
    if (const auto* oct = std::get_if<OctahedralTrap>(&trap)) {
        q.center_magnitude = std::abs(field.pressure(oct->center));
        std::array<double, 6> vm{};
        const auto vertexes = octahedron_vertexes(oct->center, oct->diameter);
        double sum = 0.0;
        for (std::size_t v = 0; v < 6; ++v) {
            vm[v] = std::abs(field.pressure(vertexes[v]));
            sum += vm[v];
        }
        q.vertex_magnitudes = vm;
        const double mean = sum / 6.0;
        q.contrast_ratio = mean > 0.0 ? q.center_magnitude / mean : 0.0;
        return q;
    }
    const Vec3 focal = std::get<FocusTrap>(trap).point;
    q.center_magnitude = std::abs(field.pressure(focal));
    q.focal_peak = q.center_magnitude;
    const double step = lambda / 20.0;
    q.lateral_fwhm = line_fwhm(field, focal, {1, 0, 0}, 10.0 * lambda, step);
    const double axial_range = std::min(30.0 * lambda, focal.z - array.origin.z - lambda);
    q.axial_fwhm = line_fwhm(field, focal, {0, 0, 1}, axial_range, step);
    return q;
}

ParticleMaterial material_for(Contrast contrast) {
    if (contrast == Contrast::Positive) return {1050.0, 2350.0}; // polystyrene
    return {1030.0, 1050.0};                                     // PDMS
}

double gorkov_potential(const FieldEvaluator& field, const Vec3& point, const MediumConfig& medium,
                        const ParticleState& particle, const TankConfig& tank) {
    const double lambda = field.wavelength();
    const double step = lambda / 50.0;
    if (um_to_mm(particle.diameter_um) > lambda / 2.0) {
        warn("particle diameter exceeds lambda/2; small-sphere potential is outside its validity range");
    }
    for (const Vec3& probe : {point - Vec3{step, step, step}, point + Vec3{step, step, step}}) {
        if (!tank.contains(probe)) throw GeometryError("Gor'kov stencil leaves the tank at " + to_string(probe));
    }

    const ParticleMaterial mat = material_for(particle.contrast);
    const double rho0 = medium.density;
    const double c0 = medium.sound_speed;
    const double f1 = 1.0 - (rho0 * c0 * c0) / (mat.density * mat.sound_speed * mat.sound_speed);
    const double f2 = 2.0 * (mat.density - rho0) / (2.0 * mat.density + rho0);
    const double omega = kTwoPi * field.array().frequency;
    const double radius_m = um_to_mm(particle.diameter_um) * 1e-3 / 2.0;
    const double volume = 4.0 / 3.0 * std::numbers::pi * radius_m * radius_m * radius_m;

    const ComplexPressure p = field.pressure(point);
    const auto grad = field.gradient(point, step);
    double grad2 = 0.0;
    for (const auto& g : grad) grad2 += std::norm(g);
    grad2 *= 1e6; // per mm -> per m

    const double p2 = std::norm(p) / 2.0;
    const double v2 = grad2 / (2.0 * omega * omega * rho0 * rho0);
    return volume * (f1 / (2.0 * rho0 * c0 * c0) * p2 - 0.75 * rho0 * f2 * v2);
}

double gorkov_potential(const TransducerArray& array, const PhaseHologram& hologram, const Vec3& point,
                        const MediumConfig& medium, const ParticleState& particle, PropagationModel model,
                        const TankConfig& tank) {
    return gorkov_potential(FieldEvaluator(array, hologram, medium, model), point, medium, particle, tank);
}

DiameterScan scan_octahedral_diameter(const TransducerArray& array, const Vec3& center, double d_min, double d_max,
                                      double step, const MediumConfig& medium, PropagationModel model) {
    if (!(d_min > 0.0) || !(d_max >= d_min) || !(step > 0.0)) throw ConfigError("invalid diameter scan range");
    DiameterScan scan;
    scan.best_contrast = std::numeric_limits<double>::infinity();
    const int n = static_cast<int>(std::floor((d_max - d_min) / step + 1e-9));
    for (int s = 0; s <= n; ++s) {
        const double d = d_min + s * step;
        const auto holo = make_octahedral_hologram(array, center, d, medium);
        const double c = trap_quality(array, holo, OctahedralTrap{center, d}, medium, model).contrast_ratio;
        scan.samples.emplace_back(d, c);
        if (c < scan.best_contrast) {
            scan.best_contrast = c;
            scan.best_diameter = d;
        }
    }
    return scan;
}

} // namespace acoustrap
