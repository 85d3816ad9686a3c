#pragma once

// Complex pressure from a hologram by point-source superposition:
//
//   p(r) = sum_i A / d_i * w_i * exp(j (phi_i - k d_i))
//
// phi_i is the element's emission phase and k d_i the propagation delay, so a
// focus hologram lines every term up with phase 0 at its focal point. w_i is
// 1 for the default monopole model, or the far-field directivity of a square
// piston of width = pitch when enabled. No attenuation, no tank reflections.

#include <array>
#include <complex>
#include <optional>
#include <span>
#include <vector>

#include "acoustrap/core.hpp"
#include "acoustrap/hologram.hpp"
#include "acoustrap/kernels.hpp"

namespace acoustrap {

using ComplexPressure = std::complex<double>;

enum class PropagationModel { Monopole, Piston };

/// Evaluates the field of one hologram; caches element geometry so repeated
/// point queries only pay for the sum.
class FieldEvaluator {
public:
    FieldEvaluator(const TransducerArray& array, const PhaseHologram& hologram, const MediumConfig& medium,
                   PropagationModel model = PropagationModel::Monopole);

    /// Throws SingularityError within 1e-9 mm of an element center.
    ComplexPressure pressure(const Vec3& point) const;
    std::vector<ComplexPressure> pressure(std::span<const Vec3> points) const;

    /// Central-difference gradient with the given step (mm); units pressure/mm.
    std::array<ComplexPressure, 3> gradient(const Vec3& point, double step) const;

    double wavenumber() const { return k_; }
    double wavelength() const { return kTwoPi / k_; }
    const TransducerArray& array() const { return array_; }

private:
    void check_singularity(const Vec3& point) const;

    TransducerArray array_;
    kernels::ElementGrid grid_;
    std::vector<double> phases_;
    double k_;
    kernels::Directivity directivity_;
};

ComplexPressure pressure_at(const TransducerArray& array, const PhaseHologram& hologram, const Vec3& point,
                            const MediumConfig& medium, PropagationModel model = PropagationModel::Monopole);

enum class SlicePlane { XOY, XOZ, YOZ };

std::string_view to_string(SlicePlane plane);
SlicePlane parse_plane(std::string_view text);

/// Rectangle in the slice's two in-plane coordinates (a, b):
/// XOY -> (x, y), XOZ -> (x, z), YOZ -> (y, z).
struct SliceBounds {
    double a_min = 0.0;
    double a_max = 0.0;
    double b_min = 0.0;
    double b_max = 0.0;
};

struct FieldSlice {
    SlicePlane plane = SlicePlane::XOY;
    double offset = 0.0;   // fixed coordinate (z for XOY, y for XOZ, x for YOZ)
    double a0 = 0.0;       // coordinate of column 0
    double b0 = 0.0;       // coordinate of row 0
    double spacing = 0.0;  // mm
    int na = 0;            // samples along a
    int nb = 0;            // samples along b
    std::vector<ComplexPressure> values; // row-major, nb rows of na

    const ComplexPressure& at(int ia, int ib) const { return values[std::size_t(ib) * na + ia]; }
    Vec3 point(int ia, int ib) const;
};

/// Samples a plane on a regular grid. Warns when resolution > lambda/4.
/// Throws GeometryError on degenerate bounds or a grid leaving the tank.
FieldSlice field_slice(const TransducerArray& array, const PhaseHologram& hologram, SlicePlane plane, double offset,
                       const SliceBounds& bounds, double resolution, const MediumConfig& medium,
                       PropagationModel model = PropagationModel::Monopole, const TankConfig& tank = {});

struct TrapQuality {
    double center_magnitude = 0.0;
    std::optional<std::array<double, 6>> vertex_magnitudes; // octahedral only
    double contrast_ratio = 0.0;                            // center / mean(vertexes); octahedral only
    double focal_peak = 0.0;                                // focus only
    double lateral_fwhm = 0.0;                              // mm, focus only
    double axial_fwhm = 0.0;                                // mm, focus only
};

TrapQuality trap_quality(const TransducerArray& array, const PhaseHologram& hologram, const TrapSpec& trap,
                         const MediumConfig& medium, PropagationModel model = PropagationModel::Monopole);

/// Full width at half maximum of |p| along a line through `center` in
/// `direction` (unit vector), scanning +/- half_range at `step`. The
/// half-maximum crossings are linearly interpolated.
double line_fwhm(const FieldEvaluator& field, const Vec3& center, const Vec3& direction, double half_range,
                 double step);

/// Acoustic properties of the particle materials used in the experiments.
struct ParticleMaterial {
    double density = 1050.0;     // kg/m^3
    double sound_speed = 2350.0; // m/s
};

/// Polystyrene for positive contrast, PDMS for negative.
ParticleMaterial material_for(Contrast contrast);

/// Time-averaged small-sphere radiation potential (J, for unit-pascal
/// emission amplitude):
///   U = V [ f1 / (2 rho c^2) <p^2> - 3/4 rho f2 <v^2> ]
/// with f1 = 1 - (rho c^2)/(rho_p c_p^2), f2 = 2 (rho_p - rho)/(2 rho_p + rho),
/// <p^2> = |p|^2 / 2 and <v^2> = |grad p|^2 / (2 omega^2 rho^2). The gradient
/// comes from central differences at lambda/50.
double gorkov_potential(const FieldEvaluator& field, const Vec3& point, const MediumConfig& medium,
                        const ParticleState& particle, const TankConfig& tank = {});

double gorkov_potential(const TransducerArray& array, const PhaseHologram& hologram, const Vec3& point,
                        const MediumConfig& medium, const ParticleState& particle,
                        PropagationModel model = PropagationModel::Monopole, const TankConfig& tank = {});

struct DiameterScan {
    double best_diameter = 0.0;
    double best_contrast = 0.0;
    std::vector<std::pair<double, double>> samples; // (diameter, contrast)
};

/// Sweeps the octahedron diameter and reports the one with the deepest
/// central null (lowest contrast ratio).
DiameterScan scan_octahedral_diameter(const TransducerArray& array, const Vec3& center, double d_min, double d_max,
                                      double step, const MediumConfig& medium,
                                      PropagationModel model = PropagationModel::Monopole);

} // namespace acoustrap
