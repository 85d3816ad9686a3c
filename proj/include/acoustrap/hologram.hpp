#pragma once

// Phase-only holograms (POH) for the phased array.
//
//  * Single focus: every element gets the Fresnel half-wave-band phase toward
//    the focal point, so all contributions arrive in phase there.
//  * Octahedral trap: six foci on the axes of a sphere around the trap
//    center, one per element group (spatial multiplexing over 2x3 blocks).
//  * Iterative backpropagation: alternating-projection baseline, kept only as
//    a runtime/quality comparator.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "acoustrap/core.hpp"

namespace acoustrap {

/// Wraps an angle into [0, 2 pi).
double normalize_phase(double radians);

/// Wraps an angle into (-pi, pi].
double wrap_to_pi(double radians);

class PhaseHologram {
public:
    PhaseHologram(int rows, int cols, std::vector<double> phases);
    PhaseHologram(int rows, int cols) : PhaseHologram(rows, cols, std::vector<double>(std::size_t(rows) * cols, 0.0)) {}

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    std::size_t size() const { return phases_.size(); }
    double at(int i, int j) const { return phases_[std::size_t(i) * cols_ + j]; }
    std::span<const double> phases() const { return phases_; }

    bool matches(const TransducerArray& array) const { return rows_ == array.rows && cols_ == array.cols; }

private:
    int rows_;
    int cols_;
    std::vector<double> phases_;
};

struct FocusTrap {
    Vec3 point{};
};

struct OctahedralTrap {
    Vec3 center{};
    double diameter = 2.4; // mm
};

using TrapSpec = std::variant<FocusTrap, OctahedralTrap>;

Vec3 trap_center(const TrapSpec& trap);
std::string_view trap_kind(const TrapSpec& trap);

/// Vertex indices of the octahedron, in the order returned by
/// octahedron_vertexes().
enum Vertex : std::uint8_t { PlusX = 0, MinusX, PlusY, MinusY, PlusZ, MinusZ };

/// Per-element vertex index from the 2x3 block tiling.
struct SmAssignment {
    int rows = 0;
    int cols = 0;
    std::vector<std::uint8_t> group;

    std::uint8_t at(int i, int j) const { return group[std::size_t(i) * cols + j]; }
};

/// Single-element phase toward a focal point (radians in [0, 2 pi)).
/// Throws GeometryError when element and focal point coincide.
double focus_phase(const Vec3& element, const Vec3& focal, double wavelength_mm);

PhaseHologram make_focus_hologram(const TransducerArray& array, const Vec3& focal, const MediumConfig& medium);

/// Six vertexes at center +/- r along x, y, z (r = diameter / 2), ordered
/// +x, -x, +y, -y, +z, -z.
std::array<Vec3, 6> octahedron_vertexes(const Vec3& center, double diameter);

/// 2x3 blocks anchored at element (0, 0); within a block the vertex index runs
/// row-major 0..5. Leftover rows/columns continue the pattern cyclically, so
/// group(i, j) = 3 * (i mod 2) + (j mod 3).
SmAssignment sm_assignment(const TransducerArray& array);

/// Octahedral trap via spatial multiplexing: element (i, j) focuses on
/// vertexes[group(i, j)].
PhaseHologram make_octahedral_hologram(const TransducerArray& array, const Vec3& center, double diameter,
                                       const MediumConfig& medium);

/// Same, for an explicit vertex list (e.g. a rotated octahedron).
PhaseHologram make_multiplexed_hologram(const TransducerArray& array, std::span<const Vec3, 6> vertexes,
                                        const MediumConfig& medium);

PhaseHologram make_trap_hologram(const TransducerArray& array, const TrapSpec& trap, const MediumConfig& medium);

struct IbResult {
    PhaseHologram hologram;
    /// Negative sum of target pressure magnitudes, one entry per iteration
    /// (evaluated after the iteration's phase update).
    std::vector<double> cost;
};

/// Alternating projection between the element plane (unit amplitude, free
/// phase) and the target points (unit amplitude, free phase), starting from
/// all-zero phases.
IbResult ib_baseline_hologram(const TransducerArray& array, std::span<const Vec3> targets, const MediumConfig& medium,
                              int iterations);

} // namespace acoustrap
