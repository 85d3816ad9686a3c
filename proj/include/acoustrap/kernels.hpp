#pragma once

// Inner loops of the field engine and the phase synthesizer.
//
// Every kernel exists as a scalar reference and (on x86-64) an AVX2/FMA
// variant. The active variant is picked once at startup from CPUID and can be
// forced with set_isa() or the ACOUSTRAP_ISA environment variable
// ("scalar" | "avx2"). Variants agree to ~1e-13 relative; they are not
// bit-identical because the vector path sums in four lanes.

#include <complex>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "acoustrap/core.hpp"

namespace acoustrap::kernels {

enum class Isa { Scalar, Avx2 };

std::string_view to_string(Isa isa);

/// Best ISA supported by this CPU and build.
Isa detect_isa();
/// Currently selected ISA.
Isa active_isa();
/// Forces an ISA. Throws ConfigError if the CPU or build lacks it.
void set_isa(Isa isa);
Isa parse_isa(std::string_view text);

/// Element centers in structure-of-arrays form. All elements share one z.
struct ElementGrid {
    std::vector<double> x;
    std::vector<double> y;
    double z = 0.0;

    std::size_t size() const { return x.size(); }
    static ElementGrid from_array(const TransducerArray& array);
};

/// Per-element target points, structure-of-arrays.
struct TargetPoints {
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> z;
};

/// Square-piston far-field directivity; half_width_k = k * width / 2. Zero
/// disables it (monopole).
struct Directivity {
    double half_width_k = 0.0;
};

/// out[i] = mod(k * |target_i - element_i|, 2 pi), in [0, 2 pi).
void focus_phases(const ElementGrid& elements, const TargetPoints& targets, double k, std::span<double> out);

/// sum_i amplitude / d_i * w_i * exp(j (phase_i - k d_i)).
std::complex<double> pressure_sum(const ElementGrid& elements, std::span<const double> phases, const Vec3& point,
                                  double k, double amplitude, Directivity directivity);

/// out[i] = w_i / d_i * exp(-j k d_i): the free-space transfer from each element to one point.
void transfer_row(const ElementGrid& elements, const Vec3& point, double k, Directivity directivity,
                  std::span<std::complex<double>> out);

/// Explicit variants, for equivalence tests and benchmarks.
namespace scalar {
void focus_phases(const ElementGrid& elements, const TargetPoints& targets, double k, std::span<double> out);
std::complex<double> pressure_sum(const ElementGrid& elements, std::span<const double> phases, const Vec3& point,
                                  double k, double amplitude, Directivity directivity);
void transfer_row(const ElementGrid& elements, const Vec3& point, double k, Directivity directivity,
                  std::span<std::complex<double>> out);
void sincos(std::span<const double> x, std::span<double> s, std::span<double> c);
} // namespace scalar

namespace avx2 {
bool available();
void focus_phases(const ElementGrid& elements, const TargetPoints& targets, double k, std::span<double> out);
std::complex<double> pressure_sum(const ElementGrid& elements, std::span<const double> phases, const Vec3& point,
                                  double k, double amplitude, Directivity directivity);
void transfer_row(const ElementGrid& elements, const Vec3& point, double k, Directivity directivity,
                  std::span<std::complex<double>> out);
void sincos(std::span<const double> x, std::span<double> s, std::span<double> c);
} // namespace avx2

} // namespace acoustrap::kernels
