#include <atomic>
#include <cstdlib>
#include <string>

#include "acoustrap/kernels.hpp"

namespace acoustrap::kernels {

namespace {

Isa initial_isa() {
    if (const char* env = std::getenv("ACOUSTRAP_ISA"); env != nullptr && *env != '\0') {
        const Isa wanted = parse_isa(env);
        if (wanted == Isa::Avx2 && !avx2::available()) {
            warn("ACOUSTRAP_ISA=avx2 requested but unsupported here; using scalar kernels");
            return Isa::Scalar;
        }
        return wanted;
    }
    return detect_isa();
}

std::atomic<Isa>& selected() {
    static std::atomic<Isa> isa{initial_isa()};
    return isa;
}

} // namespace

std::string_view to_string(Isa isa) { return isa == Isa::Avx2 ? "avx2" : "scalar"; }

Isa parse_isa(std::string_view text) {
    if (text == "scalar") return Isa::Scalar;
    if (text == "avx2") return Isa::Avx2;
    throw ConfigError("unknown kernel ISA '" + std::string(text) + "' (expected scalar|avx2)");
}

Isa detect_isa() { return avx2::available() ? Isa::Avx2 : Isa::Scalar; }

Isa active_isa() { return selected().load(std::memory_order_relaxed); }

void set_isa(Isa isa) {
    if (isa == Isa::Avx2 && !avx2::available()) throw ConfigError("AVX2 kernels unavailable on this CPU/build");
    selected().store(isa, std::memory_order_relaxed);
}

ElementGrid ElementGrid::from_array(const TransducerArray& array) {
    ElementGrid grid;
    grid.x.resize(array.size());
    grid.y.resize(array.size());
    grid.z = array.origin.z;
    for (int i = 0; i < array.rows; ++i) {
        for (int j = 0; j < array.cols; ++j) {
            const Vec3 c = element_center(array, i, j);
            grid.x[array.flat_index(i, j)] = c.x;
            grid.y[array.flat_index(i, j)] = c.y;
        }
    }
    return grid;
}

void focus_phases(const ElementGrid& elements, const TargetPoints& targets, double k, std::span<double> out) {
    if (active_isa() == Isa::Avx2) return avx2::focus_phases(elements, targets, k, out);
    scalar::focus_phases(elements, targets, k, out);
}

std::complex<double> pressure_sum(const ElementGrid& elements, std::span<const double> phases, const Vec3& point,
                                  double k, double amplitude, Directivity directivity) {
    if (active_isa() == Isa::Avx2) return avx2::pressure_sum(elements, phases, point, k, amplitude, directivity);
    return scalar::pressure_sum(elements, phases, point, k, amplitude, directivity);
}

void transfer_row(const ElementGrid& elements, const Vec3& point, double k, Directivity directivity,
                  std::span<std::complex<double>> out) {
    if (active_isa() == Isa::Avx2) return avx2::transfer_row(elements, point, k, directivity, out);
    scalar::transfer_row(elements, point, k, directivity, out);
}

} // namespace acoustrap::kernels
