#include <cmath>

#include "acoustrap/kernels.hpp"

namespace acoustrap::kernels::scalar {

namespace {

double directivity_weight(double dx, double dy, double d, Directivity dir) {
    if (dir.half_width_k == 0.0) return 1.0;
    auto sinc = [](double a) { return std::abs(a) < 1e-8 ? 1.0 : std::sin(a) / a; };
    return sinc(dir.half_width_k * dx / d) * sinc(dir.half_width_k * dy / d);
}

} // namespace

void focus_phases(const ElementGrid& elements, const TargetPoints& targets, double k, std::span<double> out) {
    const std::size_t n = elements.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = targets.x[i] - elements.x[i];
        const double dy = targets.y[i] - elements.y[i];
        const double dz = targets.z[i] - elements.z;
        const double d = std::sqrt(dx * dx + dy * dy + dz * dz);
        double m = std::fmod(k * d, kTwoPi);
        if (m >= kTwoPi) m -= kTwoPi;
        out[i] = m;
    }
}

std::complex<double> pressure_sum(const ElementGrid& elements, std::span<const double> phases, const Vec3& point,
                                  double k, double amplitude, Directivity directivity) {
    double re = 0.0;
    double im = 0.0;
    const double dz = point.z - elements.z;
    const std::size_t n = elements.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = point.x - elements.x[i];
        const double dy = point.y - elements.y[i];
        const double d = std::sqrt(dx * dx + dy * dy + dz * dz);
        const double a = amplitude * directivity_weight(dx, dy, d, directivity) / d;
        const double arg = phases[i] - k * d;
        re += a * std::cos(arg);
        im += a * std::sin(arg);
    }
    return {re, im};
}

void transfer_row(const ElementGrid& elements, const Vec3& point, double k, Directivity directivity,
                  std::span<std::complex<double>> out) {
    const double dz = point.z - elements.z;
    const std::size_t n = elements.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = point.x - elements.x[i];
        const double dy = point.y - elements.y[i];
        const double d = std::sqrt(dx * dx + dy * dy + dz * dz);
        const double a = directivity_weight(dx, dy, d, directivity) / d;
        out[i] = {a * std::cos(k * d), -a * std::sin(k * d)};
    }
}

void sincos(std::span<const double> x, std::span<double> s, std::span<double> c) {
    for (std::size_t i = 0; i < x.size(); ++i) {
        s[i] = std::sin(x[i]);
        c[i] = std::cos(x[i]);
    }
}

} // namespace acoustrap::kernels::scalar
