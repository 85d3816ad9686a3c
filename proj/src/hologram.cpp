#include "acoustrap/hologram.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>

#include "acoustrap/kernels.hpp"

namespace acoustrap {

namespace {

void require_above_plane(const TransducerArray& array, const Vec3& p, const char* what) {
    if (!p.finite()) throw GeometryError(std::string(what) + " is not finite");
    if (!(p.z > array.origin.z)) {
        throw GeometryError(std::string(what) + " " + to_string(p) + " must lie strictly above the array plane");
    }
}

PhaseHologram phases_for_targets(const TransducerArray& array, const kernels::TargetPoints& targets,
                                 const MediumConfig& medium) {
    const double k = kTwoPi / wavelength(medium, array);
    const auto grid = kernels::ElementGrid::from_array(array);
    std::vector<double> phases(array.size());
    kernels::focus_phases(grid, targets, k, phases);
    return PhaseHologram(array.rows, array.cols, std::move(phases));
}

} // namespace

double normalize_phase(double radians) {
    double m = std::fmod(radians, kTwoPi);
    if (m < 0.0) m += kTwoPi;
    if (m >= kTwoPi) m -= kTwoPi;
    return m;
}

double wrap_to_pi(double radians) {
    double m = normalize_phase(radians);
    if (m > std::numbers::pi) m -= kTwoPi;
    return m;
}

PhaseHologram::PhaseHologram(int rows, int cols, std::vector<double> phases)
    : rows_(rows), cols_(cols), phases_(std::move(phases)) {
    if (rows < 1 || cols < 1) throw ConfigError("hologram shape must be at least 1x1");
    if (phases_.size() != std::size_t(rows) * std::size_t(cols)) {
        std::ostringstream os;
        os << "hologram has " << phases_.size() << " phases, expected " << rows << "x" << cols;
        throw ConfigError(os.str());
    }
    for (double& p : phases_) {
        if (!std::isfinite(p)) throw ConfigError("hologram phase is not finite");
        if (p < 0.0 || p >= kTwoPi) p = normalize_phase(p);
    }
}

Vec3 trap_center(const TrapSpec& trap) {
    return std::visit([](const auto& t) -> Vec3 {
        if constexpr (std::is_same_v<std::decay_t<decltype(t)>, FocusTrap>) return t.point;
        else return t.center;
    }, trap);
}

std::string_view trap_kind(const TrapSpec& trap) {
    return std::holds_alternative<FocusTrap>(trap) ? "focus" : "octahedral";
}

double focus_phase(const Vec3& element, const Vec3& focal, double wavelength_mm) {
    if (!(wavelength_mm > 0.0)) throw ConfigError("wavelength must be > 0");
    const double d = distance(element, focal);
    if (d == 0.0) throw GeometryError("focal point coincides with element at " + to_string(element));
    // Literal form: 2 pi - mod(-k d, 2 pi); the 2 pi it yields at integer
    // wavelengths is folded to 0.
    const double m = std::fmod(-kTwoPi / wavelength_mm * d, kTwoPi);
    const double neg_mod = m < 0.0 ? m + kTwoPi : m;
    return normalize_phase(kTwoPi - neg_mod);
}

PhaseHologram make_focus_hologram(const TransducerArray& array, const Vec3& focal, const MediumConfig& medium) {
    validate(array);
    require_above_plane(array, focal, "focal point");
    kernels::TargetPoints targets;
    targets.x.assign(array.size(), focal.x);
    targets.y.assign(array.size(), focal.y);
    targets.z.assign(array.size(), focal.z);
    return phases_for_targets(array, targets, medium);
}

std::array<Vec3, 6> octahedron_vertexes(const Vec3& center, double diameter) {
    if (!(diameter > 0.0)) throw GeometryError("octahedron diameter must be > 0");
    const double r = diameter / 2.0;
    return {center + Vec3{r, 0, 0}, center - Vec3{r, 0, 0}, center + Vec3{0, r, 0},
            center - Vec3{0, r, 0}, center + Vec3{0, 0, r}, center - Vec3{0, 0, r}};
}

SmAssignment sm_assignment(const TransducerArray& array) {
    if (array.rows < 2 || array.cols < 3) {
        throw ConfigError("spatial multiplexing needs at least a 2x3 array");
    }
    SmAssignment sm{array.rows, array.cols, std::vector<std::uint8_t>(array.size())};
    for (int i = 0; i < array.rows; ++i)
        for (int j = 0; j < array.cols; ++j)
            sm.group[array.flat_index(i, j)] = static_cast<std::uint8_t>(3 * (i % 2) + (j % 3));
    return sm;
}

PhaseHologram make_multiplexed_hologram(const TransducerArray& array, std::span<const Vec3, 6> vertexes,
                                        const MediumConfig& medium) {
    validate(array);
    for (const Vec3& v : vertexes) require_above_plane(array, v, "octahedron vertex");
    const SmAssignment sm = sm_assignment(array);
    kernels::TargetPoints targets;
    targets.x.resize(array.size());
    targets.y.resize(array.size());
    targets.z.resize(array.size());
    for (std::size_t n = 0; n < array.size(); ++n) {
        const Vec3& v = vertexes[sm.group[n]];
        targets.x[n] = v.x;
        targets.y[n] = v.y;
        targets.z[n] = v.z;
    }
    return phases_for_targets(array, targets, medium);
}

PhaseHologram make_octahedral_hologram(const TransducerArray& array, const Vec3& center, double diameter,
                                       const MediumConfig& medium) {
    const auto vertexes = octahedron_vertexes(center, diameter);
    return make_multiplexed_hologram(array, vertexes, medium);
}

PhaseHologram make_trap_hologram(const TransducerArray& array, const TrapSpec& trap, const MediumConfig& medium) {
    if (const auto* f = std::get_if<FocusTrap>(&trap)) return make_focus_hologram(array, f->point, medium);
    const auto& o = std::get<OctahedralTrap>(trap);
    return make_octahedral_hologram(array, o.center, o.diameter, medium);
}

IbResult ib_baseline_hologram(const TransducerArray& array, std::span<const Vec3> targets, const MediumConfig& medium,
                              int iterations) {
    validate(array);
    if (targets.empty()) throw GeometryError("iterative backpropagation needs at least one target");
    if (iterations < 1) throw ConfigError("iterations must be >= 1");
    for (const Vec3& t : targets) require_above_plane(array, t, "target");

    const double k = kTwoPi / wavelength(medium, array);
    const double amp = array.emission_amplitude;
    const auto grid = kernels::ElementGrid::from_array(array);
    const std::size_t n = array.size();
    const std::size_t m = targets.size();

    // transfer[t * n + i]: element i -> target t.
    std::vector<std::complex<double>> transfer(m * n);
    for (std::size_t t = 0; t < m; ++t) {
        kernels::transfer_row(grid, targets[t], k, {}, std::span(transfer).subspan(t * n, n));
    }

    std::vector<std::complex<double>> source(n, std::complex<double>(amp, 0.0));
    std::vector<std::complex<double>> at_targets(m);
    std::vector<double> phases(n, 0.0);
    IbResult result{PhaseHologram(array.rows, array.cols), {}};
    result.cost.reserve(std::size_t(iterations));

    auto forward = [&] {
        for (std::size_t t = 0; t < m; ++t) {
            std::complex<double> acc{};
            const auto* row = transfer.data() + t * n;
            for (std::size_t i = 0; i < n; ++i) acc += row[i] * source[i];
            at_targets[t] = acc;
        }
    };

    forward();
    for (int it = 0; it < iterations; ++it) {
        // Target plane: keep the phase, impose unit amplitude.
        for (auto& p : at_targets) {
            const double mag = std::abs(p);
            p = mag > 0.0 ? p / mag : std::complex<double>(1.0, 0.0);
        }
        // Back to the elements through the conjugate transfer; keep only phase.
        for (std::size_t i = 0; i < n; ++i) {
            std::complex<double> acc{};
            for (std::size_t t = 0; t < m; ++t) acc += std::conj(transfer[t * n + i]) * at_targets[t];
            phases[i] = normalize_phase(std::arg(acc));
            source[i] = std::polar(amp, phases[i]);
        }
        forward();
        double total = 0.0;
        for (const auto& p : at_targets) total += std::abs(p);
        result.cost.push_back(-total);
    }
    result.hologram = PhaseHologram(array.rows, array.cols, std::move(phases));
    return result;
}

} // namespace acoustrap
