#pragma once

// Shared domain types for the acoustic trapping simulator.
//
// Units: millimeters and seconds everywhere inside the library. Particle
// diameters are carried in micrometers because that is how they are quoted
// at the I/O boundary; convert with um_to_mm() before mixing with positions.
//
// Frame {C_T}: origin at the array corner, z up, the array aperture in z = 0.

#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>

namespace acoustrap {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline constexpr double um_to_mm(double um) { return um * 1e-3; }
inline constexpr double mm_to_um(double mm) { return mm * 1e3; }

// ---------------------------------------------------------------------------
// Errors. The CLI maps each class to its own exit code.

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class GeometryError : public Error {
public:
    using Error::Error;
};

class IndexError : public Error {
public:
    using Error::Error;
};

/// Field point too close to an element center for the 1/d kernel.
class SingularityError : public GeometryError {
public:
    using GeometryError::GeometryError;
};

class CalibrationError : public Error {
public:
    using Error::Error;
};

class DetectionError : public Error {
public:
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Warnings go through a replaceable sink (stderr by default).

using WarningSink = std::function<void(std::string_view)>;

void warn(std::string_view message);
/// Installs a new sink and returns the previous one.
WarningSink set_warning_sink(WarningSink sink);

// ---------------------------------------------------------------------------

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    constexpr Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
    constexpr Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
    constexpr Vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }

    friend constexpr Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
    friend constexpr Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
    friend constexpr Vec3 operator*(Vec3 a, double s) { return a *= s; }
    friend constexpr Vec3 operator*(double s, Vec3 a) { return a *= s; }
    friend constexpr Vec3 operator/(Vec3 a, double s) { return Vec3{a.x / s, a.y / s, a.z / s}; }
    friend constexpr Vec3 operator-(const Vec3& a) { return Vec3{-a.x, -a.y, -a.z}; }
    friend constexpr bool operator==(const Vec3&, const Vec3&) = default;

    constexpr double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    double norm() const { return std::sqrt(dot(*this)); }
    bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

inline double distance(const Vec3& a, const Vec3& b) { return (a - b).norm(); }

/// Image coordinates; u to the right, v down, pixel centers at integers.
struct Pixel {
    double u = 0.0;
    double v = 0.0;

    friend constexpr bool operator==(const Pixel&, const Pixel&) = default;
};

std::string to_string(const Vec3& v);

/// Parses "x,y,z" (as used on the command line).
Vec3 parse_vec3(std::string_view text);

struct MediumConfig {
    double sound_speed = 1500.0; // m/s
    double density = 1000.0;     // kg/m^3
};

struct TransducerArray {
    int rows = 50;
    int cols = 50;
    double pitch = 1.0;         // mm
    double frequency = 2.3e6;   // Hz
    Vec3 origin{};              // corner of the aperture
    double emission_amplitude = 1.0;

    std::size_t size() const { return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols); }
    std::size_t flat_index(int i, int j) const {
        return static_cast<std::size_t>(i) * static_cast<std::size_t>(cols) + static_cast<std::size_t>(j);
    }
};

struct TimingConfig {
    double t_dip = 0.060;        // image processing
    double t_trans = 0.090;      // phase calculation + transmission + field build-up
    double camera_fps = 15.0;
    double poh_update_fps = 11.0;
    double can_baud = 500e3;     // bit/s, bus feeding the array controller

    double frame_interval() const { return 1.0 / camera_fps; }
    double horizon() const { return t_dip + t_trans; }
};

enum class Contrast { Positive, Negative };

std::string_view to_string(Contrast c);
Contrast parse_contrast(std::string_view text);

struct ParticleState {
    Vec3 position{};        // mm, {C_T}
    Vec3 velocity{};        // mm/s
    double diameter_um = 400.0;
    Contrast contrast = Contrast::Positive;
};

struct WorkspaceConfig {
    Vec3 center{19.0, 23.5, 36.0};
    Vec3 extent{37.0, 30.0, 30.0};

    Vec3 min_corner() const { return center - extent * 0.5; }
    Vec3 max_corner() const { return center + extent * 0.5; }
    bool contains(const Vec3& p) const;
};

/// Water tank; the array sits centered under it.
struct TankConfig {
    Vec3 center{25.0, 25.0, 30.0};
    Vec3 extent{110.0, 110.0, 60.0};

    Vec3 min_corner() const { return center - extent * 0.5; }
    Vec3 max_corner() const { return center + extent * 0.5; }
    bool contains(const Vec3& p) const;
};

// ---------------------------------------------------------------------------

/// Wavelength in mm. Throws ConfigError for non-positive speed or frequency.
double wavelength(const MediumConfig& medium, const TransducerArray& array);

/// Center of element (i, j); row index i runs along x, column index j along y.
Vec3 element_center(const TransducerArray& array, int i, int j);

void validate(const MediumConfig& medium);
void validate(const TransducerArray& array);
void validate(const TimingConfig& timing);
void validate(const WorkspaceConfig& workspace, const TankConfig& tank);

} // namespace acoustrap
