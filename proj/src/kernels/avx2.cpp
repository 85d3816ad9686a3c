// AVX2/FMA variants of the kernels in kernels.hpp. This translation unit is
// the only one compiled with -mavx2 -mfma; nothing here runs unless
// avx2::available() said yes.

#include "acoustrap/kernels.hpp"

#if defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

#include <cmath>

namespace acoustrap::kernels::avx2 {

namespace {

// Cephes sin/cos: Cody-Waite reduction by pi/4 in three parts, then degree-6
// minimax polynomials on [-pi/4, pi/4].
constexpr double kFourOverPi = 1.27323954473516268615;
constexpr double kDp1 = 7.85398125648498535156E-1;
constexpr double kDp2 = 3.77489470793079817668E-8;
constexpr double kDp3 = 2.69515142907905952645E-15;

constexpr double kSinCoef[6] = {1.58962301576546568060E-10, -2.50507477628578072866E-8,
                                2.75573136213857245213E-6,  -1.98412698295895385996E-4,
                                8.33333333332211858878E-3,  -1.66666666666666307295E-1};
constexpr double kCosCoef[6] = {-1.13585365213876817300E-11, 2.08757008419747316778E-9,
                                -2.75573141792967388112E-7, 2.48015872888517045348E-5,
                                -1.38888888888730564116E-3, 4.16666666666665929218E-2};

constexpr double kTwoPiHi = 6.28318530717958623200;
constexpr double kTwoPiLo = 2.44929359829470635445E-16;

struct SinCos {
    __m256d s;
    __m256d c;
};

inline __m256d polevl6(__m256d z, const double* coef) {
    __m256d r = _mm256_set1_pd(coef[0]);
    for (int i = 1; i < 6; ++i) r = _mm256_fmadd_pd(r, z, _mm256_set1_pd(coef[i]));
    return r;
}

inline __m256d mod_pd(__m256d v, double m) {
    // v - m * floor(v / m) for small non-negative integral-valued v
    return _mm256_fnmadd_pd(_mm256_set1_pd(m), _mm256_floor_pd(_mm256_mul_pd(v, _mm256_set1_pd(1.0 / m))), v);
}

inline SinCos sincos_pd(__m256d x) {
    const __m256d sign_bit = _mm256_set1_pd(-0.0);
    const __m256d ax = _mm256_andnot_pd(sign_bit, x);
    const __m256d sign_x = _mm256_and_pd(sign_bit, x);

    __m256d y = _mm256_floor_pd(_mm256_mul_pd(ax, _mm256_set1_pd(kFourOverPi)));
    __m256d j = mod_pd(y, 8.0);
    const __m256d odd = mod_pd(j, 2.0);
    j = _mm256_add_pd(j, odd);
    y = _mm256_add_pd(y, odd);
    j = mod_pd(j, 8.0);

    __m256d z = _mm256_fnmadd_pd(y, _mm256_set1_pd(kDp1), ax);
    z = _mm256_fnmadd_pd(y, _mm256_set1_pd(kDp2), z);
    z = _mm256_fnmadd_pd(y, _mm256_set1_pd(kDp3), z);
    const __m256d zz = _mm256_mul_pd(z, z);

    const __m256d ps = _mm256_fmadd_pd(_mm256_mul_pd(z, zz), polevl6(zz, kSinCoef), z);
    __m256d pc = _mm256_fnmadd_pd(_mm256_set1_pd(0.5), zz, _mm256_set1_pd(1.0));
    pc = _mm256_fmadd_pd(_mm256_mul_pd(zz, zz), polevl6(zz, kCosCoef), pc);

    const __m256d swap = _mm256_cmp_pd(mod_pd(j, 4.0), _mm256_set1_pd(2.0), _CMP_EQ_OQ);
    const __m256d big = _mm256_cmp_pd(j, _mm256_set1_pd(4.0), _CMP_GE_OQ);

    __m256d s = _mm256_blendv_pd(ps, pc, swap);
    __m256d c = _mm256_blendv_pd(pc, ps, swap);
    const __m256d big_sign = _mm256_and_pd(big, sign_bit);
    s = _mm256_xor_pd(s, _mm256_xor_pd(big_sign, sign_x));
    c = _mm256_xor_pd(c, _mm256_xor_pd(big_sign, _mm256_and_pd(swap, sign_bit)));
    return {s, c};
}

inline __m256d sinc_pd(__m256d a) {
    const __m256d tiny = _mm256_cmp_pd(_mm256_andnot_pd(_mm256_set1_pd(-0.0), a), _mm256_set1_pd(1e-8), _CMP_LT_OQ);
    const __m256d safe = _mm256_blendv_pd(a, _mm256_set1_pd(1.0), tiny);
    const __m256d q = _mm256_div_pd(sincos_pd(safe).s, safe);
    return _mm256_blendv_pd(q, _mm256_set1_pd(1.0), tiny);
}

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

inline double sinc_scalar(double a) { return std::abs(a) < 1e-8 ? 1.0 : std::sin(a) / a; }

} // namespace

bool available() { return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma"); }

void sincos(std::span<const double> x, std::span<double> s, std::span<double> c) {
    const std::size_t n = x.size();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const SinCos r = sincos_pd(_mm256_loadu_pd(x.data() + i));
        _mm256_storeu_pd(s.data() + i, r.s);
        _mm256_storeu_pd(c.data() + i, r.c);
    }
    for (; i < n; ++i) {
        s[i] = std::sin(x[i]);
        c[i] = std::cos(x[i]);
    }
}

void focus_phases(const ElementGrid& elements, const TargetPoints& targets, double k, std::span<double> out) {
    const std::size_t n = elements.size();
    const __m256d vk = _mm256_set1_pd(k);
    const __m256d vez = _mm256_set1_pd(elements.z);
    const __m256d inv_two_pi = _mm256_set1_pd(1.0 / kTwoPi);
    const __m256d two_pi_hi = _mm256_set1_pd(kTwoPiHi);
    const __m256d two_pi_lo = _mm256_set1_pd(kTwoPiLo);
    const __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d dx = _mm256_sub_pd(_mm256_loadu_pd(targets.x.data() + i), _mm256_loadu_pd(elements.x.data() + i));
        const __m256d dy = _mm256_sub_pd(_mm256_loadu_pd(targets.y.data() + i), _mm256_loadu_pd(elements.y.data() + i));
        const __m256d dz = _mm256_sub_pd(_mm256_loadu_pd(targets.z.data() + i), vez);
        const __m256d d2 = _mm256_fmadd_pd(dx, dx, _mm256_fmadd_pd(dy, dy, _mm256_mul_pd(dz, dz)));
        const __m256d x = _mm256_mul_pd(vk, _mm256_sqrt_pd(d2));
        const __m256d q = _mm256_floor_pd(_mm256_mul_pd(x, inv_two_pi));
        __m256d m = _mm256_fnmadd_pd(q, two_pi_hi, x);
        m = _mm256_fnmadd_pd(q, two_pi_lo, m);
        m = _mm256_add_pd(m, _mm256_and_pd(_mm256_cmp_pd(m, zero, _CMP_LT_OQ), two_pi_hi));
        m = _mm256_sub_pd(m, _mm256_and_pd(_mm256_cmp_pd(m, two_pi_hi, _CMP_GE_OQ), two_pi_hi));
        _mm256_storeu_pd(out.data() + i, m);
    }
    for (; i < n; ++i) {
        const double dx = targets.x[i] - elements.x[i];
        const double dy = targets.y[i] - elements.y[i];
        const double dz = targets.z[i] - elements.z;
        double m = std::fmod(k * std::sqrt(dx * dx + dy * dy + dz * dz), kTwoPi);
        if (m >= kTwoPi) m -= kTwoPi;
        out[i] = m;
    }
}

std::complex<double> pressure_sum(const ElementGrid& elements, std::span<const double> phases, const Vec3& point,
                                  double k, double amplitude, Directivity directivity) {
    const std::size_t n = elements.size();
    const double dz_s = point.z - elements.z;
    const __m256d px = _mm256_set1_pd(point.x);
    const __m256d py = _mm256_set1_pd(point.y);
    const __m256d dz2 = _mm256_set1_pd(dz_s * dz_s);
    const __m256d vk = _mm256_set1_pd(k);
    const __m256d vamp = _mm256_set1_pd(amplitude);
    const __m256d hk = _mm256_set1_pd(directivity.half_width_k);
    const bool piston = directivity.half_width_k != 0.0;
    __m256d re = _mm256_setzero_pd();
    __m256d im = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d dx = _mm256_sub_pd(px, _mm256_loadu_pd(elements.x.data() + i));
        const __m256d dy = _mm256_sub_pd(py, _mm256_loadu_pd(elements.y.data() + i));
        const __m256d d = _mm256_sqrt_pd(_mm256_fmadd_pd(dx, dx, _mm256_fmadd_pd(dy, dy, dz2)));
        const __m256d inv_d = _mm256_div_pd(_mm256_set1_pd(1.0), d);
        __m256d a = _mm256_mul_pd(vamp, inv_d);
        if (piston) {
            const __m256d wx = sinc_pd(_mm256_mul_pd(hk, _mm256_mul_pd(dx, inv_d)));
            const __m256d wy = sinc_pd(_mm256_mul_pd(hk, _mm256_mul_pd(dy, inv_d)));
            a = _mm256_mul_pd(a, _mm256_mul_pd(wx, wy));
        }
        const __m256d arg = _mm256_fnmadd_pd(vk, d, _mm256_loadu_pd(phases.data() + i));
        const SinCos sc = sincos_pd(arg);
        re = _mm256_fmadd_pd(a, sc.c, re);
        im = _mm256_fmadd_pd(a, sc.s, im);
    }
    double re_s = hsum(re);
    double im_s = hsum(im);
    for (; i < n; ++i) {
        const double dx = point.x - elements.x[i];
        const double dy = point.y - elements.y[i];
        const double d = std::sqrt(dx * dx + dy * dy + dz_s * dz_s);
        double a = amplitude / d;
        if (piston) a *= sinc_scalar(directivity.half_width_k * dx / d) * sinc_scalar(directivity.half_width_k * dy / d);
        const double arg = phases[i] - k * d;
        re_s += a * std::cos(arg);
        im_s += a * std::sin(arg);
    }
    return {re_s, im_s};
}

void transfer_row(const ElementGrid& elements, const Vec3& point, double k, Directivity directivity,
                  std::span<std::complex<double>> out) {
    const std::size_t n = elements.size();
    const double dz_s = point.z - elements.z;
    const __m256d px = _mm256_set1_pd(point.x);
    const __m256d py = _mm256_set1_pd(point.y);
    const __m256d dz2 = _mm256_set1_pd(dz_s * dz_s);
    const __m256d vk = _mm256_set1_pd(k);
    const __m256d hk = _mm256_set1_pd(directivity.half_width_k);
    const bool piston = directivity.half_width_k != 0.0;
    alignas(32) double re[4];
    alignas(32) double im[4];
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d dx = _mm256_sub_pd(px, _mm256_loadu_pd(elements.x.data() + i));
        const __m256d dy = _mm256_sub_pd(py, _mm256_loadu_pd(elements.y.data() + i));
        const __m256d d = _mm256_sqrt_pd(_mm256_fmadd_pd(dx, dx, _mm256_fmadd_pd(dy, dy, dz2)));
        __m256d a = _mm256_div_pd(_mm256_set1_pd(1.0), d);
        if (piston) {
            const __m256d wx = sinc_pd(_mm256_mul_pd(hk, _mm256_mul_pd(dx, a)));
            const __m256d wy = sinc_pd(_mm256_mul_pd(hk, _mm256_mul_pd(dy, a)));
            a = _mm256_mul_pd(a, _mm256_mul_pd(wx, wy));
        }
        const SinCos sc = sincos_pd(_mm256_mul_pd(vk, d));
        _mm256_store_pd(re, _mm256_mul_pd(a, sc.c));
        _mm256_store_pd(im, _mm256_sub_pd(_mm256_setzero_pd(), _mm256_mul_pd(a, sc.s)));
        for (int l = 0; l < 4; ++l) out[i + l] = {re[l], im[l]};
    }
    for (; i < n; ++i) {
        const double dx = point.x - elements.x[i];
        const double dy = point.y - elements.y[i];
        const double d = std::sqrt(dx * dx + dy * dy + dz_s * dz_s);
        double a = 1.0 / d;
        if (piston) a *= sinc_scalar(directivity.half_width_k * dx / d) * sinc_scalar(directivity.half_width_k * dy / d);
        out[i] = {a * std::cos(k * d), -a * std::sin(k * d)};
    }
}

} // namespace acoustrap::kernels::avx2

#else // no AVX2 in this build

namespace acoustrap::kernels::avx2 {

bool available() { return false; }

void sincos(std::span<const double>, std::span<double>, std::span<double>) {
    throw ConfigError("AVX2 kernels are not compiled into this build");
}
void focus_phases(const ElementGrid&, const TargetPoints&, double, std::span<double>) {
    throw ConfigError("AVX2 kernels are not compiled into this build");
}
std::complex<double> pressure_sum(const ElementGrid&, std::span<const double>, const Vec3&, double, double,
                                  Directivity) {
    throw ConfigError("AVX2 kernels are not compiled into this build");
}
void transfer_row(const ElementGrid&, const Vec3&, double, Directivity, std::span<std::complex<double>>) {
    throw ConfigError("AVX2 kernels are not compiled into this build");
}

} // namespace acoustrap::kernels::avx2

#endif
