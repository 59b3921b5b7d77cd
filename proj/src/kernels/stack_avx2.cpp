// Compiled with -mavx2 -mfma. Four wavelengths per lane group.
#include <immintrin.h>

#include <array>
#include <cmath>

#include "fpcav/kernels/stack_kernel.hpp"

namespace fpcav::kernels {
namespace {

// Cephes-derived sin/cos. Arguments here are phase thicknesses, well below 2^30.
constexpr double kDP1 = 7.85398125648498535156E-1;
constexpr double kDP2 = 3.77489470793079817668E-8;
constexpr double kDP3 = 2.69515142907905952645E-15;
constexpr double kFourOverPi = 1.27323954473516268615;

constexpr std::array<double, 6> kSinCof = {1.58962301576546568060E-10, -2.50507477628578072866E-8,
                                           2.75573136213857245213E-6,  -1.98412698295895385996E-4,
                                           8.33333333332211858878E-3,  -1.66666666666666307295E-1};
constexpr std::array<double, 6> kCosCof = {-1.13585365213876817300E-11, 2.08757008419747316778E-9,
                                           -2.75573141792967388112E-7,  2.48015872888517045348E-5,
                                           -1.38888888888730564116E-3,  4.16666666666665929218E-2};

template <size_t N>
inline __m256d polevl(__m256d x, const std::array<double, N>& c) {
    __m256d acc = _mm256_set1_pd(c[0]);
    for (size_t i = 1; i < N; ++i) acc = _mm256_fmadd_pd(acc, x, _mm256_set1_pd(c[i]));
    return acc;
}

inline void sincos4(__m256d x, __m256d& s, __m256d& c) {
    const __m256d sign_mask = _mm256_set1_pd(-0.0);
    const __m256d sign_x = _mm256_and_pd(x, sign_mask);
    x = _mm256_andnot_pd(sign_mask, x);

    __m256d y = _mm256_round_pd(_mm256_mul_pd(x, _mm256_set1_pd(kFourOverPi)),
                                _MM_FROUND_TO_NEG_INF | _MM_FROUND_NO_EXC);
    __m128i j = _mm256_cvttpd_epi32(y);
    j = _mm_and_si128(_mm_add_epi32(j, _mm_set1_epi32(1)), _mm_set1_epi32(~1));
    y = _mm256_cvtepi32_pd(j);
    const __m256i j64 = _mm256_cvtepi32_epi64(j);

    __m256d z = _mm256_fnmadd_pd(y, _mm256_set1_pd(kDP1), x);
    z = _mm256_fnmadd_pd(y, _mm256_set1_pd(kDP2), z);
    z = _mm256_fnmadd_pd(y, _mm256_set1_pd(kDP3), z);
    const __m256d zz = _mm256_mul_pd(z, z);

    __m256d yc = _mm256_mul_pd(_mm256_mul_pd(zz, zz), polevl(zz, kCosCof));
    yc = _mm256_fnmadd_pd(_mm256_set1_pd(0.5), zz, yc);
    yc = _mm256_add_pd(yc, _mm256_set1_pd(1.0));
    const __m256d ys = _mm256_fmadd_pd(_mm256_mul_pd(z, zz), polevl(zz, kSinCof), z);

    const __m256i two = _mm256_set1_epi64x(2);
    const __m256i four = _mm256_set1_epi64x(4);
    const __m256d swap = _mm256_castsi256_pd(_mm256_cmpeq_epi64(_mm256_and_si256(j64, two), two));
    const __m256i flip_s = _mm256_slli_epi64(_mm256_srli_epi64(_mm256_and_si256(j64, four), 2), 63);
    const __m256i flip_c =
        _mm256_slli_epi64(_mm256_srli_epi64(_mm256_and_si256(_mm256_add_epi64(j64, two), four), 2), 63);

    s = _mm256_blendv_pd(ys, yc, swap);
    c = _mm256_blendv_pd(yc, ys, swap);
    s = _mm256_xor_pd(s, _mm256_xor_pd(sign_x, _mm256_castsi256_pd(flip_s)));
    c = _mm256_xor_pd(c, _mm256_castsi256_pd(flip_c));
}

constexpr std::array<double, 3> kExpP = {1.26177193074810590878E-4, 3.02994407707441961300E-2,
                                         9.99999999999999999910E-1};
constexpr std::array<double, 4> kExpQ = {3.00198505138664455042E-6, 2.52448340349684104192E-3,
                                         2.27265548208155028766E-1, 2.00000000000000000009E0};
constexpr double kExpC1 = 6.93145751953125E-1;
constexpr double kExpC2 = 1.42860682030941723212E-6;
constexpr double kLog2e = 1.4426950408889634073599;

// Valid for |x| < 700; attenuation exponents in a coating are tiny.
inline __m256d exp4(__m256d x) {
    __m256d n = _mm256_round_pd(_mm256_fmadd_pd(x, _mm256_set1_pd(kLog2e), _mm256_set1_pd(0.5)),
                                _MM_FROUND_TO_NEG_INF | _MM_FROUND_NO_EXC);
    x = _mm256_fnmadd_pd(n, _mm256_set1_pd(kExpC1), x);
    x = _mm256_fnmadd_pd(n, _mm256_set1_pd(kExpC2), x);
    const __m256d xx = _mm256_mul_pd(x, x);
    const __m256d px = _mm256_mul_pd(x, polevl(xx, kExpP));
    __m256d r = _mm256_div_pd(px, _mm256_sub_pd(polevl(xx, kExpQ), px));
    r = _mm256_fmadd_pd(_mm256_set1_pd(2.0), r, _mm256_set1_pd(1.0));
    const __m256i e = _mm256_slli_epi64(
        _mm256_add_epi64(_mm256_cvtepi32_epi64(_mm256_cvtpd_epi32(n)), _mm256_set1_epi64x(1023)), 52);
    return _mm256_mul_pd(r, _mm256_castsi256_pd(e));
}

struct CV {
    __m256d re, im;
};

inline CV cmul(CV a, CV b) {
    return {_mm256_fmsub_pd(a.re, b.re, _mm256_mul_pd(a.im, b.im)),
            _mm256_fmadd_pd(a.re, b.im, _mm256_mul_pd(a.im, b.re))};
}

// Broadcast scalar times vector, plus a second product.
inline CV cmul_add(Complex e1, CV x1, Complex e2, CV x2) {
    const __m256d e1r = _mm256_set1_pd(e1.real()), e1i = _mm256_set1_pd(e1.imag());
    const __m256d e2r = _mm256_set1_pd(e2.real()), e2i = _mm256_set1_pd(e2.imag());
    __m256d re = _mm256_mul_pd(e1r, x1.re);
    re = _mm256_fnmadd_pd(e1i, x1.im, re);
    re = _mm256_fmadd_pd(e2r, x2.re, re);
    re = _mm256_fnmadd_pd(e2i, x2.im, re);
    __m256d im = _mm256_mul_pd(e1r, x1.im);
    im = _mm256_fmadd_pd(e1i, x1.re, im);
    im = _mm256_fmadd_pd(e2r, x2.im, im);
    im = _mm256_fmadd_pd(e2i, x2.re, im);
    return {re, im};
}

struct MV {
    CV a, b, c, d;
};

inline MV left_multiply(const TransferMatrix& e, const MV& m) {
    return {cmul_add(e.m11, m.a, e.m12, m.c), cmul_add(e.m11, m.b, e.m12, m.d),
            cmul_add(e.m21, m.a, e.m22, m.c), cmul_add(e.m21, m.b, e.m22, m.d)};
}

}  // namespace

void evaluate_stack_avx2(const StackProgram& program, std::span<const double> wavelengths,
                         std::span<TransferMatrix> out) {
    const size_t n = wavelengths.size();
    const __m256d two_pi = _mm256_set1_pd(2.0 * kPi);
    const __m256d zero = _mm256_setzero_pd();
    const __m256d one = _mm256_set1_pd(1.0);
    for (size_t base = 0; base < n; base += 4) {
        // Pad the tail with the last wavelength so every lane runs the same code.
        alignas(32) double lam[4];
        for (size_t k = 0; k < 4; ++k) lam[k] = wavelengths[std::min(base + k, n - 1)];
        const __m256d inv_lambda = _mm256_div_pd(one, _mm256_load_pd(lam));

        MV m{{one, zero}, {zero, zero}, {zero, zero}, {one, zero}};
        for (const auto& step : program.steps) {
            m = left_multiply(step.entry, m);
            const __m256d theta =
                _mm256_mul_pd(_mm256_mul_pd(two_pi, _mm256_set1_pd(step.n_re * step.thickness)), inv_lambda);
            __m256d s, c;
            sincos4(theta, s, c);
            CV p_fwd{c, s};
            CV p_bwd{c, _mm256_xor_pd(s, _mm256_set1_pd(-0.0))};
            if (step.n_im != 0.0) {
                const __m256d att =
                    _mm256_mul_pd(_mm256_mul_pd(two_pi, _mm256_set1_pd(step.n_im * step.thickness)), inv_lambda);
                const __m256d g_fwd = exp4(_mm256_xor_pd(att, _mm256_set1_pd(-0.0)));
                const __m256d g_bwd = exp4(att);
                p_fwd = {_mm256_mul_pd(g_fwd, p_fwd.re), _mm256_mul_pd(g_fwd, p_fwd.im)};
                p_bwd = {_mm256_mul_pd(g_bwd, p_bwd.re), _mm256_mul_pd(g_bwd, p_bwd.im)};
            }
            m.a = cmul(p_fwd, m.a);
            m.b = cmul(p_fwd, m.b);
            m.c = cmul(p_bwd, m.c);
            m.d = cmul(p_bwd, m.d);
        }
        m = left_multiply(program.exit, m);

        alignas(32) double buf[8][4];
        _mm256_store_pd(buf[0], m.a.re);
        _mm256_store_pd(buf[1], m.a.im);
        _mm256_store_pd(buf[2], m.b.re);
        _mm256_store_pd(buf[3], m.b.im);
        _mm256_store_pd(buf[4], m.c.re);
        _mm256_store_pd(buf[5], m.c.im);
        _mm256_store_pd(buf[6], m.d.re);
        _mm256_store_pd(buf[7], m.d.im);
        for (size_t k = 0; k < 4 && base + k < n; ++k)
            out[base + k] = TransferMatrix{Complex(buf[0][k], buf[1][k]), Complex(buf[2][k], buf[3][k]),
                                           Complex(buf[4][k], buf[5][k]), Complex(buf[6][k], buf[7][k])};
    }
}

}  // namespace fpcav::kernels
