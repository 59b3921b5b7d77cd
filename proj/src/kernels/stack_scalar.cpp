#include <cmath>

#include "fpcav/kernels/stack_kernel.hpp"

namespace fpcav::kernels {
namespace {

// Plain re/im arithmetic so the operation order mirrors the vector kernel.
struct C {
    double re, im;
};

inline C mul(C a, C b) { return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re}; }
inline C add(C a, C b) { return {a.re + b.re, a.im + b.im}; }
inline C from(Complex z) { return {z.real(), z.imag()}; }

struct M2 {
    C a, b, c, d;
};

inline M2 left_multiply(const TransferMatrix& e, const M2& m) {
    const C e11 = from(e.m11), e12 = from(e.m12), e21 = from(e.m21), e22 = from(e.m22);
    return {add(mul(e11, m.a), mul(e12, m.c)), add(mul(e11, m.b), mul(e12, m.d)),
            add(mul(e21, m.a), mul(e22, m.c)), add(mul(e21, m.b), mul(e22, m.d))};
}

}  // namespace

void evaluate_stack_scalar(const StackProgram& program, std::span<const double> wavelengths,
                           std::span<TransferMatrix> out) {
    const double two_pi = 2.0 * kPi;
    for (size_t w = 0; w < wavelengths.size(); ++w) {
        const double inv_lambda = 1.0 / wavelengths[w];
        M2 m{{1.0, 0.0}, {0.0, 0.0}, {0.0, 0.0}, {1.0, 0.0}};
        for (const auto& step : program.steps) {
            m = left_multiply(step.entry, m);
            const double theta = two_pi * step.n_re * step.thickness * inv_lambda;
            const double att = two_pi * step.n_im * step.thickness * inv_lambda;
            const double s = std::sin(theta);
            const double c = std::cos(theta);
            const double g_fwd = std::exp(-att);
            const double g_bwd = std::exp(att);
            const C p_fwd{g_fwd * c, g_fwd * s};
            const C p_bwd{g_bwd * c, -(g_bwd * s)};
            m.a = mul(p_fwd, m.a);
            m.b = mul(p_fwd, m.b);
            m.c = mul(p_bwd, m.c);
            m.d = mul(p_bwd, m.d);
        }
        m = left_multiply(program.exit, m);
        out[w] = TransferMatrix{Complex(m.a.re, m.a.im), Complex(m.b.re, m.b.im), Complex(m.c.re, m.c.im),
                                Complex(m.d.re, m.d.im)};
    }
}

}  // namespace fpcav::kernels
