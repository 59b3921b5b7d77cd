#include <atomic>
#include <cstdlib>
#include <string>

#include "fpcav/kernels/stack_kernel.hpp"

namespace fpcav::kernels {
namespace {

bool cpu_has_avx2() {
#if defined(FPCAV_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

Backend detect() {
    // FPCAV_KERNEL=scalar pins the reference path (useful when bisecting numerics).
    if (const char* env = std::getenv("FPCAV_KERNEL"); env && std::string(env) == "scalar") return Backend::Scalar;
    return cpu_has_avx2() ? Backend::Avx2 : Backend::Scalar;
}

std::atomic<Backend>& current() {
    static std::atomic<Backend> backend{detect()};
    return backend;
}

}  // namespace

std::string_view backend_name(Backend b) {
    return b == Backend::Avx2 ? "avx2" : "scalar";
}

bool backend_available(Backend b) {
    return b == Backend::Scalar || cpu_has_avx2();
}

Backend active_backend() { return current().load(std::memory_order_relaxed); }

void force_backend(Backend b) {
    if (!backend_available(b)) throw Error("kernel backend '" + std::string(backend_name(b)) + "' is not available");
    current().store(b, std::memory_order_relaxed);
}

void reset_backend() { current().store(detect(), std::memory_order_relaxed); }

void evaluate_stack(const StackProgram& program, std::span<const double> wavelengths,
                    std::span<TransferMatrix> out) {
    if (out.size() != wavelengths.size()) throw Error("evaluate_stack: output size mismatch");
    if (wavelengths.empty()) return;
#if defined(FPCAV_HAVE_AVX2)
    if (active_backend() == Backend::Avx2) {
        evaluate_stack_avx2(program, wavelengths, out);
        return;
    }
#endif
    evaluate_stack_scalar(program, wavelengths, out);
}

}  // namespace fpcav::kernels
