#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "fpcav/matrix2.hpp"

namespace fpcav::kernels {

// One step of a layered structure: enter a layer through a wavelength-independent
// interface matrix, then propagate a distance through it.
struct StackStep {
    TransferMatrix entry;
    double n_re = 1.0;
    double n_im = 0.0;
    double thickness = 0.0;
};

// M(lambda) = exit * P_k * entry_k * ... * P_1 * entry_1
struct StackProgram {
    std::vector<StackStep> steps;
    TransferMatrix exit;
};

enum class Backend { Scalar, Avx2 };

std::string_view backend_name(Backend b);

// Backend chosen at startup from CPU features, unless overridden.
Backend active_backend();
bool backend_available(Backend b);

// Forces a backend (throws if unavailable). Used by equivalence tests and benchmarks.
void force_backend(Backend b);
void reset_backend();

class ScopedBackend {
public:
    explicit ScopedBackend(Backend b) : previous_(active_backend()) { force_backend(b); }
    ~ScopedBackend() { force_backend(previous_); }
    ScopedBackend(const ScopedBackend&) = delete;
    ScopedBackend& operator=(const ScopedBackend&) = delete;

private:
    Backend previous_;
};

// Evaluates the program at each wavelength. out.size() must equal wavelengths.size().
void evaluate_stack(const StackProgram& program, std::span<const double> wavelengths,
                    std::span<TransferMatrix> out);

void evaluate_stack_scalar(const StackProgram& program, std::span<const double> wavelengths,
                           std::span<TransferMatrix> out);

// Only defined when the AVX2 translation unit is built; call through evaluate_stack.
void evaluate_stack_avx2(const StackProgram& program, std::span<const double> wavelengths,
                         std::span<TransferMatrix> out);

}  // namespace fpcav::kernels
