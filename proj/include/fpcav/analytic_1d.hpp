#pragma once

#include <vector>

#include "fpcav/core.hpp"
#include "fpcav/media.hpp"

namespace fpcav {

struct Membrane1DParams {
    double length = 22e-6;
    double membrane_thickness = 10.5e-6;
    double membrane_index = 2.417;
    int m = 1;

    void validate() const;
    double optical_length() const { return length + (membrane_index - 1.0) * membrane_thickness; }
};

struct ModeLadder {
    double diamond;  // c / (2 n_d t_d)
    double air;      // c / (2 (L - t_d))
    double average;  // c / (2 (L + (n_d - 1) t_d))
};

enum class ModeType { AirLike, DiamondLike, Mixed };

const char* to_string(ModeType t);

// (1 + n) sin(k L_opt) - (1 - n) sin(k (L - (n + 1) t)) with k = 2 pi nu / c.
double resonance_residual(const Membrane1DParams& p, double frequency);

// All roots of the perfect-mirror resonance condition inside [lo, hi].
std::vector<double> exact_resonances(const Membrane1DParams& p, double lo, double hi);

// Large-m approximation using p.m.
double approx_resonance(const Membrane1DParams& p);

// Index m such that the approximation lands nearest to the frequency.
int nearest_approx_index(const Membrane1DParams& p, double frequency);

ModeLadder uncoupled_ladders(const Membrane1DParams& p);

// Character expected for purely air-like / diamond-like standing waves, and the
// classification of a computed character between those extremes.
double air_like_character(const Membrane1DParams& p);
double diamond_like_character(const Membrane1DParams& p);
ModeType classify_mode(double character, const Membrane1DParams& p);

// Finesse of the membrane cavity relative to pi/T for lossless mirrors.
// High-index termination uses the closed forms; low-index termination is evaluated
// with the transfer-matrix model and cached.
double lossless_termination_factor(double n_d, Termination termination, ModeType mode_type);

}  // namespace fpcav
