#include "fpcav/analytic_1d.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <tuple>

#include "fpcav/numerics.hpp"
#include "fpcav/transfer_matrix.hpp"

namespace fpcav {

void Membrane1DParams::validate() const {
    if (!(length > 0.0)) throw InvalidConfigError("L must be positive");
    if (membrane_thickness < 0.0 || membrane_thickness > length)
        throw InvalidConfigError("invariant violated: 0 <= t_d <= L");
    if (membrane_index < 1.0) throw InvalidConfigError("n_d must be >= 1");
}

const char* to_string(ModeType t) {
    switch (t) {
        case ModeType::AirLike: return "air-like";
        case ModeType::DiamondLike: return "diamond-like";
        case ModeType::Mixed: return "mixed";
    }
    return "?";
}

double resonance_residual(const Membrane1DParams& p, double nu) {
    const double k = 2.0 * kPi * nu / kSpeedOfLight;
    const double n = p.membrane_index;
    return (1.0 + n) * std::sin(k * p.optical_length()) -
           (1.0 - n) * std::sin(k * (p.length - p.membrane_thickness * (n + 1.0)));
}

std::vector<double> exact_resonances(const Membrane1DParams& p, double lo, double hi) {
    p.validate();
    std::vector<double> roots;
    if (!(hi > lo)) return roots;
    const double fsr = kSpeedOfLight / (2.0 * p.optical_length());
    // Degenerate membranes collapse to the bare cavity: roots are exact multiples.
    if (p.membrane_thickness == 0.0 || p.membrane_index == 1.0) {
        const double f = kSpeedOfLight / (2.0 * p.length);
        for (long m = std::max(1L, static_cast<long>(std::ceil(lo / f))); m * f <= hi; ++m) roots.push_back(m * f);
        return roots;
    }
    const int n = std::max(8, static_cast<int>(std::ceil((hi - lo) / fsr * 8.0)));
    auto f = [&](double nu) { return resonance_residual(p, nu); };
    double x0 = lo, f0 = f(lo);
    if (f0 == 0.0) roots.push_back(lo);
    for (int i = 1; i <= n; ++i) {
        const double x1 = lo + (hi - lo) * i / n;
        const double f1 = f(x1);
        if (f1 == 0.0) {
            roots.push_back(x1);
        } else if (f0 != 0.0 && (f0 > 0.0) != (f1 > 0.0)) {
            roots.push_back(numerics::find_root(f, x0, x1, f0, f1, 1e-15));
        }
        x0 = x1;
        f0 = f1;
    }
    return roots;
}

double approx_resonance(const Membrane1DParams& p) {
    const double n = p.membrane_index;
    const double Lopt = p.optical_length();
    const double sign = (p.m % 2 == 0) ? 1.0 : -1.0;
    const double arg = (n - 1.0) / (n + 1.0) *
                       std::sin(p.m * kPi * (p.length - (n + 1.0) * p.membrane_thickness) / Lopt);
    return kSpeedOfLight / (2.0 * kPi * Lopt) * (kPi * p.m - sign * std::asin(arg));
}

int nearest_approx_index(const Membrane1DParams& p, double nu) {
    const double fsr = kSpeedOfLight / (2.0 * p.optical_length());
    const int guess = static_cast<int>(std::lround(nu / fsr));
    int best = std::max(1, guess);
    double best_d = std::abs(approx_resonance({p.length, p.membrane_thickness, p.membrane_index, best}) - nu);
    for (int m = std::max(1, guess - 1); m <= guess + 1; ++m) {
        const double d = std::abs(approx_resonance({p.length, p.membrane_thickness, p.membrane_index, m}) - nu);
        if (d < best_d) {
            best_d = d;
            best = m;
        }
    }
    return best;
}

ModeLadder uncoupled_ladders(const Membrane1DParams& p) {
    p.validate();
    if (p.membrane_thickness == 0.0) throw InvalidConfigError("diamond mode spacing undefined for t_d = 0");
    if (!(p.length > p.membrane_thickness)) throw InvalidConfigError("air mode spacing needs L > t_d");
    return {kSpeedOfLight / (2.0 * p.membrane_index * p.membrane_thickness),
            kSpeedOfLight / (2.0 * (p.length - p.membrane_thickness)), kSpeedOfLight / (2.0 * p.optical_length())};
}

double air_like_character(const Membrane1DParams& p) {
    // Node at the surface: the membrane amplitude is 1/n of the air amplitude.
    const double t = p.membrane_thickness, gap = p.length - p.membrane_thickness;
    return t / (t + gap);
}

double diamond_like_character(const Membrane1DParams& p) {
    // Antinode at the surface: equal amplitudes on both sides.
    const double n2 = p.membrane_index * p.membrane_index;
    const double t = p.membrane_thickness, gap = p.length - p.membrane_thickness;
    return n2 * t / (n2 * t + gap);
}

ModeType classify_mode(double character, const Membrane1DParams& p) {
    const double a = air_like_character(p), d = diamond_like_character(p);
    if (!(d > a)) return ModeType::Mixed;
    const double s = (character - a) / (d - a);
    if (s < 1.0 / 3.0) return ModeType::AirLike;
    if (s > 2.0 / 3.0) return ModeType::DiamondLike;
    return ModeType::Mixed;
}

namespace {

// Extreme finesse ratios over one membrane period for a lossless stack.
std::pair<double, double> numeric_termination_factors(double n_d, Termination termination) {
    CoatingDesign coat;
    coat.termination = termination;
    coat.layer_count = termination == Termination::HighIndex ? 29 : 30;
    CavityConfig cfg;
    cfg.fiber_mirror = coat.build();
    cfg.flat_mirror = coat.build();
    cfg.membrane = OpticalMedium(n_d);
    cfg.membrane_thickness = 10.5e-6;
    cfg.length = 22e-6;
    cfg.guoy_enabled = false;
    const double period = 637e-9 * 637e-9 / (2.0 * n_d * cfg.membrane_thickness);
    const auto curve = finesse_vs_wavelength(cfg, 637e-9 - 0.5 * period, 637e-9 + 0.5 * period, 49);
    double air_f = 0.0, dia_f = 0.0;
    double min_char = 2.0, max_char = -1.0;
    for (const auto& pt : curve) {
        const double T = stack_response(cfg.flat_mirror, kAir, pt.wavelength).T;
        const double ratio = pt.finesse / (kPi / T);
        if (pt.character < min_char) {
            min_char = pt.character;
            air_f = ratio;
        }
        if (pt.character > max_char) {
            max_char = pt.character;
            dia_f = ratio;
        }
    }
    return {air_f, dia_f};
}

}  // namespace

double lossless_termination_factor(double n_d, Termination termination, ModeType mode_type) {
    if (n_d < 1.0) throw InvalidConfigError("n_d must be >= 1");
    if (n_d == 1.0) return 1.0;
    if (mode_type == ModeType::Mixed) throw InvalidConfigError("termination factor is defined for air-like or diamond-like modes");
    if (termination == Termination::HighIndex)
        return mode_type == ModeType::DiamondLike ? 2.0 / (n_d * n_d + 1.0) : 1.0;

    static std::mutex mu;
    static std::map<double, std::pair<double, double>> cache;
    std::pair<double, double> f;
    {
        std::lock_guard lock(mu);
        auto it = cache.find(n_d);
        if (it != cache.end()) f = it->second;
    }
    if (f.first == 0.0) {
        f = numeric_termination_factors(n_d, termination);
        std::lock_guard lock(mu);
        cache[n_d] = f;
    }
    return mode_type == ModeType::AirLike ? f.first : f.second;
}

}  // namespace fpcav
