#include <algorithm>
#include <cmath>
#include <limits>

#include "fpcav/numerics.hpp"
#include "fpcav/parallel.hpp"
#include "fpcav/transfer_matrix.hpp"

namespace fpcav {
namespace {

double wrap_pi(double x) { return std::remainder(x, 2.0 * kPi); }

// Quadratic through three samples solved for the level crossing inside [xa, xb].
double crossing(double x0, double y0, double x1, double y1, double x2, double y2, double level, double xa,
                double xb) {
    const double d01 = (y1 - y0) / (x1 - x0);
    const double d12 = (y2 - y1) / (x2 - x1);
    const double a = (d12 - d01) / (x2 - x0);
    const double b = d01 - a * (x0 + x1);
    const double c = y0 - level - a * x0 * x0 - b * x0;
    auto inside = [&](double x) { return x >= std::min(xa, xb) - 1e-12 * std::abs(xb - xa) &&
                                         x <= std::max(xa, xb) + 1e-12 * std::abs(xb - xa); };
    if (std::abs(a) > 0.0) {
        const double disc = b * b - 4.0 * a * c;
        if (disc >= 0.0) {
            const double s = std::sqrt(disc);
            const double q = -0.5 * (b + std::copysign(s, b));
            const double r1 = q / a;
            const double r2 = q != 0.0 ? c / q : r1;
            if (inside(r1)) return r1;
            if (inside(r2)) return r2;
        }
    }
    // Fall back to linear interpolation on the bracketing pair.
    const double ya = (xa == x0) ? y0 : (xa == x1 ? y1 : y2);
    const double yb = (xb == x0) ? y0 : (xb == x1 ? y1 : y2);
    return xa + (level - ya) * (xb - xa) / (yb - ya);
}

// Length axis at fixed wavelength.
struct LengthAxis {
    const CavityConfig& cfg;
    CavityOptics optics;
    Complex r_fiber;

    LengthAxis(const CavityConfig& c, double lambda)
        : cfg(c), optics(cavity_optics(c, lambda)), r_fiber(left_incidence(optics.fiber_stack).r) {}

    double phase(double L) const { return std::arg(rho(L, gouy_phases_for(cfg, L))); }
    Complex rho(double L, const GouyPhases& g) const { return round_trip(cfg, optics, L, g); }
    double transmission(double L, const GouyPhases& g) const {
        return power_response(optics, system_matrix(cfg, optics, L, g)).T;
    }
};

// Frequency axis at fixed length.
struct FrequencyAxis {
    const CavityConfig& cfg;
    GouyPhases gouy;

    FrequencyAxis(const CavityConfig& c) : cfg(c), gouy(gouy_phases_for(c, c.length)) {}

    Complex rho(double nu) const { return round_trip(cfg, cavity_optics(cfg, wavelength_of(nu)), cfg.length, gouy); }
    double phase(double nu) const { return std::arg(rho(nu)); }
    double transmission(double nu) const {
        const auto o = cavity_optics(cfg, wavelength_of(nu));
        return power_response(o, system_matrix(cfg, o, cfg.length, gouy)).T;
    }
};

double nominal_fsr(const CavityConfig& cfg, ScanAxis axis, double fixed) {
    return axis == ScanAxis::Length ? 0.5 * fixed : kSpeedOfLight / (2.0 * cfg.optical_length());
}

// Upward zero crossings of the wrapped round-trip phase on a grid, polished by root finding.
template <class PhaseFn>
std::vector<double> phase_roots(PhaseFn&& phase, const std::vector<double>& grid, const std::vector<double>& values) {
    std::vector<double> roots;
    for (size_t i = 0; i + 1 < grid.size(); ++i) {
        const double a = values[i], b = values[i + 1];
        if (a == 0.0) {
            roots.push_back(grid[i]);
            continue;
        }
        if (a < 0.0 && b >= 0.0 && b - a < kPi) {
            if (b == 0.0) continue;  // picked up as the next left endpoint
            roots.push_back(numerics::find_root(phase, grid[i], grid[i + 1], a, b, 1e-15));
        }
    }
    return roots;
}

}  // namespace

PeakShape measure_peak(const std::function<double(double)>& f, double x0, double width_guess, double rel_tol,
                       int max_points) {
    if (!(width_guess > 0.0)) throw ResolutionError("measure_peak: width guess must be positive");
    // Coarse look around the guess, then polish the maximum.
    double best_x = x0, best_v = f(x0);
    const int coarse = 64;
    for (int i = 0; i <= coarse; ++i) {
        const double x = x0 - 3.0 * width_guess + 6.0 * width_guess * i / coarse;
        const double v = f(x);
        if (v > best_v) {
            best_v = v;
            best_x = x;
        }
    }
    const double step = 6.0 * width_guess / coarse;
    auto ext = numerics::maximize(f, best_x - step, best_x + step);
    if (ext.value < best_v) ext = {best_x, best_v};
    const double xp = ext.x, peak = ext.value;
    const double level = 0.5 * peak;

    double half_window = 2.0 * width_guess;
    int n = 64;
    double prev = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> xs, ys;
    for (int iter = 0; iter < 64; ++iter) {
        xs.resize(static_cast<size_t>(n) + 1);
        ys.resize(static_cast<size_t>(n) + 1);
        for (int i = 0; i <= n; ++i) {
            xs[static_cast<size_t>(i)] = xp - half_window + 2.0 * half_window * i / n;
            ys[static_cast<size_t>(i)] = f(xs[static_cast<size_t>(i)]);
        }
        const size_t mid = static_cast<size_t>(n / 2);
        ys[mid] = std::max(ys[mid], peak);
        size_t li = mid, ri = mid;
        while (li > 0 && ys[li - 1] >= level) --li;
        while (ri < static_cast<size_t>(n) && ys[ri + 1] >= level) ++ri;
        if (li == 0 || ri == static_cast<size_t>(n)) {
            half_window *= 2.0;
            if (half_window > 1e4 * width_guess || (xp != 0.0 && half_window > 0.5 * std::abs(xp)))
                throw ResolutionError("measure_peak: half-maximum crossings not found");
            continue;
        }
        // Left crossing lies between li-1 (below) and li (above).
        const size_t l0 = li >= 2 ? li - 2 : li - 1;
        const double xl = crossing(xs[l0], ys[l0], xs[l0 + 1], ys[l0 + 1], xs[l0 + 2], ys[l0 + 2], level,
                                   xs[li - 1], xs[li]);
        const size_t r0 = ri + 2 <= static_cast<size_t>(n) ? ri : ri - 1;
        const double xr = crossing(xs[r0], ys[r0], xs[r0 + 1], ys[r0 + 1], xs[r0 + 2], ys[r0 + 2], level, xs[ri],
                                   xs[ri + 1]);
        const double fwhm = xr - xl;
        if (std::isfinite(prev) && std::abs(fwhm - prev) < rel_tol * fwhm) return {xp, peak, fwhm};
        prev = fwhm;
        half_window = std::max(1.25 * fwhm, 4.0 * half_window / n);
        n *= 2;
        if (n > max_points) break;
    }
    throw ResolutionError("measure_peak: FWHM did not converge within the refinement cap");
}

std::vector<double> resonance_positions(const CavityConfig& cfg, ScanAxis axis, double fixed, double lo, double hi) {
    if (!(hi > lo)) return {};
    const double fsr = nominal_fsr(cfg, axis, fixed);
    const int n = std::max(8, static_cast<int>(std::ceil((hi - lo) / fsr * 32.0)));
    std::vector<double> grid(static_cast<size_t>(n) + 1), values(grid.size());
    for (int i = 0; i <= n; ++i) grid[static_cast<size_t>(i)] = lo + (hi - lo) * i / n;

    if (axis == ScanAxis::Length) {
        cfg.with_length(hi).validate();
        LengthAxis ax(cfg, fixed);
        auto phase = [&](double L) { return ax.phase(L); };
        for (size_t i = 0; i < grid.size(); ++i) values[i] = phase(grid[i]);
        return phase_roots(phase, grid, values);
    }
    cfg.validate();
    FrequencyAxis ax(cfg);
    // Coarse grid evaluated in one batch through the stack kernel.
    std::vector<double> lambdas(grid.size());
    for (size_t i = 0; i < grid.size(); ++i) lambdas[i] = wavelength_of(grid[i]);
    const auto optics = cavity_optics(cfg, lambdas);
    for (size_t i = 0; i < grid.size(); ++i) values[i] = std::arg(round_trip(cfg, optics[i], cfg.length, ax.gouy));
    auto phase = [&](double nu) { return ax.phase(nu); };
    return phase_roots(phase, grid, values);
}

double mode_character(const CavityConfig& cfg, double L, double frequency) {
    const auto c = cfg.with_length(L);
    const auto mode = resolve_mode(c, wavelength_of(frequency));
    const auto p = intracavity_field_profile(c, mode, L, frequency, {24, false});
    const double total = p.energy_diamond + p.energy_air;
    return total > 0.0 ? std::clamp(p.energy_diamond / total, 0.0, 1.0) : 0.0;
}

ResonancePeak analyse_resonance(const CavityConfig& cfg, ScanAxis axis, double fixed, double guess) {
    const double fsr_nominal = nominal_fsr(cfg, axis, fixed);
    double lo = guess - 1.6 * fsr_nominal, hi = guess + 1.6 * fsr_nominal;
    if (axis == ScanAxis::Length) lo = std::max(lo, cfg.membrane_thickness + 1e-3 * fsr_nominal);
    const auto roots = resonance_positions(axis == ScanAxis::Length ? cfg : cfg.with_length(fixed), axis,
                                           axis == ScanAxis::Length ? fixed : guess, lo, hi);
    if (roots.empty()) throw InsufficientRangeError("no resonance found near the requested position");
    size_t best = 0;
    for (size_t i = 1; i < roots.size(); ++i)
        if (std::abs(roots[i] - guess) < std::abs(roots[best] - guess)) best = i;
    const double x0 = roots[best];

    ResonancePeak peak;
    peak.axis = axis;
    if (best > 0 && best + 1 < roots.size())
        peak.fsr = 0.5 * (roots[best + 1] - roots[best - 1]);
    else if (best + 1 < roots.size())
        peak.fsr = roots[best + 1] - x0;
    else if (best > 0)
        peak.fsr = x0 - roots[best - 1];
    else
        peak.fsr = fsr_nominal;

    double L = 0.0, nu = 0.0;
    std::function<double(double)> T;
    double slope = 0.0;
    Complex rho;
    std::optional<LengthAxis> lax;
    std::optional<FrequencyAxis> fax;
    const CavityConfig fixed_length = axis == ScanAxis::Frequency ? cfg.with_length(fixed) : cfg;
    GouyPhases g;
    if (axis == ScanAxis::Length) {
        L = x0;
        nu = frequency_of(fixed);
        lax.emplace(cfg, fixed);
        g = gouy_phases_for(cfg, x0);
        T = [&](double x) { return lax->transmission(x, g); };
        rho = lax->rho(x0, g);
        const double h = 1e-4 * fsr_nominal;
        slope = wrap_pi(std::arg(lax->rho(x0 + h, g)) - std::arg(lax->rho(x0 - h, g))) / (2.0 * h);
    } else {
        L = fixed;
        nu = x0;
        fax.emplace(fixed_length);
        T = [&](double x) { return fax->transmission(x); };
        rho = fax->rho(x0);
        const double h = 1e-4 * fsr_nominal;
        slope = wrap_pi(fax->phase(x0 + h) - fax->phase(x0 - h)) / (2.0 * h);
    }
    const double mag = std::abs(rho);
    double width = 2.0 * (1.0 - mag) / std::sqrt(mag) / std::abs(slope);
    if (!(width > 0.0) || !std::isfinite(width)) width = 1e-3 * fsr_nominal;
    const auto shape = measure_peak(T, x0, width);
    peak.position = shape.position;
    peak.fwhm = shape.fwhm;
    peak.peak_transmission = shape.peak;
    peak.finesse = peak.fsr / peak.fwhm;
    peak.character = mode_character(cfg, L, nu);
    return peak;
}

ScanResult scan_resonances(const CavityConfig& cfg, ScanAxis axis, double fixed, double lo, double hi, int samples) {
    const CavityConfig base = axis == ScanAxis::Length ? cfg : cfg.with_length(fixed);
    base.validate();
    const auto roots = resonance_positions(base, axis, fixed, lo, hi);
    if (roots.size() < 2)
        throw InsufficientRangeError("scan range holds " + std::to_string(roots.size()) +
                                     " resonance(s); at least 2 are needed for the FSR");
    ScanResult out;
    for (size_t i = 0; i < roots.size(); ++i) {
        ResonancePeak p = analyse_resonance(base, axis, fixed, roots[i]);
        if (i > 0 && i + 1 < roots.size())
            p.fsr = 0.5 * (roots[i + 1] - roots[i - 1]);
        else if (i == 0)
            p.fsr = roots[1] - roots[0];
        else
            p.fsr = roots[i] - roots[i - 1];
        p.finesse = p.fsr / p.fwhm;
        out.peaks.push_back(p);
    }

    out.trace.axis = axis;
    const int n = std::max(2, samples);
    out.trace.x.resize(static_cast<size_t>(n));
    out.trace.T.resize(static_cast<size_t>(n));
    out.trace.R.resize(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) out.trace.x[static_cast<size_t>(i)] = lo + (hi - lo) * i / (n - 1);
    if (axis == ScanAxis::Length) {
        const auto optics = cavity_optics(base, fixed);
        for (size_t i = 0; i < out.trace.x.size(); ++i) {
            const double L = out.trace.x[i];
            const auto r = power_response(optics, system_matrix(base, optics, L, gouy_phases_for(base, L)));
            out.trace.T[i] = r.T;
            out.trace.R[i] = r.R;
        }
    } else {
        std::vector<double> lambdas(out.trace.x.size());
        for (size_t i = 0; i < lambdas.size(); ++i) lambdas[i] = wavelength_of(out.trace.x[i]);
        const auto optics = cavity_optics(base, lambdas);
        const auto g = gouy_phases_for(base, base.length);
        for (size_t i = 0; i < lambdas.size(); ++i) {
            const auto r = power_response(optics[i], system_matrix(base, optics[i], base.length, g));
            out.trace.T[i] = r.T;
            out.trace.R[i] = r.R;
        }
    }
    return out;
}

namespace {

FinessePoint finesse_point(const CavityConfig& cfg, double lambda, double L_guess) {
    const auto peak = analyse_resonance(cfg, ScanAxis::Length, lambda, L_guess);
    FinessePoint fp;
    fp.wavelength = lambda;
    fp.length = peak.position;
    fp.finesse = peak.finesse;
    fp.fwhm = peak.fwhm;
    fp.fsr = peak.fsr;
    fp.character = peak.character;
    fp.peak_transmission = peak.peak_transmission;
    const auto c = cfg.with_length(peak.position);
    const auto prof = intracavity_field_profile(c, resolve_mode(c, lambda), peak.position, frequency_of(lambda),
                                                {8, false});
    fp.interface_intensity = prof.interface_intensity;
    return fp;
}

}  // namespace

std::vector<FinessePoint> finesse_vs_wavelength(const CavityConfig& cfg, double lambda_lo, double lambda_hi,
                                                int points, int jobs) {
    if (points < 2) throw InvalidConfigError("finesse_vs_wavelength needs at least 2 points");
    cfg.validate();
    std::vector<FinessePoint> out(static_cast<size_t>(points));
    parallel_for(out.size(), jobs, [&](size_t i) {
        const double lambda = lambda_lo + (lambda_hi - lambda_lo) * static_cast<double>(i) / (points - 1);
        out[i] = finesse_point(cfg, lambda, cfg.length);
    });
    return out;
}

std::vector<FinessePoint> finesse_vs_length(const CavityConfig& cfg, double wavelength, double L_lo, double L_hi,
                                            int points, int jobs) {
    if (points < 2) throw InvalidConfigError("finesse_vs_length needs at least 2 points");
    std::vector<FinessePoint> out(static_cast<size_t>(points));
    parallel_for(out.size(), jobs, [&](size_t i) {
        const double L = L_lo + (L_hi - L_lo) * static_cast<double>(i) / (points - 1);
        const auto c = cfg.with_length(L);
        c.validate();
        // Retune the laser to the fundamental resonance nearest the nominal wavelength.
        const double nu0 = frequency_of(wavelength);
        const double fsr = kSpeedOfLight / (2.0 * c.optical_length());
        const auto roots = resonance_positions(c, ScanAxis::Frequency, L, nu0 - 1.6 * fsr, nu0 + 1.6 * fsr);
        if (roots.empty()) throw InsufficientRangeError("no resonance near the requested wavelength");
        double nu = roots.front();
        for (double r : roots)
            if (std::abs(r - nu0) < std::abs(nu - nu0)) nu = r;
        out[i] = finesse_point(cfg, wavelength_of(nu), L);
    });
    return out;
}

SpectrumMap spectrum_map(const CavityConfig& cfg, double L_lo, double L_hi, int length_points, double nu_lo,
                         double nu_hi, int frequency_bins, int jobs) {
    if (length_points < 1 || frequency_bins < 1) throw InvalidConfigError("spectrum map needs at least one sample");
    if (!(L_hi >= L_lo) || !(nu_hi > nu_lo) || !(nu_lo > 0.0)) throw InvalidConfigError("bad spectrum map ranges");
    SpectrumMap map;
    map.bin_width = (nu_hi - nu_lo) / frequency_bins;
    for (int j = 0; j < frequency_bins; ++j) map.frequencies.push_back(nu_lo + (j + 0.5) * map.bin_width);
    for (int i = 0; i < length_points; ++i)
        map.lengths.push_back(length_points == 1 ? L_lo : L_lo + (L_hi - L_lo) * i / (length_points - 1));
    map.transmission.assign(map.lengths.size() * map.frequencies.size(), 0.0);
    parallel_for(map.lengths.size(), jobs, [&](size_t i) {
        const CavityConfig c = cfg.with_length(map.lengths[i]);
        c.validate();
        const FrequencyAxis ax(c);
        const double fsr = nominal_fsr(c, ScanAxis::Frequency, 0.0);
        const auto roots = resonance_positions(c, ScanAxis::Frequency, c.length, std::max(0.5 * nu_lo, nu_lo - fsr),
                                               nu_hi + fsr);
        double* row = &map.transmission[i * map.frequencies.size()];
        for (double nu : roots) {
            const double mag = std::abs(ax.rho(nu));
            const double h = 1e-4 * fsr;
            const double slope = std::abs(wrap_pi(ax.phase(nu + h) - ax.phase(nu - h)) / (2.0 * h));
            if (!(slope > 0.0) || !(mag > 0.0)) continue;
            const double half = (1.0 - mag) / std::sqrt(mag) / slope;  // half width at half maximum
            const double peak = ax.transmission(nu);
            for (size_t j = 0; j < map.frequencies.size(); ++j) {
                const double a = nu_lo + static_cast<double>(j) * map.bin_width, b = a + map.bin_width;
                row[j] += peak * half * (std::atan((b - nu) / half) - std::atan((a - nu) / half)) / map.bin_width;
            }
        }
    });
    return map;
}

}  // namespace fpcav
