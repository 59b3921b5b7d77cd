#include "fpcav/purcell.hpp"

#include <algorithm>
#include <cmath>

#include "fpcav/numerics.hpp"
#include "fpcav/parallel.hpp"

namespace fpcav {

double purcell_analytic(double finesse, double wavelength, double waist, double n_d, ModeType mode_type) {
    if (!(finesse > 0.0) || !(wavelength > 0.0) || !(waist > 0.0) || n_d < 1.0)
        throw InvalidConfigError("purcell_analytic: finesse, wavelength, waist must be positive and n_d >= 1");
    const double base = finesse * wavelength * wavelength / (kPi * kPi * kPi * waist * waist);
    switch (mode_type) {
        case ModeType::AirLike: return 6.0 * base / (n_d * n_d * n_d);
        case ModeType::DiamondLike: return 12.0 * base / (n_d * n_d * n_d + n_d);
        case ModeType::Mixed: break;
    }
    throw InvalidConfigError("purcell_analytic: mode type must be air-like or diamond-like");
}

double quality_factor_from_finesse(double finesse, double length, double wavelength) {
    return 2.0 * length * finesse / wavelength;
}

double standard_mode_volume(double waist, double length) { return 0.25 * kPi * waist * waist * length; }

double purcell_from_qv(double wavelength, double q, double v) {
    return 3.0 * wavelength * wavelength * wavelength / (4.0 * kPi * kPi) * q / v;
}

PurcellResult purcell_numeric(const CavityConfig& cfg, const std::optional<GaussianModePair>& mode,
                              double resonance_frequency) {
    cfg.validate();
    const double L = cfg.length;
    const auto peak = analyse_resonance(cfg, ScanAxis::Frequency, L, resonance_frequency);
    const double fsr = kSpeedOfLight / (2.0 * cfg.optical_length());
    if (std::abs(peak.position - resonance_frequency) > 0.25 * fsr)
        throw InsufficientRangeError("purcell_numeric: no resonance near the requested frequency");

    const double nu = peak.position;
    const double lambda = wavelength_of(nu);
    const double t_d = cfg.membrane_thickness;
    const double n_d = cfg.membrane.real();
    if (!(t_d > 0.0)) throw InvalidConfigError("purcell_numeric: the emitter needs a membrane (t_d > 0)");

    // Gouy phases follow the config; the transverse profile always needs the matched beam.
    const GaussianModePair beam =
        mode ? mode->at_wavelength(lambda) : match_membrane_cavity_mode(cfg.fiber_roc, L, t_d, n_d, lambda);
    const std::optional<GaussianModePair> gouy_mode = mode ? mode : resolve_mode(cfg, lambda);
    const CavityField field(cfg, gouy_mode, L, nu, true);

    // Longitudinal energy integral, >= 24 samples per half-wave in every segment.
    double energy = 0.0;
    const FieldSegment* membrane = nullptr;
    for (const auto& seg : field.segments()) {
        const double n = seg.index.real();
        const double len = seg.z1 - seg.z0;
        const int count = std::max(4, static_cast<int>(std::ceil(len / (lambda / (2.0 * n)) * 24.0)));
        std::vector<double> y(static_cast<size_t>(count) + 1);
        for (int i = 0; i <= count; ++i) {
            const double z = seg.z0 + len * i / count;
            y[static_cast<size_t>(i)] = n * n * std::norm(field.field_in(seg, z));
        }
        energy += numerics::trapezoid(y, len / count);
        if (seg.region == Region::Membrane) membrane = &seg;
    }

    // Optimally placed emitter: maximum of on-axis intensity |E|^2 / w(z)^2 inside the membrane.
    auto on_axis = [&](double z) {
        const double w = beam.beam_radius_diamond(z);
        return std::norm(field.field_in(*membrane, z)) / (w * w);
    };
    const double half_wave = lambda / (2.0 * n_d);
    const int count = std::max(8, static_cast<int>(std::ceil(t_d / half_wave * 24.0)));
    double best_z = 0.0, best_v = -1.0;
    for (int i = 0; i <= count; ++i) {
        const double z = t_d * i / count;
        const double v = on_axis(z);
        if (v > best_v) {
            best_v = v;
            best_z = z;
        }
    }
    const double step = t_d / count;
    const auto ext = numerics::maximize(on_axis, std::max(0.0, best_z - step), std::min(t_d, best_z + step));
    if (ext.value > best_v) {
        best_v = ext.value;
        best_z = ext.x;
    }

    PurcellResult r;
    r.resonance_frequency = nu;
    r.length = L;
    r.linewidth = peak.fwhm;
    r.quality_factor = nu / peak.fwhm;
    r.emax_location = best_z;
    r.emitter_beam_radius = beam.beam_radius_diamond(best_z);
    r.character = peak.character;
    r.mode_type = classify_mode(peak.character, {L, t_d, n_d, 1});
    // Field normalised to unit transverse peak at the waist reference: |E_max|^2 = best_v,
    // integral of n^2 |E|^2 dV = (pi/2) * energy.
    const double transverse = 0.5 * kPi;
    r.purcell_factor = 3.0 * kSpeedOfLight * lambda * lambda / (4.0 * kPi * kPi * n_d * peak.fwhm) * best_v /
                       (transverse * energy);
    r.mode_volume = transverse * energy / (n_d * n_d * best_v);
    return r;
}

std::vector<PurcellPoint> purcell_branch(const CavityConfig& cfg, double lambda_lo, double lambda_hi, int points,
                                         int jobs) {
    if (points < 2) throw InvalidConfigError("purcell_branch needs at least 2 points");
    cfg.validate();
    std::vector<PurcellPoint> out(static_cast<size_t>(points));
    parallel_for(out.size(), jobs, [&](size_t i) {
        const double lambda = lambda_lo + (lambda_hi - lambda_lo) * static_cast<double>(i) / (points - 1);
        const auto lpeak = analyse_resonance(cfg, ScanAxis::Length, lambda, cfg.length);
        PurcellPoint p;
        p.wavelength = lambda;
        p.length = lpeak.position;
        p.finesse_length = lpeak.finesse;
        p.purcell = purcell_numeric(cfg.with_length(lpeak.position), std::nullopt, frequency_of(lambda));
        out[i] = p;
    });
    return out;
}

}  // namespace fpcav
