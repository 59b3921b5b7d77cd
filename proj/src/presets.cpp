#include "fpcav/presets.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fpcav/numerics.hpp"

namespace fpcav {

std::string_view to_string(LossPreset p) {
    switch (p) {
        case LossPreset::Lossless: return "lossless";
        case LossPreset::MirrorAbsorption: return "mirror-absorption";
        case LossPreset::AirDiamondRoughness: return "air-diamond-roughness";
        case LossPreset::DiamondMirrorRoughness: return "diamond-mirror-roughness";
        case LossPreset::DiamondAbsorption: return "diamond-absorption";
        case LossPreset::LossyMembrane: return "lossy-membrane";
    }
    return "?";
}

const std::vector<LossPreset>& all_loss_presets() {
    static const std::vector<LossPreset> v{LossPreset::Lossless,          LossPreset::MirrorAbsorption,
                                           LossPreset::AirDiamondRoughness, LossPreset::DiamondMirrorRoughness,
                                           LossPreset::DiamondAbsorption,  LossPreset::LossyMembrane};
    return v;
}

LossPreset parse_loss_preset(std::string_view s) {
    for (auto p : all_loss_presets())
        if (to_string(p) == s) return p;
    throw InvalidConfigError("unknown loss preset '" + std::string(s) + "'");
}

CavityConfig apply_losses(const CavityConfig& cfg, const LossParameters& loss) {
    CavityConfig c = cfg;
    if (loss.mirror_absorption != 0.0) {
        c.fiber_mirror = c.fiber_mirror.with_absorption(loss.mirror_absorption);
        c.flat_mirror = c.flat_mirror.with_absorption(loss.mirror_absorption);
    }
    c.sigma_air_diamond = loss.sigma_air_diamond;
    c.sigma_diamond_mirror = loss.sigma_diamond_mirror;
    c.membrane = OpticalMedium(Complex(cfg.membrane.real(), cfg.membrane.imag() + loss.diamond_absorption));
    return c;
}

// Values produced by calibrate_lossy_membrane / calibrate_single on reference_cavity(); a unit test
// re-runs the calibration and checks they are still current.
LossParameters loss_preset(LossPreset p) {
    LossParameters l;
    switch (p) {
        case LossPreset::Lossless: break;
        case LossPreset::MirrorAbsorption: l.mirror_absorption = 2.161646e-5; break;
        case LossPreset::AirDiamondRoughness: l.sigma_air_diamond = 6.537625e-9; break;
        case LossPreset::DiamondMirrorRoughness: l.sigma_diamond_mirror = 6.529081e-9; break;
        case LossPreset::DiamondAbsorption: l.diamond_absorption = 1.413607e-6; break;
        case LossPreset::LossyMembrane:
            l.mirror_absorption = 3.938743e-6;
            l.sigma_diamond_mirror = 0.19e-9;
            l.sigma_air_diamond = 3.758906e-9;
            l.diamond_absorption = 9.906510e-7;
            break;
    }
    return l;
}

CavityConfig reference_cavity() { return CavityConfig{}; }

double membrane_node_wavelength(const CavityConfig& cfg, double near) {
    const double opt = 2.0 * cfg.membrane.real() * cfg.membrane_thickness;
    if (!(opt > 0.0)) return near;
    const double j = std::max(1.0, std::round(opt / near));
    return opt / j;
}

double membrane_period(const CavityConfig& cfg, double wavelength) {
    return wavelength * wavelength / (2.0 * cfg.membrane.real() * cfg.membrane_thickness);
}

ScanWindow reference_window(const CavityConfig& cfg) {
    ScanWindow w;
    const double node = membrane_node_wavelength(cfg, 637e-9);
    const double period = cfg.membrane_thickness > 0.0 ? membrane_period(cfg, node) : 8e-9;
    w.wavelength_lo = node - 0.5 * period;
    w.wavelength_hi = node + 0.5 * period;
    return w;
}

double airy_finesse(const CavityConfig& cfg, double wavelength) {
    const auto optics = cavity_optics(cfg, wavelength);
    const double rho = std::abs(round_trip(cfg, optics, cfg.length, GouyPhases{}));
    if (!(rho > 0.0) || rho >= 1.0) return rho >= 1.0 ? std::numeric_limits<double>::infinity() : 0.0;
    const double c = (1.0 + rho * rho - 2.0 * (1.0 - rho) * (1.0 - rho)) / (2.0 * rho);
    return kPi / std::acos(std::clamp(c, -1.0, 1.0));
}

FinessePeak airy_finesse_peak(const CavityConfig& cfg, double lo, double hi) {
    const int n = 401;
    std::vector<double> f(n);
    const double step = (hi - lo) / (n - 1);
    for (int i = 0; i < n; ++i) f[static_cast<size_t>(i)] = airy_finesse(cfg, lo + step * i);
    const int imax = static_cast<int>(std::max_element(f.begin(), f.end()) - f.begin());
    auto F = [&](double l) { return airy_finesse(cfg, l); };
    const double a = lo + step * std::max(0, imax - 1), b = lo + step * std::min(n - 1, imax + 1);
    const auto ext = numerics::maximize(F, a, b);
    FinessePeak p{ext.x, ext.value, std::numeric_limits<double>::infinity()};
    const double half = 0.5 * p.finesse;
    auto g = [&](double l) { return F(l) - half; };
    int il = imax;
    while (il > 0 && f[static_cast<size_t>(il)] >= half) --il;
    int ir = imax;
    while (ir < n - 1 && f[static_cast<size_t>(ir)] >= half) ++ir;
    if (f[static_cast<size_t>(il)] < half && f[static_cast<size_t>(ir)] < half) {
        const double xl = numerics::find_root(g, lo + step * il, std::min(p.wavelength, lo + step * (il + 1)), 1e-12);
        const double xr = numerics::find_root(g, std::max(p.wavelength, lo + step * (ir - 1)), lo + step * ir, 1e-12);
        p.fwhm = xr - xl;
    }
    return p;
}

MirrorStack coating_for_finesse(double target, double lambda) {
    if (!(target > 1.0)) throw InvalidConfigError("target finesse must exceed 1");
    const CoatingDesign base;
    auto finesse = [&](int layers, double n_low) {
        CoatingDesign d = base;
        d.layer_count = layers;
        d.n_low = n_low;
        d.design_wavelength = lambda;
        return kPi / stack_response(d.build(), kAir, lambda).T;
    };
    const double lo = 1.20, hi = 1.95;
    int best_layers = -1;
    double best_nl = 0.0;
    for (int layers = 3; layers <= 81; layers += 2) {
        const double fl = finesse(layers, hi), fh = finesse(layers, lo);
        if (!(target >= fl && target <= fh)) continue;
        const double nl = numerics::find_root([&](double x) { return std::log(finesse(layers, x) / target); }, lo, hi, 1e-15);
        if (best_layers < 0 || std::abs(nl - base.n_low) < std::abs(best_nl - base.n_low)) {
            best_layers = layers;
            best_nl = nl;
        }
    }
    if (best_layers < 0) throw InvalidConfigError("no quarter-wave design reaches the requested finesse");
    CoatingDesign d = base;
    d.layer_count = best_layers;
    d.n_low = best_nl;
    d.design_wavelength = lambda;
    return d.build();
}

namespace {

CavityConfig bare_of(const CavityConfig& cfg) {
    CavityConfig c = cfg;
    c.membrane_thickness = 0.0;
    return c;
}

}  // namespace

LossyMembraneCalibration calibrate_lossy_membrane(const CavityConfig& lossless) {
    const auto win = reference_window(lossless);
    LossyMembraneCalibration out;
    const CavityConfig bare = bare_of(lossless);
    out.loss.mirror_absorption = numerics::find_root(
        [&](double k) {
            LossParameters l;
            l.mirror_absorption = k;
            return airy_finesse(apply_losses(bare, l), 637e-9) - 37000.0;
        },
        0.0, 1e-4, 1e-12);
    out.loss.sigma_diamond_mirror = 0.19e-9;
    auto peak_for = [&](double sad, double kd) {
        LossParameters l = out.loss;
        l.sigma_air_diamond = sad;
        l.diamond_absorption = kd;
        return airy_finesse_peak(apply_losses(lossless, l), win.wavelength_lo, win.wavelength_hi);
    };
    auto inner = [&](double sad) {
        return numerics::find_root([&](double kd) { return peak_for(sad, kd).finesse - 17000.0; }, 0.0, 1e-4, 1e-10);
    };
    out.loss.sigma_air_diamond = numerics::find_root(
        [&](double sad) { return peak_for(sad, inner(sad)).fwhm - 1.14e-9; }, 1.0e-9, 6.0e-9, 1e-8);
    out.loss.diamond_absorption = inner(out.loss.sigma_air_diamond);
    out.peak = peak_for(out.loss.sigma_air_diamond, out.loss.diamond_absorption);
    LossParameters mirror_only;
    mirror_only.mirror_absorption = out.loss.mirror_absorption;
    out.bare_finesse = airy_finesse(apply_losses(bare, mirror_only), 637e-9);
    return out;
}

LossParameters calibrate_single(LossPreset p, const CavityConfig& lossless, double target) {
    const auto win = reference_window(lossless);
    auto with = [&](double x) {
        LossParameters l;
        switch (p) {
            case LossPreset::MirrorAbsorption: l.mirror_absorption = x; break;
            case LossPreset::AirDiamondRoughness: l.sigma_air_diamond = x; break;
            case LossPreset::DiamondMirrorRoughness: l.sigma_diamond_mirror = x; break;
            case LossPreset::DiamondAbsorption: l.diamond_absorption = x; break;
            default: throw InvalidConfigError("calibrate_single takes a single-mechanism preset");
        }
        return l;
    };
    const bool roughness = p == LossPreset::AirDiamondRoughness || p == LossPreset::DiamondMirrorRoughness;
    const double hi = roughness ? 40e-9 : 1e-3;
    const double x = numerics::find_root(
        [&](double v) {
            return airy_finesse_peak(apply_losses(lossless, with(v)), win.wavelength_lo, win.wavelength_hi).finesse -
                   target;
        },
        0.0, hi, 1e-10);
    return with(x);
}

CavityConfig projected_device() {
    CavityConfig c;
    c.fiber_mirror = coating_for_finesse(50000.0);
    c.flat_mirror = c.fiber_mirror;
    c.membrane_thickness = 5e-6;
    c.length = 10e-6;
    c.fiber_roc = 30e-6;
    return c;
}

std::vector<std::string> preset_names() { return {"membrane", "lossy-membrane", "projected", "bare"}; }

CavityConfig cavity_preset(std::string_view name) {
    if (name == "membrane") return reference_cavity();
    if (name == "lossy-membrane") return apply_losses(reference_cavity(), loss_preset(LossPreset::LossyMembrane));
    if (name == "projected") return projected_device();
    if (name == "bare") {
        CavityConfig c = reference_cavity();
        c.membrane_thickness = 0.0;
        c.length = 13.3e-6;
        return c;
    }
    throw InvalidConfigError("unknown preset '" + std::string(name) + "'");
}

}  // namespace fpcav
