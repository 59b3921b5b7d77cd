#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "fpcav/transfer_matrix.hpp"

namespace fpcav {

// Loss knobs applied on top of a lossless cavity.
struct LossParameters {
    double mirror_absorption = 0.0;   // imaginary index added to every coating layer
    double sigma_air_diamond = 0.0;   // m
    double sigma_diamond_mirror = 0.0;  // m
    double diamond_absorption = 0.0;  // imaginary index of the membrane
};

enum class LossPreset {
    Lossless,
    MirrorAbsorption,
    AirDiamondRoughness,
    DiamondMirrorRoughness,
    DiamondAbsorption,
    LossyMembrane,
};

std::string_view to_string(LossPreset p);
LossPreset parse_loss_preset(std::string_view s);
const std::vector<LossPreset>& all_loss_presets();

CavityConfig apply_losses(const CavityConfig& cfg, const LossParameters& loss);

// Calibrated loss values for the default geometry (see calibrate_* below).
LossParameters loss_preset(LossPreset p);

// Membrane cavity used throughout: 10.5 um diamond, R = 61 um, L = 22 um, default coating.
CavityConfig reference_cavity();

// Scan ranges that go with the reference geometry.
struct ScanWindow {
    double length_lo = 12e-6;
    double length_hi = 32e-6;
    double frequency_lo = 440e12;
    double frequency_hi = 500e12;
    double wavelength_lo = 0.0;  // one membrane period around the node closest to 637 nm
    double wavelength_hi = 0.0;
};

ScanWindow reference_window(const CavityConfig& cfg = reference_cavity());

// Wavelength 2 n_d t_d / j nearest to `near` (the air-like point of the branch).
double membrane_node_wavelength(const CavityConfig& cfg, double near);
// lambda^2 / (2 n_d t_d)
double membrane_period(const CavityConfig& cfg, double wavelength);

// Length-scan finesse from the magnitude of the air-gap round trip (Airy form). Agrees with
// the measured FSR/FWHM to well below a percent and costs one matrix product.
double airy_finesse(const CavityConfig& cfg, double wavelength);

struct FinessePeak {
    double wavelength = 0.0;
    double finesse = 0.0;
    double fwhm = 0.0;  // width of the finesse-vs-wavelength peak, m
};

// Maximum of airy_finesse over [lo, hi] and the width at half of it.
FinessePeak airy_finesse_peak(const CavityConfig& cfg, double lo, double hi);

// Quarter-wave coating whose lossless pi/T equals the target at the design wavelength,
// obtained by adjusting the low index at a suitable layer count.
MirrorStack coating_for_finesse(double target_finesse, double design_wavelength = 637e-9);

struct LossyMembraneCalibration {
    LossParameters loss;
    FinessePeak peak;
    double bare_finesse = 0.0;
};

// Mirror absorption to a bare finesse of 37,000, sigma_dm fixed at 0.19 nm, then sigma_ad and
// membrane absorption so that the finesse peak reaches 17,000 with a 1.14 nm width.
LossyMembraneCalibration calibrate_lossy_membrane(const CavityConfig& lossless = reference_cavity());

// Single-mechanism calibrations to a peak finesse of 17,000.
LossParameters calibrate_single(LossPreset p, const CavityConfig& lossless = reference_cavity(),
                                double target_peak = 17000.0);

// Projected device: mirror finesse 50,000, R = 30 um, t_d = 5 um, L = 10 um.
CavityConfig projected_device();

std::vector<std::string> preset_names();
// "membrane", "lossy-membrane", "projected", "bare".
CavityConfig cavity_preset(std::string_view name);

}  // namespace fpcav
