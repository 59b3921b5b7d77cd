#pragma once

#include <optional>
#include <vector>

#include "fpcav/analytic_1d.hpp"
#include "fpcav/gaussian_modes.hpp"
#include "fpcav/transfer_matrix.hpp"

namespace fpcav {

struct PurcellResult {
    double purcell_factor = 0.0;
    double linewidth = 0.0;           // Hz
    double emax_location = 0.0;       // m from the flat mirror
    ModeType mode_type = ModeType::Mixed;
    double quality_factor = 0.0;      // nu / linewidth
    double mode_volume = 0.0;         // m^3
    double character = 0.0;
    double resonance_frequency = 0.0;
    double length = 0.0;
    double emitter_beam_radius = 0.0;
};

// High-finesse closed forms for air-like and diamond-like modes (finesse >= 100).
double purcell_analytic(double finesse, double wavelength, double waist, double n_d, ModeType mode_type);

// Standard-cavity bookkeeping: Q = 2 L F / lambda and V = (pi/4) w0^2 L.
double quality_factor_from_finesse(double finesse, double length, double wavelength);
double standard_mode_volume(double waist, double length);
// (3 lambda^3 / 4 pi^2) Q / V
double purcell_from_qv(double wavelength, double q, double v);

// Integral form with the field of the transfer-matrix model and the Gaussian transverse
// profile; the linewidth is measured on the frequency axis at fixed length.
PurcellResult purcell_numeric(const CavityConfig& cfg, const std::optional<GaussianModePair>& mode,
                              double resonance_frequency);

struct PurcellPoint {
    double wavelength = 0.0;
    double length = 0.0;
    double finesse_length = 0.0;
    PurcellResult purcell;
};

// Purcell factor along the resonance branch used for the finesse-vs-wavelength curve.
std::vector<PurcellPoint> purcell_branch(const CavityConfig& cfg, double lambda_lo, double lambda_hi, int points,
                                         int jobs = 1);

}  // namespace fpcav
