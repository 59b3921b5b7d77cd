#pragma once

#include <string>
#include <vector>

#include "fpcav/core.hpp"

namespace fpcav {

// Fundamental Gaussian mode of a half-symmetric cavity holding a membrane on the flat
// mirror. z is measured from the flat mirror; the membrane occupies [0, t_d].
struct GaussianModePair {
    double w1 = 0.0;             // waist in the membrane (at the flat mirror), m
    double w2 = 0.0;             // waist of the air-region beam, m
    double x02 = 0.0;            // position of the air waist, m
    double interface_roc = 0.0;  // wavefront radius at z = t_d (inf for t_d = 0), m
    double wavelength = 0.0;     // vacuum wavelength, m

    double membrane_thickness = 0.0;
    double membrane_index = 1.0;
    double length = 0.0;
    double fiber_roc = 0.0;

    double diamond_rayleigh() const;  // pi w1^2 n_d / lambda
    double air_rayleigh() const;      // pi w2^2 / lambda

    // Beam radius; diamond parameters for z < t_d, air parameters otherwise.
    double beam_radius(double z) const;
    double beam_radius_diamond(double z) const;
    double beam_radius_air(double z) const;
    double wavefront_roc_diamond(double z) const;
    double wavefront_roc_air(double z) const;

    double fiber_mirror_radius() const { return beam_radius_air(length); }

    double guoy_diamond(double z) const;  // phi_1(z)
    double guoy_air(double z) const;      // phi_2(z - x02)
    // Phase accumulated between the membrane surface and the fiber mirror.
    double guoy_air_segment() const { return guoy_air(length) - guoy_air(membrane_thickness); }

    // Same geometry at another wavelength (Rayleigh ranges are wavelength independent).
    GaussianModePair at_wavelength(double lambda) const;
};

struct ModeMatchResiduals {
    double radius_mismatch;     // |w_d - w_a| / w at the interface
    double curvature_mismatch;  // |1/R_d - 1/R_a| * R at the interface
    double mirror_curvature;    // |R_a(L) - R| / R
    double flat_waist;          // curvature of the diamond beam at z=0 times w1 (zero by construction)
};

ModeMatchResiduals boundary_residuals(const GaussianModePair& mode);

GaussianModePair match_membrane_cavity_mode(double fiber_roc, double length, double membrane_thickness,
                                            double membrane_index, double wavelength);

// arctan(x lambda_medium / (pi w^2)) with lambda_medium = lambda / index.
double guoy_phase(double distance_from_waist, double waist, double wavelength, double index);

// R = L / (1 - cos^2(pi dnu / fsr)).
double effective_roc(double length, double delta_nu_trans, double fsr);
// Inverse relation, returning the transverse spacing in [0, fsr/2].
double transverse_spacing_from_roc(double length, double roc, double fsr);

struct HGModeIndex {
    int p = 0;
    int q = 0;
    int m = 0;  // longitudinal index: the mode's round-trip phase equals m*pi

    int order() const { return p + q; }
    std::string label() const;
    friend bool operator==(const HGModeIndex&, const HGModeIndex&) = default;
};

// Real Hermite-Gaussian standing wave of the membrane cavity with perfect end mirrors.
// Transverse profiles use the reference mode's beam radii; the longitudinal factor is
//   A_d sin(k n_d z - (N+1) phi_1(z))                         in the membrane,
//   A_a sin(k (L - z) - (N+1) [phi_2(L-x02) - phi_2(z-x02)])  in air.
struct HGBasisMode {
    HGModeIndex index;
    GaussianModePair mode;
    double frequency = 0.0;   // Hz
    double wavenumber = 0.0;  // vacuum k, 1/m
    double kappa = 0.0;       // (omega / c)^2
    double amp_diamond = 0.0;
    double amp_air = 0.0;

    double longitudinal(double z) const;
    double transverse(double x, double y, double z) const;
    double value(double x, double y, double z) const { return transverse(x, y, z) * longitudinal(z); }

    // Region formulas evaluated anywhere (used to continue the air solution below t_d).
    double longitudinal_diamond(double z) const;
    double longitudinal_air(double z) const;
    double transverse_air(double x, double y, double z) const;
    double value_air(double x, double y, double z) const { return transverse_air(x, y, z) * longitudinal_air(z); }
};

// Integral of n^2 g_a g_b dz over the cavity (transverse profiles are orthonormal per plane).
double longitudinal_overlap(const HGBasisMode& a, const HGBasisMode& b);

// Round-trip phase divided by pi for transverse order N at frequency nu; increases
// monotonically with nu and equals the longitudinal index on resonance.
double hg_phase_index(const GaussianModePair& mode, int order, double frequency);

// Resonant frequency of the mode with round-trip phase index m.
double hg_resonance_frequency(const GaussianModePair& mode, int order, int m);

// Longitudinal index whose resonance lies closest to the given frequency.
int nearest_longitudinal_index(const GaussianModePair& mode, int order, double frequency);

// Cavity lengths in [L_lo, L_hi] at which the matched TEM00 mode is resonant with the
// given wavelength, in increasing order.
std::vector<double> fundamental_resonance_lengths(double fiber_roc, double membrane_thickness, double membrane_index,
                                                  double wavelength, double length_lo, double length_hi);

HGBasisMode make_hg_mode(const HGModeIndex& index, const GaussianModePair& mode);

double hg_field(const HGModeIndex& index, const GaussianModePair& mode, double x, double y, double z);

// Normalised 1D Hermite function: integral of u^2 dx = 1 for beam radius w.
double hermite_gauss_1d(int n, double x, double w);

}  // namespace fpcav
