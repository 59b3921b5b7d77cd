#pragma once

#include <string>
#include <vector>

#include "fpcav/gaussian_modes.hpp"
#include "fpcav/transfer_matrix.hpp"

namespace fpcav {

// Dielectric sliver between the wavefront-matched (curved) membrane surface of the
// zero-order model and the real flat surface at z = t_d.
struct PerturbationVolume {
    double membrane_thickness = 0.0;
    double interface_roc = 0.0;  // inf for a flat zero-order surface
    double contrast = 0.0;       // n_d^2 - 1
    double radial_extent = 0.0;  // integration cut-off, m

    // Curved surface z_c(r); the sliver spans [z_c(r), t_d].
    double surface(double r) const;
    double depth(double r) const { return membrane_thickness - surface(r); }
    double volume() const;  // geometric volume inside radial_extent

    // Sliver for a matched mode; radial extent defaults to 6 beam radii at the surface.
    static PerturbationVolume from_mode(const GaussianModePair& mode, double radial_extent = 0.0);
};

// Basis mode orthonormalised within its transverse family (same p, q). Each mode is a
// small combination of analytic Hermite-Gaussian standing waves.
struct BasisMode {
    HGModeIndex index;
    double frequency = 0.0;
    double kappa = 0.0;
    std::vector<HGBasisMode> parts;
    std::vector<double> weights;

    double value(double x, double y, double z) const;
    // Air-region solution, continued below the membrane surface into the sliver.
    double value_air(double x, double y, double z) const;
    double longitudinal(double z) const;
    // Standing-wave amplitude A_a of the travelling components at the fiber mirror.
    double mirror_amplitude() const;
};

// Integral of n0^2 psi_a psi_b over the cavity.
double basis_overlap(const BasisMode& a, const BasisMode& b);

struct PerturbationBasis {
    GaussianModePair mode;
    BasisMode reference;
    std::vector<BasisMode> modes;  // excludes the reference
};

struct BasisOptions {
    int max_order = 6;
    int longitudinal_neighbours = 2;
    bool even_only = true;  // an axially symmetric sliver couples only even p and q
};

// Basis around the TEM00 mode nearest the given frequency.
PerturbationBasis build_perturbation_basis(const GaussianModePair& mode, double frequency,
                                           const BasisOptions& options = {});

struct QuadratureOptions {
    int radial = 24;
    int axial = 4;
    int azimuthal = 16;
    double tolerance = 1e-2;  // relative change allowed on refinement
    int max_refinements = 4;
};

// Integral of psi_m (n_d^2 - 1) phi00 over the sliver, cylindrical Gauss-Legendre
// quadrature refined until successive estimates agree.
double coupling_coefficient(const BasisMode& m, const BasisMode& reference, const PerturbationVolume& volume,
                            const QuadratureOptions& options = {});

struct MixingTerm {
    BasisMode mode;
    double coupling = 0.0;
    double coefficient = 0.0;  // kappa00 * coupling / (kappa_m - kappa00)
};

struct PerturbedState {
    BasisMode reference;
    std::vector<MixingTerm> terms;
    double correction_norm = 0.0;  // ||psi1||
    bool perturbative = true;      // correction_norm below perturbative_limit
    double length = 0.0;

    static constexpr double perturbative_limit = 0.3;
};

PerturbedState unperturbed_state(const PerturbationBasis& basis);

// First-order state. Throws DegeneracyError when |kappa_m - kappa00| / kappa00 falls
// below the threshold.
PerturbedState perturbed_state(const PerturbationBasis& basis, const PerturbationVolume& volume,
                               double degeneracy_threshold = 1e-6, const QuadratureOptions& options = {});

// Round-trip loss from light outside a hard aperture on the fiber mirror: twice the
// outside fraction of the travelling-wave intensity at z = L.
double clipping_loss(const PerturbedState& state, double aperture_radius);

struct ClippingPoint {
    double length = 0.0;  // a TEM00 resonance with the sweep wavelength
    int longitudinal_index = 0;
    bool valid = false;
    std::string error;              // set for points that failed (degeneracy, stability)
    double correction_norm = 0.0;
    double mirror_beam_radius = 0.0;
    double nearest_gap = 0.0;       // smallest |kappa_m - kappa00| / kappa00 in the basis
    std::string nearest_mode;
    std::vector<double> loss;     // per aperture radius
    std::vector<double> finesse;  // per aperture radius
};

struct ClippingSweepOptions {
    double wavelength = 637e-9;
    double degeneracy_threshold = 1e-6;
    bool include_mirror_transmission = true;
    BasisOptions basis;
    QuadratureOptions quadrature;
};

// F(L) = 2 pi / (T_flat + T_fiber + round-trip clipping loss), evaluated at every
// length in [length_lo, length_hi] where the fundamental is resonant.
std::vector<ClippingPoint> finesse_vs_length_with_clipping(const CavityConfig& cfg, double length_lo,
                                                           double length_hi, const std::vector<double>& aperture_radii,
                                                           const ClippingSweepOptions& options = {}, int jobs = 1);

}  // namespace fpcav
