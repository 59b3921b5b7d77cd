#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "fpcav/gaussian_modes.hpp"
#include "fpcav/kernels/stack_kernel.hpp"
#include "fpcav/matrix2.hpp"
#include "fpcav/media.hpp"

namespace fpcav {

// Flat mirror (with the membrane bonded to it) on the left at z < 0, membrane on
// [0, t_d], air gap on [t_d, L], fiber mirror beyond L. Light enters from the flat
// mirror substrate.
struct CavityConfig {
    MirrorStack fiber_mirror = CoatingDesign{}.build();
    MirrorStack flat_mirror = CoatingDesign{}.build();
    OpticalMedium membrane{2.417};
    double membrane_thickness = 10.5e-6;
    double length = 22e-6;
    double fiber_roc = 61e-6;
    double sigma_air_diamond = 0.0;
    double sigma_diamond_mirror = 0.0;
    bool guoy_enabled = true;

    void validate() const;
    CavityConfig with_length(double L) const;
    // Optical length L + (n_d - 1) t_d.
    double optical_length() const { return length + (membrane.real() - 1.0) * membrane_thickness; }
};

TransferMatrix propagation_matrix(const OpticalMedium& medium, double distance, double wavelength,
                                  double guoy_phase = 0.0);

// General interface from medium i to medium j given both scattering directions.
TransferMatrix interface_matrix(const InterfaceCoefficients& ij, const InterfaceCoefficients& ji);
TransferMatrix interface_matrix(const RoughInterface& iface, double wavelength);

enum class StackDirection { SubstrateToAmbient, AmbientToSubstrate };

kernels::StackProgram stack_program(const MirrorStack& stack, const OpticalMedium& ambient, StackDirection dir);
TransferMatrix stack_matrix(const MirrorStack& stack, const OpticalMedium& ambient, double wavelength,
                            StackDirection dir);
std::vector<TransferMatrix> stack_matrices(const MirrorStack& stack, const OpticalMedium& ambient,
                                           std::span<const double> wavelengths, StackDirection dir);

struct AmplitudeResponse {
    Complex r;
    Complex t;
};

struct PowerResponse {
    double T = 0.0;
    double R = 0.0;
};

// Incidence from the left of M (no light entering from the right).
AmplitudeResponse left_incidence(const TransferMatrix& m);
// Reflection for light arriving from the right of M.
Complex right_reflection(const TransferMatrix& m);

// Power response of a stack for light arriving from its substrate.
PowerResponse stack_response(const MirrorStack& stack, const OpticalMedium& ambient, double wavelength);

// Gouy phases of the membrane and air segments. Zero when disabled.
struct GouyPhases {
    double diamond = 0.0;
    double air = 0.0;
};

GouyPhases gouy_phases(const GaussianModePair& mode);
// Phases of the matched mode at length L (wavelength independent); zero if Gouy is off.
GouyPhases gouy_phases_for(const CavityConfig& cfg, double L);
std::optional<GaussianModePair> resolve_mode(const CavityConfig& cfg, double wavelength);

// Wavelength-dependent but length-independent pieces of the cavity model.
struct CavityOptics {
    double wavelength = 0.0;
    TransferMatrix flat_stack;   // flat-mirror substrate -> air
    TransferMatrix fiber_stack;  // air -> fiber substrate
    TransferMatrix entry;        // air -> membrane at the flat mirror (sigma_dm)
    TransferMatrix exit;         // membrane -> air at the membrane surface (sigma_ad)
    double n_in = 1.0;
    double n_out = 1.0;
};

CavityOptics cavity_optics(const CavityConfig& cfg, double wavelength);
std::vector<CavityOptics> cavity_optics(const CavityConfig& cfg, std::span<const double> wavelengths);

// Everything left of the air gap: flat substrate -> membrane surface (air side).
TransferMatrix left_structure(const CavityConfig& cfg, const CavityOptics& optics, const GouyPhases& g);
TransferMatrix system_matrix(const CavityConfig& cfg, const CavityOptics& optics, double L, const GouyPhases& g);
PowerResponse power_response(const CavityOptics& optics, const TransferMatrix& S);

// Round-trip amplitude in the air gap at the membrane surface.
Complex round_trip(const CavityConfig& cfg, const CavityOptics& optics, double L, const GouyPhases& g);

// S = M_amg L_a D_da L_d D_ad M_gma. Gouy phases are inserted when a mode is given.
TransferMatrix cavity_system_matrix(const CavityConfig& cfg, const std::optional<GaussianModePair>& mode,
                                    double wavelength);

PowerResponse response(const CavityConfig& cfg, const std::optional<GaussianModePair>& mode, double L,
                       double frequency);

// ---------------------------------------------------------------------------
// Resonance scans

enum class ScanAxis { Length, Frequency };

struct ResonancePeak {
    ScanAxis axis = ScanAxis::Length;
    double position = 0.0;  // m or Hz
    double fwhm = 0.0;
    double fsr = 0.0;
    double finesse = 0.0;
    double character = 0.0;  // fraction of field energy inside the membrane
    double peak_transmission = 0.0;
};

struct SpectralTrace {
    ScanAxis axis = ScanAxis::Length;
    std::vector<double> x;
    std::vector<double> T;
    std::vector<double> R;
};

struct ScanResult {
    std::vector<ResonancePeak> peaks;
    SpectralTrace trace;
};

struct PeakShape {
    double position;
    double peak;
    double fwhm;
};

// Half-maximum width of a single peak near x0 from quadratic interpolation of the
// crossings on a grid refined until the width changes by less than rel_tol.
PeakShape measure_peak(const std::function<double(double)>& f, double x0, double width_guess,
                       double rel_tol = 1e-3, int max_points = 1 << 17);

// Resonances along the axis inside [lo, hi]; the other coordinate is fixed.
std::vector<double> resonance_positions(const CavityConfig& cfg, ScanAxis axis, double fixed, double lo, double hi);

// Resonance nearest to `guess` with FWHM, local FSR and character.
ResonancePeak analyse_resonance(const CavityConfig& cfg, ScanAxis axis, double fixed, double guess);

ScanResult scan_resonances(const CavityConfig& cfg, ScanAxis axis, double fixed, double lo, double hi,
                           int samples);

// Fraction of the intracavity energy (integral of n^2 |E|^2) inside the membrane.
double mode_character(const CavityConfig& cfg, double L, double frequency);

enum class Region { FlatMirror, Membrane, Air, FiberMirror };

struct FieldSegment {
    Region region;
    double z0;
    double z1;
    Complex index;
    FieldAmplitudes start;  // amplitudes just inside the segment at z0
};

// Standing-wave field for unit incident amplitude from the flat-mirror substrate.
class CavityField {
public:
    CavityField(const CavityConfig& cfg, const std::optional<GaussianModePair>& mode, double L, double frequency,
                bool include_mirrors = true);

    Complex operator()(double z) const;
    Complex field_in(const FieldSegment& seg, double z) const;

    const std::vector<FieldSegment>& segments() const { return segments_; }
    double wavelength() const { return wavelength_; }
    Complex round_trip() const { return rho_; }
    const std::optional<GaussianModePair>& mode() const { return mode_; }

    FieldAmplitudes flat_air_side, flat_diamond_side, surface_diamond_side, surface_air_side;
    Complex reflection;
    Complex transmission;

private:
    double guoy(const FieldSegment& seg, double z) const;

    CavityConfig cfg_;
    std::optional<GaussianModePair> mode_;
    double wavelength_;
    Complex rho_;
    std::vector<FieldSegment> segments_;
};

struct FieldSample {
    double z;
    Complex field;  // forward + backward
    double index;   // real part of the local index
};

struct FieldProfile {
    std::vector<FieldSample> samples;
    double interface_field = 0.0;      // |E| at the membrane surface (air side)
    double interface_intensity = 0.0;  // |E|^2 there over the air standing-wave maximum
    double flat_mirror_field = 0.0;    // |E| at the flat-mirror surface (z = 0)
    double max_diamond_field = 0.0;
    double max_diamond_position = 0.0;
    double max_air_field = 0.0;
    double energy_diamond = 0.0;  // integral of n^2 |E|^2 over the membrane
    double energy_air = 0.0;
    double energy_mirrors = 0.0;
    bool off_resonance = false;
    // Field amplitudes (forward, backward) on both sides of the two membrane interfaces.
    FieldAmplitudes flat_air_side, flat_diamond_side, surface_diamond_side, surface_air_side;
};

struct FieldSampling {
    int points_per_half_wave = 24;
    bool include_mirrors = true;
};

FieldProfile intracavity_field_profile(const CavityConfig& cfg, const std::optional<GaussianModePair>& mode,
                                       double L, double frequency, const FieldSampling& sampling = {});

// Finesse along the resonance branch: for every wavelength the resonance closest to
// the configured length is analysed on the length axis.
struct FinessePoint {
    double wavelength = 0.0;
    double length = 0.0;
    double finesse = 0.0;
    double fwhm = 0.0;
    double fsr = 0.0;
    double character = 0.0;
    double peak_transmission = 0.0;
    double interface_intensity = 0.0;
};

std::vector<FinessePoint> finesse_vs_wavelength(const CavityConfig& cfg, double lambda_lo, double lambda_hi,
                                                int points, int jobs = 1);

std::vector<FinessePoint> finesse_vs_length(const CavityConfig& cfg, double wavelength, double L_lo, double L_hi,
                                            int points, int jobs = 1);

// Transmission map T(L, nu): for each length the frequency-axis resonances are located and
// every bin holds the bin average of their Lorentzians (peak height from the model, width
// from the round-trip magnitude and phase slope). Narrow lines are therefore never missed.
struct SpectrumMap {
    std::vector<double> lengths;
    std::vector<double> frequencies;  // bin centres
    std::vector<double> transmission;  // lengths.size() x frequencies.size(), row-major
    double bin_width = 0.0;
};

SpectrumMap spectrum_map(const CavityConfig& cfg, double L_lo, double L_hi, int length_points, double nu_lo,
                         double nu_hi, int frequency_bins, int jobs = 1);

}  // namespace fpcav
