#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fpcav/core.hpp"
#include "fpcav/transfer_matrix.hpp"

namespace fpcav {

// One-dimensional coupled-mirror model of a bare fiber cavity.
struct BareCavityParams {
    double t = 0.0;      // mirror amplitude transmission
    double r = 0.0;      // mirror amplitude reflection (negative by convention)
    double alpha = 0.0;  // loss exponent: round-trip power loss 1 - exp(-2 alpha)
    Complex eta{1.0, 0.0};  // prompt-reflection coupling a + ib
    double eps1 = 1.0;   // fiber / cavity mode overlap
    double eps2 = 1.0;   // cavity / transmitted mode overlap

    // r = -sqrt(1 - t^2 - alpha); validates the result.
    static BareCavityParams from(double t, double alpha, Complex eta, double eps1, double eps2 = 1.0);
    void validate() const;
    double finesse() const { return kPi / (alpha + t * t); }
};

struct LineshapeCoeffs {
    double y0 = 0.0;
    double a1 = 0.0;
    double a2 = 0.0;  // 1/m
    double a3 = 0.0;
    double deltaL = 0.0;  // FWHM in length, m
};

// Coefficients of the expanded lineshapes for the given parameters.
LineshapeCoeffs lineshape_coefficients(const BareCavityParams& p, double wavelength);

double reflection_lineshape(const LineshapeCoeffs& c, double dL);
double transmission_lineshape(const LineshapeCoeffs& c, double dL);

// Length-axis trace: x = detuning from resonance, R = P_r, T = P_t.
SpectralTrace lineshape_forward(const BareCavityParams& p, const std::vector<double>& deltaL_axis, double wavelength);

struct LineshapeFit {
    LineshapeCoeffs coeffs;
    double centre = 0.0;  // fitted resonance position on the trace axis, m
    // Standard errors and covariance in the order y0, a1, a2, a3, deltaL, centre.
    std::array<double, 6> std_error{};
    Eigen::MatrixXd covariance;
    double noise_reflection = 0.0;  // per-sample noise estimated from the wings
    double noise_transmission = 0.0;
    double chi2_per_dof = 0.0;
    int iterations = 0;
    std::vector<double> cost_history;
};

struct LineshapeFitOptions {
    double max_chi2_per_dof = 10.0;
    int max_iterations = 200;
};

// Joint fit: Lorentzian to P_t and Fano form to P_r sharing width and centre.
LineshapeFit fit_lineshapes(const SpectralTrace& trace, const LineshapeFitOptions& options = {});

struct ClosureResiduals {
    std::array<double, 6> values{};  // y0, a1, a2, a3 (relative), finesse (relative), sum rule
    double max() const;
};

ClosureResiduals closure_residuals(const BareCavityParams& p, const LineshapeCoeffs& c, double finesse,
                                   double wavelength);

// Closure of y0..a3, F = pi / (alpha + t^2), t^2 + r^2 + alpha = 1 and eps2 = 1, reduced
// to one equation in t^2 and bracketed on (0, pi / F).
// Throws InconsistentDataError when no physical root exists or when several do.
BareCavityParams solve_bare_cavity_params(const LineshapeCoeffs& coeffs, double finesse, double angular_frequency);

// Every physical root of the same system. Some parameter sets share their coefficients
// with a second physical set (lower t^2 traded against higher alpha and eps1), so the
// data alone cannot always pick one.
std::vector<BareCavityParams> closure_roots(const LineshapeCoeffs& coeffs, double finesse, double angular_frequency);

struct TraceNoise {
    double relative = 0.0;  // std as a fraction of each trace's maximum
    int averages = 1;       // averaging divides the std by sqrt(averages)
    std::uint64_t seed = 0;
};

// Forward model plus additive Gaussian noise, deterministic in the seed.
SpectralTrace synthesize_trace(const BareCavityParams& truth, const std::vector<double>& deltaL_axis,
                               double wavelength, const TraceNoise& noise);
// Transmission-only trace of the cavity model scanned in length.
SpectralTrace synthesize_trace(const CavityConfig& truth, double frequency, const std::vector<double>& length_axis,
                               const TraceNoise& noise);

// ---------------------------------------------------------------------------
// White-light resonance ladder

struct LadderObservation {
    double control = 0.0;    // piezo voltage (or nominal length)
    double frequency = 0.0;  // Hz
};

struct LadderModel {
    double membrane_index = 2.417;
    double membrane_thickness = 10.5e-6;
    std::array<double, 4> piezo{};  // L(v) = c0 + c1 v + c2 v^2 + c3 v^3
    double length(double control) const;
};

struct LadderSynthOptions {
    double control_lo = 0.0;
    double control_hi = 1.0;
    int scans = 40;
    double frequency_lo = 440e12;
    double frequency_hi = 500e12;
    double noise_hz = 0.0;
    std::uint64_t seed = 0;
};

// Resonances of the large-m approximation for each scan.
std::vector<LadderObservation> synthesize_ladder(const LadderModel& truth, const LadderSynthOptions& options);

struct ResonanceLadderFit {
    LadderModel model;
    double thickness_error = 0.0;
    std::array<double, 4> piezo_error{};
    std::vector<double> controls;  // distinct control values, ascending
    std::vector<double> lengths;   // fitted cavity length per control value
    std::vector<int> mode_numbers;  // per observation
    std::vector<double> residuals;  // per observation, Hz
    double residual_rms = 0.0;
    double residual_mean = 0.0;
    Eigen::MatrixXd correlation;  // t_d, c0..c3
    int branches = 0;             // distinct mode numbers observed
    std::string warning;          // identifiability notes, empty when well constrained
};

struct LadderFitOptions {
    double membrane_index = 2.417;
    double thickness_max = 20e-6;
    double thickness_step = 0.01e-6;
};

ResonanceLadderFit fit_resonance_ladder(const std::vector<LadderObservation>& observed,
                                        const LadderFitOptions& options = {});

}  // namespace fpcav
