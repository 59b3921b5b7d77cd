#include "fpcav/gaussian_modes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "fpcav/numerics.hpp"

namespace fpcav {

double GaussianModePair::diamond_rayleigh() const { return kPi * w1 * w1 * membrane_index / wavelength; }
double GaussianModePair::air_rayleigh() const { return kPi * w2 * w2 / wavelength; }

double GaussianModePair::beam_radius_diamond(double z) const {
    const double zr = diamond_rayleigh();
    return w1 * std::sqrt(1.0 + (z / zr) * (z / zr));
}

double GaussianModePair::beam_radius_air(double z) const {
    const double zr = air_rayleigh();
    const double u = (z - x02) / zr;
    return w2 * std::sqrt(1.0 + u * u);
}

double GaussianModePair::beam_radius(double z) const {
    return z < membrane_thickness ? beam_radius_diamond(z) : beam_radius_air(z);
}

double GaussianModePair::wavefront_roc_diamond(double z) const {
    if (z == 0.0) return std::numeric_limits<double>::infinity();
    const double zr = diamond_rayleigh();
    return z + zr * zr / z;
}

double GaussianModePair::wavefront_roc_air(double z) const {
    const double u = z - x02;
    if (u == 0.0) return std::numeric_limits<double>::infinity();
    const double zr = air_rayleigh();
    return u + zr * zr / u;
}

double GaussianModePair::guoy_diamond(double z) const { return std::atan(z / diamond_rayleigh()); }
double GaussianModePair::guoy_air(double z) const { return std::atan((z - x02) / air_rayleigh()); }

GaussianModePair GaussianModePair::at_wavelength(double lambda) const {
    GaussianModePair out = *this;
    const double s = std::sqrt(lambda / wavelength);
    out.w1 *= s;
    out.w2 *= s;
    out.wavelength = lambda;
    return out;
}

ModeMatchResiduals boundary_residuals(const GaussianModePair& m) {
    const double t = m.membrane_thickness;
    ModeMatchResiduals r{};
    if (t > 0.0) {
        const double wd = m.beam_radius_diamond(t);
        const double wa = m.beam_radius_air(t);
        r.radius_mismatch = std::abs(wd - wa) / wd;
        const double cd = 1.0 / m.wavefront_roc_diamond(t);
        const double ca = 1.0 / m.wavefront_roc_air(t);
        r.curvature_mismatch = std::abs(cd - ca) * m.interface_roc;
    }
    r.mirror_curvature = std::abs(m.wavefront_roc_air(m.length) - m.fiber_roc) / m.fiber_roc;
    r.flat_waist = 0.0;
    return r;
}

namespace {

// Complex beam parameter on the air side of the membrane surface for diamond
// Rayleigh range z1 (wavefront-matched interface: equal w and R on both sides).
Complex air_q_at_interface(double z1, double t, double n) {
    return (t * t + z1 * z1) * Complex(t, n * z1) / (t * t + n * n * z1 * z1);
}

}  // namespace

GaussianModePair match_membrane_cavity_mode(double R, double L, double t, double n, double lambda) {
    if (!(lambda > 0.0) || !(L > 0.0) || !(R > 0.0)) throw InvalidConfigError("mode matching needs positive L, R, wavelength");
    if (t < 0.0 || t >= L) throw InvalidConfigError("membrane thickness must lie in [0, L)");
    if (n < 1.0) throw InvalidConfigError("membrane index must be >= 1");

    const double gap = L - t;
    auto mismatch = [&](double log_z1) {
        const double z1 = std::exp(log_z1);
        const Complex q = air_q_at_interface(z1, t, n) + gap;
        return (1.0 / q).real() - 1.0 / R;
    };

    // Small z1: point-like source, curvature 1/L at the mirror. Large z1: plane wave.
    const double lo = std::log(1e-6 * L), hi = std::log(1e6 * L);
    const int samples = 480;
    double prev_x = lo, prev_f = mismatch(lo);
    double root = std::numeric_limits<double>::quiet_NaN();
    for (int i = 1; i <= samples; ++i) {
        const double x = lo + (hi - lo) * i / samples;
        const double f = mismatch(x);
        if ((prev_f > 0.0) != (f > 0.0)) {
            root = numerics::find_root(mismatch, prev_x, x, prev_f, f, 1e-15);
            break;
        }
        prev_x = x;
        prev_f = f;
    }
    if (!std::isfinite(root)) {
        throw StabilityError("no matched Gaussian mode: fiber-mirror curvature R=" + std::to_string(R * 1e6) +
                             " um cannot be matched at the fiber mirror for L=" + std::to_string(L * 1e6) +
                             " um, t_d=" + std::to_string(t * 1e6) + " um (beam radius diverges)");
    }

    const double z1 = std::exp(root);
    const Complex qa = air_q_at_interface(z1, t, n);
    GaussianModePair m;
    m.wavelength = lambda;
    m.membrane_thickness = t;
    m.membrane_index = n;
    m.length = L;
    m.fiber_roc = R;
    m.w1 = std::sqrt(z1 * lambda / (kPi * n));
    m.w2 = std::sqrt(qa.imag() * lambda / kPi);
    m.x02 = t - qa.real();
    m.interface_roc = t > 0.0 ? (t * t + z1 * z1) / t : std::numeric_limits<double>::infinity();
    return m;
}

double guoy_phase(double x, double w, double lambda, double index) {
    if (!(w > 0.0)) throw InvalidConfigError("guoy_phase: waist must be positive");
    return std::atan(x * (lambda / index) / (kPi * w * w));
}

double effective_roc(double L, double dnu, double fsr) {
    if (!(dnu > 0.0 && dnu < fsr)) throw DegenerateGeometryError("effective_roc: transverse spacing must lie in (0, FSR)");
    const double c = std::cos(kPi * dnu / fsr);
    const double s2 = 1.0 - c * c;
    if (s2 <= 0.0) throw DegenerateGeometryError("effective_roc: degenerate transverse spacing");
    return L / s2;
}

double transverse_spacing_from_roc(double L, double R, double fsr) {
    if (!(R >= L)) throw DegenerateGeometryError("transverse_spacing_from_roc: R must be >= L");
    return fsr * std::acos(std::sqrt(1.0 - L / R)) / kPi;
}

std::string HGModeIndex::label() const {
    return "TEM" + std::to_string(p) + std::to_string(q) + "[m=" + std::to_string(m) + "]";
}

double hermite_gauss_1d(int n, double x, double w) {
    const double s = std::sqrt(2.0) * x / w;
    // Normalised Hermite functions by upward recurrence.
    double h0 = std::pow(kPi, -0.25) * std::exp(-0.5 * s * s);
    double h = h0;
    if (n > 0) {
        double hm1 = h0;
        h = std::sqrt(2.0) * s * h0;
        for (int k = 2; k <= n; ++k) {
            const double next = std::sqrt(2.0 / k) * s * h - std::sqrt((k - 1.0) / k) * hm1;
            hm1 = h;
            h = next;
        }
    }
    return h * std::sqrt(std::sqrt(2.0) / w);
}

namespace {

struct Phases {
    double diamond;
    double air;
};

Phases segment_phases(const GaussianModePair& mode, int order, double k) {
    const double t = mode.membrane_thickness;
    const double n = mode.membrane_index;
    const double g = order + 1.0;
    const double phi1 = t > 0.0 ? mode.guoy_diamond(t) : 0.0;
    return {k * n * t - g * phi1, k * (mode.length - t) - g * mode.guoy_air_segment()};
}

// Continuous branch of atan(tan(theta) / n).
double chi(double theta, double n) {
    const double m = std::round(theta / kPi);
    return std::atan(std::tan(theta - m * kPi) / n) + m * kPi;
}

}  // namespace

double hg_phase_index(const GaussianModePair& mode, int order, double frequency) {
    const double k = 2.0 * kPi * frequency / kSpeedOfLight;
    const auto ph = segment_phases(mode, order, k);
    return (ph.air + chi(ph.diamond, mode.membrane_index)) / kPi;
}

double hg_resonance_frequency(const GaussianModePair& mode, int order, int m) {
    const double L_opt = mode.length + (mode.membrane_index - 1.0) * mode.membrane_thickness;
    const double fsr = kSpeedOfLight / (2.0 * L_opt);
    auto f = [&](double nu) { return hg_phase_index(mode, order, nu) - m; };
    // Phase index grows by ~1 per average FSR and never by more than the bracket.
    double lo = std::max(1.0, (m - 3.0 - order) * fsr);
    double hi = (m + 3.0 + order) * fsr;
    double flo = f(lo), fhi = f(hi);
    while (flo > 0.0) {
        lo *= 0.5;
        flo = f(lo);
    }
    while (fhi < 0.0) {
        hi *= 1.5;
        fhi = f(hi);
    }
    return numerics::find_root(f, lo, hi, flo, fhi, 1e-15);
}

int nearest_longitudinal_index(const GaussianModePair& mode, int order, double frequency) {
    const int guess = static_cast<int>(std::lround(hg_phase_index(mode, order, frequency)));
    int best = guess;
    double best_d = std::numeric_limits<double>::infinity();
    for (int m = guess - 1; m <= guess + 1; ++m) {
        if (m < 1) continue;
        const double d = std::abs(hg_resonance_frequency(mode, order, m) - frequency);
        if (d < best_d) {
            best_d = d;
            best = m;
        }
    }
    return best;
}

std::vector<double> fundamental_resonance_lengths(double R, double t, double n, double lambda, double lo,
                                                  double hi) {
    if (!(hi > lo)) throw InvalidConfigError("length range must be increasing");
    const double nu = kSpeedOfLight / lambda;
    auto index = [&](double L) { return hg_phase_index(match_membrane_cavity_mode(R, L, t, n, lambda), 0, nu); };
    // The phase index grows by one per half wave of length; sample eight times finer.
    const int steps = std::max(2, static_cast<int>(std::ceil((hi - lo) / (lambda / 16.0))));
    std::vector<double> out;
    double x0 = lo, f0 = index(lo);
    for (int i = 1; i <= steps; ++i) {
        const double x1 = lo + (hi - lo) * i / steps;
        const double f1 = index(x1);
        for (double m = std::ceil(f0); m <= f1; m += 1.0) {
            if (m == f0) {
                out.push_back(x0);
                continue;
            }
            auto g = [&](double L) { return index(L) - m; };
            out.push_back(numerics::find_root(g, x0, x1, f0 - m, f1 - m, 1e-15));
        }
        x0 = x1;
        f0 = f1;
    }
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

double HGBasisMode::longitudinal_diamond(double z) const {
    const double g = index.order() + 1.0;
    return amp_diamond * std::sin(wavenumber * mode.membrane_index * z - g * mode.guoy_diamond(z));
}

double HGBasisMode::longitudinal_air(double z) const {
    const double g = index.order() + 1.0;
    const double phase = wavenumber * (mode.length - z) - g * (mode.guoy_air(mode.length) - mode.guoy_air(z));
    return amp_air * std::sin(phase);
}

double HGBasisMode::longitudinal(double z) const {
    return z < mode.membrane_thickness ? longitudinal_diamond(z) : longitudinal_air(z);
}

double HGBasisMode::transverse(double x, double y, double z) const {
    const double w = mode.beam_radius(z);
    return hermite_gauss_1d(index.p, x, w) * hermite_gauss_1d(index.q, y, w);
}

double HGBasisMode::transverse_air(double x, double y, double z) const {
    const double w = mode.beam_radius_air(z);
    return hermite_gauss_1d(index.p, x, w) * hermite_gauss_1d(index.q, y, w);
}

namespace {

// n^2 f over the membrane plus f over the air gap, 8-point panels of a quarter wave.
double cavity_integral(const GaussianModePair& mode, double wavenumber, const numerics::ScalarFn& f) {
    static const numerics::QuadratureRule rule = numerics::gauss_legendre(8);
    const double n = mode.membrane_index;
    const double t = mode.membrane_thickness;
    const double quarter = 0.5 * kPi / wavenumber;
    double sum = 0.0;
    if (t > 0.0) sum += n * n * numerics::integrate_panels(f, 0.0, t, quarter / n, rule);
    sum += numerics::integrate_panels(f, t, mode.length, quarter, rule);
    return sum;
}

}  // namespace

double longitudinal_overlap(const HGBasisMode& a, const HGBasisMode& b) {
    return cavity_integral(a.mode, std::max(a.wavenumber, b.wavenumber),
                           [&](double z) { return a.longitudinal(z) * b.longitudinal(z); });
}

HGBasisMode make_hg_mode(const HGModeIndex& index, const GaussianModePair& mode) {
    if (index.p < 0 || index.q < 0) throw InvalidConfigError("transverse orders must be non-negative");
    if (index.m < 1) throw InvalidConfigError("longitudinal index must be >= 1");
    HGBasisMode b;
    b.index = index;
    b.mode = mode;
    b.frequency = hg_resonance_frequency(mode, index.order(), index.m);
    b.wavenumber = 2.0 * kPi * b.frequency / kSpeedOfLight;
    b.kappa = b.wavenumber * b.wavenumber;

    const double t = mode.membrane_thickness;
    const double n = mode.membrane_index;
    const double g = index.order() + 1.0;
    // Continuity of the standing wave at the membrane surface fixes A_d / A_a.
    double ratio_d = 0.0;
    if (t > 0.0) {
        const double sd = std::sin(b.wavenumber * n * t - g * mode.guoy_diamond(t));
        const double sa = std::sin(b.wavenumber * (mode.length - t) - g * mode.guoy_air_segment());
        ratio_d = std::abs(sd) > 1e-3 ? sa / sd : 0.0;
        if (std::abs(sd) <= 1e-3) {
            // Node at the surface: match slopes instead (k n A_d cos = -k A_a cos).
            const double cd = std::cos(b.wavenumber * n * t - g * mode.guoy_diamond(t));
            const double ca = std::cos(b.wavenumber * (mode.length - t) - g * mode.guoy_air_segment());
            ratio_d = -ca / (n * cd);
        }
    }

    b.amp_air = 1.0;
    b.amp_diamond = ratio_d;
    const double s = 1.0 / std::sqrt(longitudinal_overlap(b, b));
    b.amp_air *= s;
    b.amp_diamond *= s;
    return b;
}

double hg_field(const HGModeIndex& index, const GaussianModePair& mode, double x, double y, double z) {
    return make_hg_mode(index, mode).value(x, y, z);
}

}  // namespace fpcav
