#include "fpcav/perturbation.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "fpcav/numerics.hpp"
#include "fpcav/parallel.hpp"

namespace fpcav {

double PerturbationVolume::surface(double r) const {
    if (!std::isfinite(interface_roc)) return membrane_thickness;
    const double R = interface_roc;
    if (r >= std::abs(R)) throw InvalidConfigError("radius outside the curved interface");
    // Stable form of t - (R - sqrt(R^2 - r^2)).
    return membrane_thickness - r * r / (R + std::copysign(std::sqrt(R * R - r * r), R));
}

double PerturbationVolume::volume() const {
    if (!std::isfinite(interface_roc) || membrane_thickness <= 0.0) return 0.0;
    const double R = std::abs(interface_roc);
    const double a = radial_extent;
    // 2 pi * integral of r (R - sqrt(R^2 - r^2)) dr from 0 to a.
    const double s = std::sqrt(R * R - a * a);
    return 2.0 * kPi * (0.5 * R * a * a - (R * R * R - s * s * s) / 3.0);
}

PerturbationVolume PerturbationVolume::from_mode(const GaussianModePair& mode, double radial_extent) {
    PerturbationVolume v;
    v.membrane_thickness = mode.membrane_thickness;
    v.interface_roc = mode.membrane_thickness > 0.0 ? mode.interface_roc : std::numeric_limits<double>::infinity();
    v.contrast = mode.membrane_index * mode.membrane_index - 1.0;
    const double w = mode.membrane_thickness > 0.0 ? mode.beam_radius_air(mode.membrane_thickness) : mode.w1;
    double extent = radial_extent > 0.0 ? radial_extent : 6.0 * w;
    if (std::isfinite(v.interface_roc)) extent = std::min(extent, 0.99 * std::abs(v.interface_roc));
    v.radial_extent = extent;
    return v;
}

double BasisMode::value(double x, double y, double z) const {
    double s = 0.0;
    for (size_t i = 0; i < parts.size(); ++i) s += weights[i] * parts[i].value(x, y, z);
    return s;
}

double BasisMode::value_air(double x, double y, double z) const {
    // Parts share p, q and the beam, so the transverse factor is common.
    double g = 0.0;
    for (size_t i = 0; i < parts.size(); ++i) g += weights[i] * parts[i].longitudinal_air(z);
    return parts.front().transverse_air(x, y, z) * g;
}

double BasisMode::longitudinal(double z) const {
    double g = 0.0;
    for (size_t i = 0; i < parts.size(); ++i) g += weights[i] * parts[i].longitudinal(z);
    return g;
}

double BasisMode::mirror_amplitude() const {
    double a = 0.0;
    for (size_t i = 0; i < parts.size(); ++i) a += weights[i] * parts[i].amp_air;
    return a;
}

double basis_overlap(const BasisMode& a, const BasisMode& b) {
    if (a.index.p != b.index.p || a.index.q != b.index.q) return 0.0;
    double s = 0.0;
    for (size_t i = 0; i < a.parts.size(); ++i)
        for (size_t j = 0; j < b.parts.size(); ++j)
            s += a.weights[i] * b.weights[j] * longitudinal_overlap(a.parts[i], b.parts[j]);
    return s;
}

namespace {

// Symmetric (Loewdin) orthonormalisation of one transverse family.
std::vector<BasisMode> orthonormalise(const std::vector<HGBasisMode>& family) {
    const int n = static_cast<int>(family.size());
    Eigen::MatrixXd S(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) S(i, j) = S(j, i) = longitudinal_overlap(family[i], family[j]);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
    const Eigen::MatrixXd C = es.operatorInverseSqrt();
    std::vector<BasisMode> out;
    for (int i = 0; i < n; ++i) {
        BasisMode b;
        b.index = family[i].index;
        b.frequency = family[i].frequency;
        b.kappa = family[i].kappa;
        b.parts = family;
        for (int j = 0; j < n; ++j) b.weights.push_back(C(i, j));
        out.push_back(std::move(b));
    }
    return out;
}

}  // namespace

PerturbationBasis build_perturbation_basis(const GaussianModePair& mode, double frequency,
                                           const BasisOptions& options) {
    if (options.max_order < 0 || options.longitudinal_neighbours < 1)
        throw InvalidConfigError("basis needs max_order >= 0 and at least one longitudinal neighbour");
    PerturbationBasis basis;
    basis.mode = mode;
    const int m0 = nearest_longitudinal_index(mode, 0, frequency);
    const double nu00 = hg_resonance_frequency(mode, 0, m0);

    for (int N = 0; N <= options.max_order; ++N) {
        for (int p = N; p >= 0; --p) {
            const int q = N - p;
            if (options.even_only && (p % 2 != 0 || q % 2 != 0)) continue;
            const int mc = nearest_longitudinal_index(mode, N, nu00);
            std::vector<std::pair<double, int>> cand;
            for (int m = std::max(1, mc - options.longitudinal_neighbours - 1);
                 m <= mc + options.longitudinal_neighbours + 1; ++m) {
                if (N == 0 && m == m0) continue;
                cand.emplace_back(std::abs(hg_resonance_frequency(mode, N, m) - nu00), m);
            }
            std::sort(cand.begin(), cand.end());
            std::vector<HGBasisMode> family;
            if (N == 0) family.push_back(make_hg_mode({0, 0, m0}, mode));
            for (int k = 0; k < options.longitudinal_neighbours && k < static_cast<int>(cand.size()); ++k)
                family.push_back(make_hg_mode({p, q, cand[static_cast<size_t>(k)].second}, mode));
            for (auto& b : orthonormalise(family)) {
                if (N == 0 && b.index.m == m0)
                    basis.reference = std::move(b);
                else
                    basis.modes.push_back(std::move(b));
            }
        }
    }
    return basis;
}

namespace {

struct QuadratureEstimate {
    double value;
    double magnitude;  // same rule applied to |integrand|
};

QuadratureEstimate sliver_integral(const BasisMode& m, const BasisMode& ref, const PerturbationVolume& vol,
                                   int nr, int nz, int nt) {
    const auto gr = numerics::gauss_legendre(nr);
    const auto gz = numerics::gauss_legendre(nz);
    const double a = vol.radial_extent;
    double sum = 0.0, mag = 0.0;
    for (int i = 0; i < nr; ++i) {
        const double r = 0.5 * a * (gr.nodes[static_cast<size_t>(i)] + 1.0);
        const double wr = 0.5 * a * gr.weights[static_cast<size_t>(i)];
        const double z0 = vol.surface(r);
        const double depth = vol.membrane_thickness - z0;
        if (depth <= 0.0) continue;
        for (int k = 0; k < nz; ++k) {
            const double z = z0 + 0.5 * depth * (gz.nodes[static_cast<size_t>(k)] + 1.0);
            const double wz = 0.5 * depth * gz.weights[static_cast<size_t>(k)];
            double ring = 0.0, ring_abs = 0.0;
            for (int j = 0; j < nt; ++j) {
                // Trapezoid in angle is exact for the trigonometric polynomials involved.
                const double th = 2.0 * kPi * (j + 0.5) / nt;
                const double x = r * std::cos(th), y = r * std::sin(th);
                const double f = m.value_air(x, y, z) * ref.value_air(x, y, z);
                ring += f;
                ring_abs += std::abs(f);
            }
            const double w = wr * wz * r * 2.0 * kPi / nt * vol.contrast;
            sum += w * ring;
            mag += std::abs(w) * ring_abs;
        }
    }
    return {sum, mag};
}

}  // namespace

double coupling_coefficient(const BasisMode& m, const BasisMode& reference, const PerturbationVolume& volume,
                            const QuadratureOptions& options) {
    if (volume.contrast == 0.0 || volume.membrane_thickness <= 0.0 || !std::isfinite(volume.interface_roc))
        return 0.0;
    // Angular resolution must cover the highest azimuthal harmonic exactly.
    const int harmonics = m.index.order() + reference.index.order();
    const int nt = std::max(options.azimuthal, 2 * harmonics + 4);
    int nr = options.radial, nz = options.axial;
    auto prev = sliver_integral(m, reference, volume, nr, nz, nt);
    for (int k = 0; k < options.max_refinements; ++k) {
        nr *= 2;
        nz *= 2;
        const auto next = sliver_integral(m, reference, volume, nr, nz, nt);
        const double scale = std::max(std::abs(next.value), 1e-9 * next.magnitude);
        if (std::abs(next.value - prev.value) <= options.tolerance * scale) return next.value;
        prev = next;
    }
    throw AccuracyError("coupling integral for " + m.index.label() + " did not converge");
}

PerturbedState unperturbed_state(const PerturbationBasis& basis) {
    PerturbedState s;
    s.reference = basis.reference;
    s.length = basis.mode.length;
    return s;
}

PerturbedState perturbed_state(const PerturbationBasis& basis, const PerturbationVolume& volume,
                               double degeneracy_threshold, const QuadratureOptions& options) {
    PerturbedState s = unperturbed_state(basis);
    const double k00 = basis.reference.kappa;
    double norm2 = 0.0;
    for (const auto& m : basis.modes) {
        const double gap = (m.kappa - k00) / k00;
        if (std::abs(gap) < degeneracy_threshold) {
            std::ostringstream msg;
            msg << "mode " << m.index.label() << " is degenerate with the fundamental at L = " << basis.mode.length
                << " m (relative gap " << gap << ")";
            throw DegeneracyError(msg.str(), m.index.label(), basis.mode.length);
        }
        MixingTerm t;
        t.mode = m;
        t.coupling = coupling_coefficient(m, basis.reference, volume, options);
        t.coefficient = k00 * t.coupling / (m.kappa - k00);
        norm2 += t.coefficient * t.coefficient;
        s.terms.push_back(std::move(t));
    }
    s.correction_norm = std::sqrt(norm2);
    s.perturbative = s.correction_norm < PerturbedState::perturbative_limit;
    return s;
}

double clipping_loss(const PerturbedState& state, double aperture_radius) {
    if (!(aperture_radius > 0.0)) throw InvalidConfigError("aperture radius must be positive");
    if (std::isinf(aperture_radius)) return 0.0;
    const auto& mode = state.reference.parts.front().mode;
    const double w = mode.beam_radius_air(mode.length);

    // Amplitude per transverse profile at the mirror plane.
    std::map<std::pair<int, int>, double> amp;
    amp[{0, 0}] += state.reference.mirror_amplitude();
    for (const auto& t : state.terms) amp[{t.mode.index.p, t.mode.index.q}] += t.coefficient * t.mode.mirror_amplitude();

    double total = 0.0;
    int top = 0;
    for (const auto& [pq, a] : amp) {
        total += a * a;
        top = std::max(top, pq.first + pq.second);
    }
    if (total <= 0.0) return 0.0;

    auto intensity = [&](double x, double y) {
        double e = 0.0;
        for (const auto& [pq, a] : amp) e += a * hermite_gauss_1d(pq.first, x, w) * hermite_gauss_1d(pq.second, y, w);
        return e * e;
    };
    const int nt = 4 * top + 8;
    static const numerics::QuadratureRule rule = numerics::gauss_legendre(10);
    auto ring = [&](double r) {
        double s = 0.0;
        for (int j = 0; j < nt; ++j) {
            const double th = 2.0 * kPi * (j + 0.5) / nt;
            s += intensity(r * std::cos(th), r * std::sin(th));
        }
        return s * 2.0 * kPi / nt * r;
    };
    const double reach = std::max(aperture_radius, w) + 12.0 * w;
    const double outside = numerics::integrate_panels(ring, aperture_radius, reach, 0.25 * w, rule);
    return 2.0 * std::clamp(outside / total, 0.0, 1.0);
}

std::vector<ClippingPoint> finesse_vs_length_with_clipping(const CavityConfig& cfg, double length_lo,
                                                           double length_hi, const std::vector<double>& aperture_radii,
                                                           const ClippingSweepOptions& options, int jobs) {
    if (!(length_hi > length_lo)) throw InvalidConfigError("clipping sweep length range must be increasing");
    if (aperture_radii.empty()) throw InvalidConfigError("clipping sweep needs at least one aperture radius");
    for (double a : aperture_radii)
        if (!(a > 0.0)) throw InvalidConfigError("aperture radius must be positive");

    const double lambda = options.wavelength;
    const double nu = kSpeedOfLight / lambda;
    double mirror_T = 0.0;
    if (options.include_mirror_transmission)
        mirror_T = stack_response(cfg.flat_mirror, kAir, lambda).T + stack_response(cfg.fiber_mirror, kAir, lambda).T;

    cfg.with_length(length_hi).validate();
    const auto lengths = fundamental_resonance_lengths(cfg.fiber_roc, cfg.membrane_thickness, cfg.membrane.real(),
                                                       lambda, length_lo, length_hi);
    std::vector<ClippingPoint> out(lengths.size());
    parallel_for(out.size(), jobs, [&](size_t i) {
        ClippingPoint& pt = out[i];
        pt.length = lengths[i];
        try {
            const CavityConfig c = cfg.with_length(pt.length);
            c.validate();
            const auto mode = match_membrane_cavity_mode(c.fiber_roc, c.length, c.membrane_thickness,
                                                         c.membrane.real(), lambda);
            const auto basis = build_perturbation_basis(mode, nu, options.basis);
            pt.longitudinal_index = basis.reference.index.m;
            pt.nearest_gap = std::numeric_limits<double>::infinity();
            for (const auto& m : basis.modes) {
                const double gap = std::abs(m.kappa - basis.reference.kappa) / basis.reference.kappa;
                if (gap < pt.nearest_gap) {
                    pt.nearest_gap = gap;
                    pt.nearest_mode = m.index.label();
                }
            }
            const auto vol = PerturbationVolume::from_mode(mode);
            const auto state = perturbed_state(basis, vol, options.degeneracy_threshold, options.quadrature);
            pt.correction_norm = state.correction_norm;
            pt.mirror_beam_radius = mode.fiber_mirror_radius();
            for (double a : aperture_radii) {
                const double loss = clipping_loss(state, a);
                pt.loss.push_back(loss);
                const double total = loss + mirror_T;
                pt.finesse.push_back(total > 0.0 ? 2.0 * kPi / total : std::numeric_limits<double>::infinity());
            }
            pt.valid = true;
        } catch (const DegeneracyError& e) {
            pt.error = e.what();
        } catch (const StabilityError& e) {
            pt.error = e.what();
        }
    });
    return out;
}

}  // namespace fpcav
