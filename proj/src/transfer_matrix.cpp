#include "fpcav/transfer_matrix.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fpcav/numerics.hpp"

namespace fpcav {

void CavityConfig::validate() const {
    fiber_mirror.validate();
    flat_mirror.validate();
    if (!(length > 0.0)) throw InvalidConfigError("cavity length must be positive");
    if (membrane_thickness < 0.0) throw InvalidConfigError("membrane thickness must be >= 0");
    if (!(membrane_thickness < length))
        throw InvalidConfigError("invariant violated: membrane thickness t_d must be smaller than cavity length L");
    if (sigma_air_diamond < 0.0 || sigma_diamond_mirror < 0.0)
        throw InvalidConfigError("roughness must be >= 0");
    if (!(fiber_roc > 0.0)) throw InvalidConfigError("fiber mirror radius of curvature must be positive");
    const double limit = length - membrane_thickness * (1.0 - 1.0 / membrane.real());
    if (!(fiber_roc > limit))
        throw StabilityError("unstable geometry: R = " + std::to_string(fiber_roc * 1e6) +
                             " um must exceed L - t_d (1 - 1/n_d) = " + std::to_string(limit * 1e6) + " um");
}

CavityConfig CavityConfig::with_length(double L) const {
    CavityConfig c = *this;
    c.length = L;
    return c;
}

TransferMatrix propagation_matrix(const OpticalMedium& medium, double distance, double wavelength,
                                  double guoy_phase) {
    if (distance < 0.0) throw InvalidConfigError("propagation distance must be >= 0");
    const Complex beta = 2.0 * kPi * medium.index() * distance / wavelength - guoy_phase;
    const Complex i(0.0, 1.0);
    return TransferMatrix::diagonal(std::exp(i * beta), std::exp(-i * beta));
}

TransferMatrix interface_matrix(const InterfaceCoefficients& ij, const InterfaceCoefficients& ji) {
    const Complex inv = 1.0 / ji.t;
    return {(ij.t * ji.t - ij.r * ji.r) * inv, ji.r * inv, -ij.r * inv, inv};
}

TransferMatrix interface_matrix(const RoughInterface& iface, double wavelength) {
    const RoughInterface back(iface.n_j, iface.n_i, iface.sigma);
    return interface_matrix(rough_interface_coefficients(iface, wavelength),
                            rough_interface_coefficients(back, wavelength));
}

namespace {

TransferMatrix fresnel_matrix(const OpticalMedium& a, const OpticalMedium& b) {
    return interface_matrix(fresnel_coefficients(a, b), fresnel_coefficients(b, a));
}

std::vector<const Layer*> ordered_layers(const MirrorStack& stack, StackDirection dir) {
    std::vector<const Layer*> out;
    out.reserve(stack.layers.size());
    for (const auto& l : stack.layers) out.push_back(&l);
    if (dir == StackDirection::AmbientToSubstrate) std::reverse(out.begin(), out.end());
    return out;
}

}  // namespace

kernels::StackProgram stack_program(const MirrorStack& stack, const OpticalMedium& ambient, StackDirection dir) {
    kernels::StackProgram prog;
    const auto layers = ordered_layers(stack, dir);
    OpticalMedium prev = dir == StackDirection::SubstrateToAmbient ? stack.substrate : ambient;
    const OpticalMedium last = dir == StackDirection::SubstrateToAmbient ? ambient : stack.substrate;
    prog.steps.reserve(layers.size());
    for (const Layer* l : layers) {
        prog.steps.push_back({fresnel_matrix(prev, l->medium), l->medium.real(), l->medium.imag(), l->thickness});
        prev = l->medium;
    }
    prog.exit = fresnel_matrix(prev, last);
    return prog;
}

std::vector<TransferMatrix> stack_matrices(const MirrorStack& stack, const OpticalMedium& ambient,
                                           std::span<const double> wavelengths, StackDirection dir) {
    const auto prog = stack_program(stack, ambient, dir);
    std::vector<TransferMatrix> out(wavelengths.size());
    kernels::evaluate_stack(prog, wavelengths, out);
    return out;
}

TransferMatrix stack_matrix(const MirrorStack& stack, const OpticalMedium& ambient, double wavelength,
                            StackDirection dir) {
    const double lam[1] = {wavelength};
    return stack_matrices(stack, ambient, lam, dir).front();
}

AmplitudeResponse left_incidence(const TransferMatrix& m) {
    return {-m.m21 / m.m22, m.det() / m.m22};
}

Complex right_reflection(const TransferMatrix& m) { return m.m12 / m.m22; }

PowerResponse stack_response(const MirrorStack& stack, const OpticalMedium& ambient, double wavelength) {
    const auto m = stack_matrix(stack, ambient, wavelength, StackDirection::SubstrateToAmbient);
    const auto a = left_incidence(m);
    return {std::norm(a.t) * ambient.real() / stack.substrate.real(), std::norm(a.r)};
}

GouyPhases gouy_phases(const GaussianModePair& mode) {
    GouyPhases g;
    g.diamond = mode.membrane_thickness > 0.0 ? mode.guoy_diamond(mode.membrane_thickness) : 0.0;
    g.air = mode.guoy_air_segment();
    return g;
}

GouyPhases gouy_phases_for(const CavityConfig& cfg, double L) {
    if (!cfg.guoy_enabled) return {};
    return gouy_phases(match_membrane_cavity_mode(cfg.fiber_roc, L, cfg.membrane_thickness, cfg.membrane.real(),
                                                  637e-9));
}

std::optional<GaussianModePair> resolve_mode(const CavityConfig& cfg, double wavelength) {
    if (!cfg.guoy_enabled) return std::nullopt;
    return match_membrane_cavity_mode(cfg.fiber_roc, cfg.length, cfg.membrane_thickness, cfg.membrane.real(),
                                      wavelength);
}

namespace {

CavityOptics optics_from(const CavityConfig& cfg, double lambda, const TransferMatrix& flat,
                         const TransferMatrix& fiber) {
    CavityOptics o;
    o.wavelength = lambda;
    o.flat_stack = flat;
    o.fiber_stack = fiber;
    o.entry = interface_matrix(RoughInterface(kAir, cfg.membrane, cfg.sigma_diamond_mirror), lambda);
    o.exit = interface_matrix(RoughInterface(cfg.membrane, kAir, cfg.sigma_air_diamond), lambda);
    o.n_in = cfg.flat_mirror.substrate.real();
    o.n_out = cfg.fiber_mirror.substrate.real();
    return o;
}

}  // namespace

std::vector<CavityOptics> cavity_optics(const CavityConfig& cfg, std::span<const double> wavelengths) {
    // The fiber mirror is built as its own reversed stack; inverting the flat-mirror
    // matrix would turn absorption into gain.
    const auto flat = stack_matrices(cfg.flat_mirror, kAir, wavelengths, StackDirection::SubstrateToAmbient);
    const auto fiber = stack_matrices(cfg.fiber_mirror, kAir, wavelengths, StackDirection::AmbientToSubstrate);
    std::vector<CavityOptics> out;
    out.reserve(wavelengths.size());
    for (size_t i = 0; i < wavelengths.size(); ++i) out.push_back(optics_from(cfg, wavelengths[i], flat[i], fiber[i]));
    return out;
}

CavityOptics cavity_optics(const CavityConfig& cfg, double wavelength) {
    const double lam[1] = {wavelength};
    return cavity_optics(cfg, lam).front();
}

TransferMatrix left_structure(const CavityConfig& cfg, const CavityOptics& o, const GouyPhases& g) {
    const auto Ld = propagation_matrix(cfg.membrane, cfg.membrane_thickness, o.wavelength, g.diamond);
    return o.exit * Ld * o.entry * o.flat_stack;
}

TransferMatrix system_matrix(const CavityConfig& cfg, const CavityOptics& o, double L, const GouyPhases& g) {
    const auto La = propagation_matrix(kAir, L - cfg.membrane_thickness, o.wavelength, g.air);
    return o.fiber_stack * La * left_structure(cfg, o, g);
}

PowerResponse power_response(const CavityOptics& o, const TransferMatrix& S) {
    const auto a = left_incidence(S);
    return {std::norm(a.t) * o.n_out / o.n_in, std::norm(a.r)};
}

Complex round_trip(const CavityConfig& cfg, const CavityOptics& o, double L, const GouyPhases& g) {
    const Complex rl = right_reflection(left_structure(cfg, o, g));
    const Complex rr = left_incidence(o.fiber_stack).r;
    const double beta = 2.0 * kPi * (L - cfg.membrane_thickness) / o.wavelength - g.air;
    return rl * rr * std::exp(Complex(0.0, 2.0 * beta));
}

TransferMatrix cavity_system_matrix(const CavityConfig& cfg, const std::optional<GaussianModePair>& mode,
                                    double wavelength) {
    cfg.validate();
    const GouyPhases g = mode ? gouy_phases(*mode) : GouyPhases{};
    return system_matrix(cfg, cavity_optics(cfg, wavelength), cfg.length, g);
}

PowerResponse response(const CavityConfig& cfg, const std::optional<GaussianModePair>& mode, double L,
                       double frequency) {
    const auto c = cfg.with_length(L);
    const double lambda = wavelength_of(frequency);
    c.validate();
    const auto o = cavity_optics(c, lambda);
    const GouyPhases g = mode ? gouy_phases(*mode) : GouyPhases{};
    return power_response(o, system_matrix(c, o, L, g));
}

// ---------------------------------------------------------------------------

CavityField::CavityField(const CavityConfig& cfg, const std::optional<GaussianModePair>& mode, double L,
                         double frequency, bool include_mirrors)
    : cfg_(cfg.with_length(L)), mode_(mode), wavelength_(wavelength_of(frequency)) {
    cfg_.validate();
    const auto o = cavity_optics(cfg_, wavelength_);
    const GouyPhases g = mode_ ? gouy_phases(*mode_) : GouyPhases{};
    const auto S = system_matrix(cfg_, o, L, g);
    const auto amp = left_incidence(S);
    reflection = amp.r;
    transmission = amp.t;
    rho_ = fpcav::round_trip(cfg_, o, L, g);

    const double t_d = cfg_.membrane_thickness;
    FieldAmplitudes v{1.0, amp.r};

    auto walk_stack = [&](const MirrorStack& stack, StackDirection dir, double z_start, Region region,
                          OpticalMedium first) {
        const auto layers = ordered_layers(stack, dir);
        OpticalMedium prev = first;
        double z = z_start;
        for (const Layer* l : layers) {
            v = fresnel_matrix(prev, l->medium).apply(v);
            segments_.push_back({region, z, z + l->thickness, l->medium.index(), v});
            v = propagation_matrix(l->medium, l->thickness, wavelength_).apply(v);
            z += l->thickness;
            prev = l->medium;
        }
        return prev;
    };

    if (include_mirrors) {
        double depth = 0.0;
        for (const auto& l : cfg_.flat_mirror.layers) depth += l.thickness;
        const auto last = walk_stack(cfg_.flat_mirror, StackDirection::SubstrateToAmbient, -depth,
                                     Region::FlatMirror, cfg_.flat_mirror.substrate);
        v = fresnel_matrix(last, kAir).apply(v);
    } else {
        v = o.flat_stack.apply(v);
    }
    flat_air_side = v;
    v = o.entry.apply(v);
    flat_diamond_side = v;
    if (t_d > 0.0) segments_.push_back({Region::Membrane, 0.0, t_d, cfg_.membrane.index(), v});
    v = propagation_matrix(cfg_.membrane, t_d, wavelength_, g.diamond).apply(v);
    surface_diamond_side = v;
    v = o.exit.apply(v);
    surface_air_side = v;
    segments_.push_back({Region::Air, t_d, L, Complex(1.0, 0.0), v});
    v = propagation_matrix(kAir, L - t_d, wavelength_, g.air).apply(v);
    if (include_mirrors) walk_stack(cfg_.fiber_mirror, StackDirection::AmbientToSubstrate, L, Region::FiberMirror, kAir);
}

double CavityField::guoy(const FieldSegment& seg, double z) const {
    if (!mode_) return 0.0;
    if (seg.region == Region::Membrane) return mode_->guoy_diamond(z);
    if (seg.region == Region::Air) return mode_->guoy_air(z) - mode_->guoy_air(seg.z0);
    return 0.0;
}

Complex CavityField::field_in(const FieldSegment& seg, double z) const {
    const Complex beta = 2.0 * kPi * seg.index * (z - seg.z0) / wavelength_ - guoy(seg, z);
    const Complex i(0.0, 1.0);
    return seg.start.forward * std::exp(i * beta) + seg.start.backward * std::exp(-i * beta);
}

Complex CavityField::operator()(double z) const {
    for (const auto& seg : segments_)
        if (z >= seg.z0 && z <= seg.z1) return field_in(seg, z);
    throw InvalidConfigError("field requested outside the modelled structure");
}

FieldProfile intracavity_field_profile(const CavityConfig& cfg, const std::optional<GaussianModePair>& mode, double L,
                                       double frequency, const FieldSampling& sampling) {
    const CavityField field(cfg, mode, L, frequency, sampling.include_mirrors);
    const double lambda = field.wavelength();
    FieldProfile p;
    p.flat_air_side = field.flat_air_side;
    p.flat_diamond_side = field.flat_diamond_side;
    p.surface_diamond_side = field.surface_diamond_side;
    p.surface_air_side = field.surface_air_side;

    const auto& sa = field.surface_air_side;
    p.interface_field = std::abs(sa.forward + sa.backward);
    const double air_max = std::abs(sa.forward) + std::abs(sa.backward);
    p.interface_intensity = air_max > 0.0 ? std::norm(sa.forward + sa.backward) / (air_max * air_max) : 0.0;
    p.flat_mirror_field = std::abs(field.flat_diamond_side.forward + field.flat_diamond_side.backward);

    const int pphw = std::max(4, sampling.points_per_half_wave);
    const FieldSegment* diamond = nullptr;
    for (const auto& seg : field.segments()) {
        const double n = seg.index.real();
        const double len = seg.z1 - seg.z0;
        const int count = std::max(2, static_cast<int>(std::ceil(len / (lambda / (2.0 * n)) * pphw)));
        std::vector<double> w(static_cast<size_t>(count) + 1);
        for (int i = 0; i <= count; ++i) {
            const double z = seg.z0 + len * i / count;
            const Complex e = field.field_in(seg, z);
            w[static_cast<size_t>(i)] = n * n * std::norm(e);
            // Shared interface points are emitted once.
            if (i > 0 || p.samples.empty() || p.samples.back().z < z) p.samples.push_back({z, e, n});
            if (seg.region == Region::Membrane && std::abs(e) > p.max_diamond_field) {
                p.max_diamond_field = std::abs(e);
                p.max_diamond_position = z;
            }
            if (seg.region == Region::Air) p.max_air_field = std::max(p.max_air_field, std::abs(e));
        }
        const double energy = numerics::trapezoid(w, len / count);
        if (seg.region == Region::Membrane) {
            p.energy_diamond += energy;
            diamond = &seg;
        } else if (seg.region == Region::Air) {
            p.energy_air += energy;
        } else {
            p.energy_mirrors += energy;
        }
    }

    if (diamond) {
        // Polish the sampled maximum.
        const double step = lambda / (2.0 * diamond->index.real()) / pphw;
        const double a = std::max(diamond->z0, p.max_diamond_position - step);
        const double b = std::min(diamond->z1, p.max_diamond_position + step);
        const auto ext = numerics::maximize([&](double z) { return std::norm(field.field_in(*diamond, z)); }, a, b);
        if (std::sqrt(ext.value) > p.max_diamond_field) {
            p.max_diamond_field = std::sqrt(ext.value);
            p.max_diamond_position = ext.x;
        }
    }

    const Complex rho = field.round_trip();
    const double mag = std::abs(rho);
    const double half_width = mag > 0.0 ? (1.0 - mag) / std::sqrt(mag) : kPi;
    p.off_resonance = std::abs(std::arg(rho)) > 2.0 * half_width;
    return p;
}

}  // namespace fpcav
