#include "fpcav/media.hpp"

#include <cmath>
#include <sstream>
#include <string>

#include "fpcav/units.hpp"

namespace fpcav {

OpticalMedium::OpticalMedium(Complex n) : n_(n) {
    if (!(n.real() > 0.0) || !std::isfinite(n.real()))
        throw InvalidConfigError("refractive index must have a positive real part");
    if (n.imag() < 0.0 || !std::isfinite(n.imag()))
        throw InvalidConfigError("refractive index must have a non-negative imaginary part (gain is not modelled)");
}

Layer::Layer(OpticalMedium m, double d) : medium(m), thickness(d) {
    if (!(d > 0.0) || !std::isfinite(d)) throw InvalidConfigError("layer thickness must be positive");
}

RoughInterface::RoughInterface(OpticalMedium a, OpticalMedium b, double s) : n_i(a), n_j(b), sigma(s) {
    if (!(s >= 0.0)) throw InvalidConfigError("interface roughness must be non-negative");
}

std::string_view to_string(Termination t) {
    return t == Termination::HighIndex ? "high" : "low";
}

Termination parse_termination(std::string_view s) {
    if (s == "high" || s == "high-index") return Termination::HighIndex;
    if (s == "low" || s == "low-index") return Termination::LowIndex;
    throw InvalidConfigError("termination must be 'high' or 'low', got '" + std::string(s) + "'");
}

void MirrorStack::validate() const {
    if (layers.empty()) throw InvalidConfigError("mirror stack needs at least one layer");
    const double last = std::abs(layers.back().medium.index());
    const double neighbour = layers.size() > 1 ? std::abs(layers[layers.size() - 2].medium.index())
                                               : std::abs(substrate.index());
    if (termination == Termination::HighIndex && last < neighbour)
        throw InvalidConfigError("stack declared high-index terminated but its last layer has the lower index");
    if (termination == Termination::LowIndex && last > neighbour)
        throw InvalidConfigError("stack declared low-index terminated but its last layer has the higher index");
}

MirrorStack MirrorStack::with_absorption(double kappa) const {
    MirrorStack out = *this;
    for (auto& layer : out.layers) {
        const Complex n = layer.medium.index();
        layer.medium = OpticalMedium(Complex(n.real(), n.imag() + kappa));
    }
    return out;
}

MirrorStack build_quarter_wave_stack(Complex n_high, Complex n_low, const OpticalMedium& substrate,
                                     int layer_count, double design_wavelength,
                                     Termination termination) {
    if (layer_count < 1) throw InvalidConfigError("layer_count must be >= 1");
    if (!(design_wavelength > 0.0)) throw InvalidConfigError("design wavelength must be positive");
    if (n_high.real() < 1.0 || n_low.real() < 1.0)
        throw InvalidConfigError("coating indices must be >= 1");
    if (std::abs(n_high) < std::abs(n_low))
        throw InvalidConfigError("n_high must not be smaller than n_low");

    const OpticalMedium high(n_high);
    const OpticalMedium low(n_low);
    const OpticalMedium& outer = termination == Termination::HighIndex ? high : low;
    const OpticalMedium& inner = termination == Termination::HighIndex ? low : high;

    MirrorStack stack;
    stack.substrate = substrate;
    stack.termination = termination;
    stack.layers.reserve(static_cast<size_t>(layer_count));
    for (int i = 0; i < layer_count; ++i) {
        const bool terminal_material = (layer_count - 1 - i) % 2 == 0;
        const OpticalMedium& m = terminal_material ? outer : inner;
        stack.layers.emplace_back(m, design_wavelength / (4.0 * m.real()));
    }
    return stack;
}

MirrorStack CoatingDesign::build() const {
    auto stack = build_quarter_wave_stack(Complex(n_high, 0.0), Complex(n_low, 0.0), OpticalMedium(substrate),
                                          layer_count, design_wavelength, termination);
    return absorption > 0.0 ? stack.with_absorption(absorption) : stack;
}

InterfaceCoefficients fresnel_coefficients(const OpticalMedium& n_i, const OpticalMedium& n_j) {
    const Complex a = n_i.index();
    const Complex b = n_j.index();
    return {(a - b) / (a + b), 2.0 * a / (a + b)};
}

InterfaceCoefficients rough_interface_coefficients(const RoughInterface& iface, double wavelength) {
    if (!(wavelength > 0.0)) throw InvalidConfigError("wavelength must be positive");
    auto c = fresnel_coefficients(iface.n_i, iface.n_j);
    if (iface.sigma == 0.0) return c;
    const double k = 2.0 * kPi * iface.sigma / wavelength;
    const double xr = k * iface.n_i.real();
    const double xt = k * (iface.n_i.real() - iface.n_j.real());
    c.r *= std::exp(-2.0 * xr * xr);
    c.t *= std::exp(-0.5 * xt * xt);
    return c;
}

MirrorStack parse_stack_table(std::string_view text) {
    MirrorStack stack;
    bool have_termination = false;
    std::istringstream in{std::string(text)};
    std::string line;
    int line_no = 0;
    auto fail = [&](const std::string& msg) {
        throw InvalidConfigError("stack table line " + std::to_string(line_no) + ": " + msg);
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream fields(line);
        std::string first;
        if (!(fields >> first)) continue;
        try {
            if (first == "substrate") {
                double re = 0.0, im = 0.0;
                if (!(fields >> re)) fail("substrate needs an index");
                fields >> im;
                stack.substrate = OpticalMedium(Complex(re, im));
            } else if (first == "termination") {
                std::string t;
                fields >> t;
                stack.termination = parse_termination(t);
                have_termination = true;
            } else {
                const double re = parse_number(first);
                double im = 0.0;
                if (!(fields >> im)) fail("expected index_re index_im thickness");
                std::string rest;
                std::getline(fields, rest);
                const double d = parse_quantity(rest, Dimension::Length);
                stack.layers.emplace_back(OpticalMedium(Complex(re, im)), d);
            }
        } catch (const InvalidConfigError& e) {
            if (std::string(e.what()).rfind("stack table line", 0) == 0) throw;
            fail(e.what());
        }
    }
    if (!have_termination && stack.layers.size() >= 1) {
        const double last = std::abs(stack.layers.back().medium.index());
        const double prev = stack.layers.size() > 1 ? std::abs(stack.layers[stack.layers.size() - 2].medium.index())
                                                    : std::abs(stack.substrate.index());
        stack.termination = last >= prev ? Termination::HighIndex : Termination::LowIndex;
    }
    stack.validate();
    return stack;
}

}  // namespace fpcav
