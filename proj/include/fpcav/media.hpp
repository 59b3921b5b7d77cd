#pragma once

#include <string_view>
#include <vector>

#include "fpcav/core.hpp"

namespace fpcav {

// Refractive index with Im(n) >= 0 meaning absorption (exp(-i w t) convention).
class OpticalMedium {
public:
    OpticalMedium() = default;
    explicit OpticalMedium(Complex n);
    explicit OpticalMedium(double n) : OpticalMedium(Complex(n, 0.0)) {}

    Complex index() const { return n_; }
    double real() const { return n_.real(); }
    double imag() const { return n_.imag(); }
    bool lossless() const { return n_.imag() == 0.0; }

    friend bool operator==(const OpticalMedium&, const OpticalMedium&) = default;

private:
    Complex n_{1.0, 0.0};
};

inline const OpticalMedium kAir{1.0};

struct Layer {
    OpticalMedium medium;
    double thickness = 0.0;  // m

    Layer() = default;
    Layer(OpticalMedium m, double d);
};

enum class Termination { HighIndex, LowIndex };

std::string_view to_string(Termination t);
Termination parse_termination(std::string_view s);

// Layers are ordered from the substrate outwards; the last layer faces the cavity.
struct MirrorStack {
    std::vector<Layer> layers;
    OpticalMedium substrate{1.45};
    Termination termination = Termination::HighIndex;

    void validate() const;
    // Adds i*kappa to every layer index (uniform coating absorption).
    MirrorStack with_absorption(double kappa) const;
};

MirrorStack build_quarter_wave_stack(Complex n_high, Complex n_low, const OpticalMedium& substrate,
                                     int layer_count, double design_wavelength,
                                     Termination termination);

// Coating used throughout when nothing else is configured.
struct CoatingDesign {
    double n_high = 2.10;
    double n_low = 1.472;
    double substrate = 1.45;
    int layer_count = 29;
    double design_wavelength = 637e-9;
    Termination termination = Termination::HighIndex;
    double absorption = 0.0;  // imaginary index added to all layers

    MirrorStack build() const;
};

struct RoughInterface {
    OpticalMedium n_i;
    OpticalMedium n_j;
    double sigma = 0.0;  // rms roughness, m

    RoughInterface() = default;
    RoughInterface(OpticalMedium a, OpticalMedium b, double s);
};

struct InterfaceCoefficients {
    Complex r;
    Complex t;
};

// Normal-incidence Fresnel amplitudes for light travelling from n_i into n_j.
InterfaceCoefficients fresnel_coefficients(const OpticalMedium& n_i, const OpticalMedium& n_j);

// Fresnel amplitudes damped by a Gaussian height distribution of rms sigma.
InterfaceCoefficients rough_interface_coefficients(const RoughInterface& iface, double wavelength);

// Parses an ordered layer table. Recognised lines (blank and '#' lines ignored):
//   substrate <re> [im]
//   termination high|low
//   <index_re> <index_im> <thickness><unit>
MirrorStack parse_stack_table(std::string_view text);

}  // namespace fpcav
