#pragma once

#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace fpcav {

using Complex = std::complex<double>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kSpeedOfLight = 299792458.0;  // m/s

inline double frequency_of(double wavelength) { return kSpeedOfLight / wavelength; }
inline double wavelength_of(double frequency) { return kSpeedOfLight / frequency; }

// Error hierarchy. Everything thrown by the library derives from Error.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidConfigError : public Error {
public:
    using Error::Error;
};

class StabilityError : public Error {
public:
    using Error::Error;
};

class DegenerateGeometryError : public Error {
public:
    using Error::Error;
};

class InsufficientRangeError : public Error {
public:
    using Error::Error;
};

class ResolutionError : public Error {
public:
    using Error::Error;
};

class AccuracyError : public Error {
public:
    using Error::Error;
};

class FitQualityError : public Error {
public:
    using Error::Error;
};

class InconsistentDataError : public Error {
public:
    using Error::Error;
};

class DegeneracyError : public Error {
public:
    DegeneracyError(const std::string& what, std::string mode_label, double cavity_length)
        : Error(what), mode_label_(std::move(mode_label)), cavity_length_(cavity_length) {}

    const std::string& mode_label() const { return mode_label_; }
    double cavity_length() const { return cavity_length_; }

private:
    std::string mode_label_;
    double cavity_length_;
};

}  // namespace fpcav
