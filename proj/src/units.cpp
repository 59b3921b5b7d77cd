#include "fpcav/units.hpp"

#include <array>
#include <charconv>
#include <utility>

#include "fpcav/core.hpp"

namespace fpcav {
namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

struct UnitEntry {
    std::string_view name;
    Dimension dim;
    double scale;
};

constexpr std::array<UnitEntry, 12> kUnits{{
    {"m", Dimension::Length, 1.0},
    {"mm", Dimension::Length, 1e-3},
    {"um", Dimension::Length, 1e-6},
    {"\xC2\xB5m", Dimension::Length, 1e-6},  // micro sign
    {"\xCE\xBCm", Dimension::Length, 1e-6},  // greek mu
    {"nm", Dimension::Length, 1e-9},
    {"pm", Dimension::Length, 1e-12},
    {"Hz", Dimension::Frequency, 1.0},
    {"kHz", Dimension::Frequency, 1e3},
    {"MHz", Dimension::Frequency, 1e6},
    {"GHz", Dimension::Frequency, 1e9},
    {"THz", Dimension::Frequency, 1e12},
}};

// Splits the leading floating-point literal from the unit suffix.
std::pair<double, std::string_view> split_number(std::string_view s) {
    s = trim(s);
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || ptr == s.data())
        throw InvalidConfigError("expected a number, got '" + std::string(s) + "'");
    return {value, trim(std::string_view(ptr, static_cast<size_t>(s.data() + s.size() - ptr)))};
}

}  // namespace

std::string_view dimension_name(Dimension dim) {
    switch (dim) {
        case Dimension::Length: return "length";
        case Dimension::Frequency: return "frequency";
        case Dimension::Dimensionless: return "dimensionless";
    }
    return "?";
}

double parse_number(std::string_view text) {
    auto [value, unit] = split_number(text);
    if (!unit.empty())
        throw InvalidConfigError("unexpected unit '" + std::string(unit) + "' on a dimensionless value");
    return value;
}

double parse_quantity(std::string_view text, Dimension dim) {
    if (dim == Dimension::Dimensionless) return parse_number(text);
    auto [value, unit] = split_number(text);
    if (unit.empty())
        throw InvalidConfigError("missing unit on " + std::string(dimension_name(dim)) + " value '" +
                                 std::string(trim(text)) + "'");
    for (const auto& u : kUnits) {
        if (u.name != unit) continue;
        if (u.dim != dim)
            throw InvalidConfigError("unit mismatch: '" + std::string(unit) + "' is not a " +
                                     std::string(dimension_name(dim)) + " unit");
        return value * u.scale;
    }
    throw InvalidConfigError("unknown unit '" + std::string(unit) + "'");
}

}  // namespace fpcav
